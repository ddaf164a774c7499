"""Small shared helpers."""
from __future__ import annotations

import hashlib
import json


def stable_seed(*parts) -> int:
    """Derive a 63-bit seed from arbitrary parts, stable across runs and platforms."""
    blob = json.dumps([str(p) for p in parts]).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little") >> 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
