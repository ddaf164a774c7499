"""The scoring model: wide linear part, deep MLP part, sigmoid combination.

Forward and backward passes are hand-rolled over numpy. The model file is a
single versioned binary container holding the schema, normalizer, vocabulary,
cross-product masks, and all parameter arrays as little-endian float64.
"""
from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .encoding import CrossProductSpec, FeatureBundle, FeatureEncoder
from .errors import CorruptFile, InvalidShape, ShapeMismatch, VersionMismatch
from .metafeatures import MetaFeatureSchema, Normalizer
from .util import canonical_json, sha256_hex
from .visspace import ConfigVocabulary

MAGIC = b"VIZRECMODEL"
FORMAT_VERSION = 1

# Scores are clamped into [EPS, 1-EPS] so the log loss stays finite.
SCORE_EPS = 1e-7

MODES = ("full", "wide_only", "deep_only")


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    # two-branch form avoids overflow in exp for large |z|
    return np.where(
        z >= 0,
        1.0 / (1.0 + np.exp(-np.clip(z, 0, None))),
        np.exp(np.clip(z, None, 0)) / (1.0 + np.exp(np.clip(z, None, 0))),
    )


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


@dataclass
class WideParams:
    w: np.ndarray  # (wide_in,)
    b: float


@dataclass
class Layer:
    w: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str  # relu | sigmoid | identity


@dataclass
class DeepParams:
    layers: list
    embedding: np.ndarray  # (embed_dim, vocab_size)


@dataclass(frozen=True)
class ModelShape:
    """Everything init needs to size the parameter arrays."""

    schema: MetaFeatureSchema
    normalizer: Normalizer
    vocab: ConfigVocabulary
    cross_spec: CrossProductSpec
    hidden: tuple = (256, 64, 16)
    embed_dim: int = 16
    max_arity: int = 3
    bins: int = 10
    mode: str = "full"

    def validate(self) -> None:
        if self.mode not in MODES:
            raise InvalidShape(f"unknown mode {self.mode!r}")
        if self.embed_dim < 1 or self.max_arity < 1 or self.bins < 1:
            raise InvalidShape("embed_dim, max_arity and bins must be positive")
        if any(h < 1 for h in self.hidden):
            raise InvalidShape(f"hidden widths must be positive: {self.hidden}")
        if self.cross_spec.s_length != self.s_length:
            raise InvalidShape(
                f"cross spec built for |s|={self.cross_spec.s_length}, "
                f"model expects {self.s_length}"
            )

    @property
    def sc_length(self) -> int:
        return len(self.vocab) + len(self.vocab.field_value_keys())

    @property
    def sx_length(self) -> int:
        return self.max_arity * self.schema.k * self.bins

    @property
    def s_length(self) -> int:
        return self.sc_length + self.sx_length

    @property
    def wide_in(self) -> int:
        return self.s_length + len(self.cross_spec)

    @property
    def deep_in(self) -> int:
        return self.embed_dim + self.max_arity * self.schema.k


@dataclass
class WideDeepModel:
    shape: ModelShape
    wide: WideParams
    deep: DeepParams
    w_wide: float
    w_deep: float
    _mask_lookup: Optional[dict] = field(default=None, repr=False)

    @property
    def mode(self) -> str:
        return self.shape.mode

    def encoder(self) -> FeatureEncoder:
        return FeatureEncoder(
            self.shape.schema,
            self.shape.normalizer,
            self.shape.vocab,
            max_arity=self.shape.max_arity,
            bins=self.shape.bins,
        )

    def masks_by_config(self) -> dict:
        """Cross masks grouped by the configuration one-hot position they test."""
        if self._mask_lookup is None:
            lookup: dict = {}
            for k, mask in enumerate(self.shape.cross_spec.masks):
                config_bits = [i for i in mask if i < len(self.shape.vocab)]
                anchor = config_bits[0] if config_bits else None
                lookup.setdefault(anchor, []).append((k, mask))
            self._mask_lookup = lookup
        return self._mask_lookup

    def parameter_arrays(self) -> list:
        """(name, array) pairs in serialization order."""
        arrays = [("wide.w", self.wide.w), ("wide.b", np.array([self.wide.b]))]
        for i, layer in enumerate(self.deep.layers):
            arrays.append((f"deep.{i}.w", layer.w))
            arrays.append((f"deep.{i}.b", layer.b))
        arrays.append(("embedding", self.deep.embedding))
        arrays.append(("combiner", np.array([self.w_wide, self.w_deep])))
        return arrays


@dataclass
class Gradients:
    wide_w: np.ndarray
    wide_b: float
    layers: list  # [(gW, gb)]
    embedding: np.ndarray
    w_wide: float
    w_deep: float


def init(shape: ModelShape, seed: int) -> WideDeepModel:
    """Fresh parameters: fan-balanced uniform weights, zero biases, unit
    combiner weights. Deterministic per seed."""
    shape.validate()
    rng = np.random.default_rng(seed)

    def glorot(fan_out: int, fan_in: int, size) -> np.ndarray:
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=size)

    wide = WideParams(w=glorot(1, shape.wide_in, shape.wide_in), b=0.0)
    layers = []
    widths = [shape.deep_in, *shape.hidden, 1]
    for i, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
        activation = "relu" if i < len(widths) - 2 else "identity"
        layers.append(
            Layer(
                w=glorot(fan_out, fan_in, (fan_out, fan_in)),
                b=np.zeros(fan_out),
                activation=activation,
            )
        )
    embedding = glorot(shape.embed_dim, len(shape.vocab), (shape.embed_dim, len(shape.vocab)))
    return WideDeepModel(shape=shape, wide=wide, deep=DeepParams(layers, embedding), w_wide=1.0, w_deep=1.0)


def _check_bundle(model: WideDeepModel, bundle: FeatureBundle) -> None:
    shape = model.shape
    if bundle.d_x.shape != (shape.max_arity * shape.schema.k,):
        raise ShapeMismatch(
            f"d_x has shape {bundle.d_x.shape}, expected ({shape.deep_in - shape.embed_dim},)"
        )
    if not 0 <= bundle.config_index < len(shape.vocab):
        raise ShapeMismatch(f"config index {bundle.config_index} out of range")
    if len(bundle.sx_indices) and bundle.sx_indices.max() >= shape.sx_length:
        raise ShapeMismatch("sparse attribute indices out of range")
    if len(bundle.sc_indices) and bundle.sc_indices.max() >= shape.sc_length:
        raise ShapeMismatch("sparse configuration indices out of range")


def forward(model: WideDeepModel, bundle: FeatureBundle) -> "tuple[float, dict]":
    """Score one bundle; the trace retains activations for backward."""
    _check_bundle(model, bundle)
    shape = model.shape
    s_active = np.concatenate(
        [bundle.sc_indices, shape.sc_length + bundle.sx_indices]
    ).astype(np.int64)
    active_set = set(s_active.tolist())

    cross_active = []
    lookup = model.masks_by_config()
    for anchor in (bundle.config_index, None):
        for k, mask in lookup.get(anchor, ()):
            if all(i in active_set for i in mask):
                cross_active.append(k)
    cross_active = np.asarray(sorted(cross_active), dtype=np.int64)

    f_wide = 0.0
    if model.mode != "deep_only":
        f_wide = float(
            model.wide.w[s_active].sum()
            + model.wide.w[shape.s_length + cross_active].sum()
            + model.wide.b
        )

    trace = {"s_active": s_active, "cross_active": cross_active, "f_wide": f_wide}
    f_deep = 0.0
    if model.mode != "wide_only":
        d0 = np.concatenate([model.deep.embedding[:, bundle.config_index], bundle.d_x])
        acts, pres = [d0], []
        current = d0
        for layer in model.deep.layers:
            pre = layer.w @ current + layer.b
            pres.append(pre)
            current = relu(pre) if layer.activation == "relu" else (
                sigmoid(pre) if layer.activation == "sigmoid" else pre
            )
            acts.append(current)
        f_deep = float(current[0])
        trace.update({"acts": acts, "pres": pres})
    trace["f_deep"] = f_deep

    z = model.w_wide * f_wide + model.w_deep * f_deep
    if model.mode == "wide_only":
        z = model.w_wide * f_wide
    elif model.mode == "deep_only":
        z = model.w_deep * f_deep
    score = float(np.clip(sigmoid(np.array([z]))[0], SCORE_EPS, 1.0 - SCORE_EPS))
    trace.update({"z": z, "score": score})
    return score, trace


def loss_value(score: float, label: int) -> float:
    score = min(max(score, SCORE_EPS), 1.0 - SCORE_EPS)
    return -(label * np.log(score) + (1 - label) * np.log(1.0 - score))


def backward(model: WideDeepModel, bundle: FeatureBundle, trace: dict, label: int) -> Gradients:
    """Analytic gradients of the per-example log loss for every parameter."""
    shape = model.shape
    dz = trace["score"] - label

    wide_w = np.zeros_like(model.wide.w)
    wide_b = 0.0
    g_w_wide = 0.0
    if model.mode != "deep_only":
        coef = dz * model.w_wide
        wide_w[trace["s_active"]] += coef
        wide_w[shape.s_length + trace["cross_active"]] += coef
        wide_b = coef
        g_w_wide = dz * trace["f_wide"]

    layer_grads = [(np.zeros_like(l.w), np.zeros_like(l.b)) for l in model.deep.layers]
    emb_grad = np.zeros_like(model.deep.embedding)
    g_w_deep = 0.0
    if model.mode != "wide_only":
        g_w_deep = dz * trace["f_deep"]
        delta = np.array([dz * model.w_deep])
        for i in reversed(range(len(model.deep.layers))):
            layer = model.deep.layers[i]
            if layer.activation == "relu":
                delta = delta * (trace["pres"][i] > 0)
            elif layer.activation == "sigmoid":
                act = sigmoid(trace["pres"][i])
                delta = delta * act * (1.0 - act)
            layer_grads[i] = (np.outer(delta, trace["acts"][i]), delta.copy())
            delta = layer.w.T @ delta
        emb_grad[:, bundle.config_index] = delta[: shape.embed_dim]

    return Gradients(
        wide_w=wide_w,
        wide_b=wide_b,
        layers=layer_grads,
        embedding=emb_grad,
        w_wide=g_w_wide,
        w_deep=g_w_deep,
    )


# ---------------------------------------------------------------------------
# Batched paths used by the trainer and bulk scorers
# ---------------------------------------------------------------------------


@dataclass
class Batch:
    """Pre-assembled dense inputs for a slice of bundles."""

    dx: np.ndarray  # (B, max_arity*K)
    config_idx: np.ndarray  # (B,)
    s_and_cross: np.ndarray  # (B, wide_in)


def make_batch(
    model: WideDeepModel, encoder: FeatureEncoder, bundles: Sequence[FeatureBundle]
) -> Batch:
    config_idx = np.asarray([b.config_index for b in bundles], dtype=np.int64)
    if model.mode == "deep_only":
        s_and_cross = np.zeros((len(bundles), 0))
    else:
        s_dense = encoder.batch_dense_s(bundles)
        cross = encoder.batch_cross(s_dense, model.shape.cross_spec)
        s_and_cross = np.concatenate([s_dense, cross], axis=1)
    if model.mode == "wide_only":
        dx = np.zeros((len(bundles), 0))
    else:
        dx = encoder.batch_dense_dx(bundles)
    return Batch(dx=dx, config_idx=config_idx, s_and_cross=s_and_cross)


def forward_batch(model: WideDeepModel, batch: Batch) -> "tuple[np.ndarray, dict]":
    f_wide = np.zeros(len(batch.config_idx))
    if model.mode != "deep_only":
        f_wide = batch.s_and_cross @ model.wide.w + model.wide.b

    cache = {"f_wide": f_wide}
    f_deep = np.zeros(len(batch.config_idx))
    if model.mode != "wide_only":
        d0 = np.concatenate(
            [model.deep.embedding[:, batch.config_idx].T, batch.dx], axis=1
        )
        acts, pres = [d0], []
        current = d0
        for layer in model.deep.layers:
            pre = current @ layer.w.T + layer.b
            pres.append(pre)
            current = relu(pre) if layer.activation == "relu" else (
                sigmoid(pre) if layer.activation == "sigmoid" else pre
            )
            acts.append(current)
        f_deep = current[:, 0]
        cache.update({"acts": acts, "pres": pres})
    cache["f_deep"] = f_deep

    if model.mode == "wide_only":
        z = model.w_wide * f_wide
    elif model.mode == "deep_only":
        z = model.w_deep * f_deep
    else:
        z = model.w_wide * f_wide + model.w_deep * f_deep
    scores = np.clip(sigmoid(z), SCORE_EPS, 1.0 - SCORE_EPS)
    cache["scores"] = scores
    return scores, cache


def backward_batch(
    model: WideDeepModel, batch: Batch, cache: dict, labels: np.ndarray
) -> Gradients:
    """Mean-over-batch gradients; reduction order is fixed for determinism."""
    n = len(labels)
    dz = (cache["scores"] - labels) / n

    wide_w = np.zeros_like(model.wide.w)
    wide_b = 0.0
    g_w_wide = 0.0
    if model.mode != "deep_only":
        wide_w = model.w_wide * (dz @ batch.s_and_cross)
        wide_b = model.w_wide * float(dz.sum())
        g_w_wide = float(dz @ cache["f_wide"])

    layer_grads = [(np.zeros_like(l.w), np.zeros_like(l.b)) for l in model.deep.layers]
    emb_grad = np.zeros_like(model.deep.embedding)
    g_w_deep = 0.0
    if model.mode != "wide_only":
        g_w_deep = float(dz @ cache["f_deep"])
        delta = np.outer(dz * model.w_deep, np.ones(1))
        for i in reversed(range(len(model.deep.layers))):
            layer = model.deep.layers[i]
            if layer.activation == "relu":
                delta = delta * (cache["pres"][i] > 0)
            elif layer.activation == "sigmoid":
                act = sigmoid(cache["pres"][i])
                delta = delta * act * (1.0 - act)
            layer_grads[i] = (delta.T @ cache["acts"][i], delta.sum(axis=0))
            delta = delta @ layer.w
        np.add.at(emb_grad.T, batch.config_idx, delta[:, : model.shape.embed_dim])

    return Gradients(
        wide_w=wide_w,
        wide_b=wide_b,
        layers=layer_grads,
        embedding=emb_grad,
        w_wide=g_w_wide,
        w_deep=g_w_deep,
    )


def apply_gradients(model: WideDeepModel, grads: Gradients, lr: float) -> None:
    model.wide.w -= lr * grads.wide_w
    model.wide.b -= lr * grads.wide_b
    for layer, (gw, gb) in zip(model.deep.layers, grads.layers):
        layer.w -= lr * gw
        layer.b -= lr * gb
    model.deep.embedding -= lr * grads.embedding
    model.w_wide -= lr * grads.w_wide
    model.w_deep -= lr * grads.w_deep


def score_bundles(
    model: WideDeepModel,
    encoder: FeatureEncoder,
    bundles: Sequence[FeatureBundle],
    batch_size: int = 256,
) -> np.ndarray:
    """Frozen-model scoring of many bundles."""
    scores = np.empty(len(bundles))
    for start in range(0, len(bundles), batch_size):
        chunk = bundles[start : start + batch_size]
        batch = make_batch(model, encoder, chunk)
        scores[start : start + len(chunk)], _ = forward_batch(model, batch)
    return scores


def snapshot_parameters(model: WideDeepModel) -> list:
    return [(name, arr.copy()) for name, arr in model.parameter_arrays()]


def restore_parameters(model: WideDeepModel, snapshot: list) -> None:
    for (name, saved), (_, live) in zip(snapshot, model.parameter_arrays()):
        live[...] = saved
    model.wide.b = float(dict(snapshot)["wide.b"][0])
    combiner = dict(snapshot)["combiner"]
    model.w_wide, model.w_deep = float(combiner[0]), float(combiner[1])


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _vocab_payload(vocab: ConfigVocabulary) -> dict:
    return json.loads(vocab.to_json())


def save(model: WideDeepModel, path) -> None:
    shape = model.shape
    vocab_payload = _vocab_payload(shape.vocab)
    arrays = model.parameter_arrays() + [
        ("norm.mins", shape.normalizer.mins),
        ("norm.maxs", shape.normalizer.maxs),
    ]
    header = {
        "hyper": {
            "hidden": list(shape.hidden),
            "embed_dim": shape.embed_dim,
            "max_arity": shape.max_arity,
            "bins": shape.bins,
            "mode": shape.mode,
        },
        "schema": json.loads(shape.schema.to_json()),
        "normalizer_schema_hash": shape.normalizer.schema_hash,
        "vocab": vocab_payload,
        "vocab_sha256": sha256_hex(canonical_json(vocab_payload).encode("utf-8")),
        "cross_spec": shape.cross_spec.to_dict(),
        "arrays": [{"name": name, "shape": list(arr.shape)} for name, arr in arrays],
    }
    header_bytes = json.dumps(header).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<I", FORMAT_VERSION))
        handle.write(struct.pack("<Q", len(header_bytes)))
        handle.write(header_bytes)
        for _, arr in arrays:
            handle.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load(path) -> WideDeepModel:
    with open(path, "rb") as handle:
        blob = handle.read()
    stream = io.BytesIO(blob)
    magic = stream.read(len(MAGIC))
    if magic != MAGIC:
        raise CorruptFile(f"{path}: bad magic {magic!r}")
    raw_version = stream.read(4)
    if len(raw_version) < 4:
        raise CorruptFile(f"{path}: truncated before version field")
    version = struct.unpack("<I", raw_version)[0]
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: file format version {version}, this build reads {FORMAT_VERSION}"
        )
    raw_len = stream.read(8)
    if len(raw_len) < 8:
        raise CorruptFile(f"{path}: truncated header length")
    header_len = struct.unpack("<Q", raw_len)[0]
    header_bytes = stream.read(header_len)
    if len(header_bytes) < header_len:
        raise CorruptFile(f"{path}: truncated header")
    try:
        header = json.loads(header_bytes)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"{path}: header is not valid JSON: {exc}") from exc

    vocab_payload = header["vocab"]
    digest = sha256_hex(canonical_json(vocab_payload).encode("utf-8"))
    if digest != header["vocab_sha256"]:
        raise CorruptFile(f"{path}: vocabulary hash mismatch")
    vocab = ConfigVocabulary.from_json(json.dumps(vocab_payload))
    schema = MetaFeatureSchema.from_json(json.dumps(header["schema"]))

    arrays = {}
    for entry in header["arrays"]:
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        raw = stream.read(count * 8)
        if len(raw) < count * 8:
            raise CorruptFile(f"{path}: truncated array {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(entry["shape"]).copy()

    normalizer = Normalizer(
        mins=arrays["norm.mins"],
        maxs=arrays["norm.maxs"],
        schema_hash=header["normalizer_schema_hash"],
    )
    hyper = header["hyper"]
    shape = ModelShape(
        schema=schema,
        normalizer=normalizer,
        vocab=vocab,
        cross_spec=CrossProductSpec.from_dict(header["cross_spec"]),
        hidden=tuple(hyper["hidden"]),
        embed_dim=hyper["embed_dim"],
        max_arity=hyper["max_arity"],
        bins=hyper["bins"],
        mode=hyper["mode"],
    )
    shape.validate()
    layers = []
    i = 0
    while f"deep.{i}.w" in arrays:
        activation = "relu" if f"deep.{i + 1}.w" in arrays else "identity"
        layers.append(Layer(w=arrays[f"deep.{i}.w"], b=arrays[f"deep.{i}.b"], activation=activation))
        i += 1
    combiner = arrays["combiner"]
    return WideDeepModel(
        shape=shape,
        wide=WideParams(w=arrays["wide.w"], b=float(arrays["wide.b"][0])),
        deep=DeepParams(layers=layers, embedding=arrays["embedding"]),
        w_wide=float(combiner[0]),
        w_deep=float(combiner[1]),
    )
