"""Recommendation queries over a frozen model, plus the HTTP service.

Scoring is stateless: a response depends only on the model bytes, the dataset
bytes, and the query. Uploaded datasets live in a bounded in-memory LRU store
keyed by content hash; nothing is persisted.
"""
from __future__ import annotations

import json
import logging
import os
import threading
from collections import Counter, OrderedDict
from dataclasses import dataclass
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import network
from .encoding import FeatureEncoder
from .errors import (
    CandidateLimitExceeded,
    DuplicateAttribute,
    EmptyDataset,
    NoCandidates,
    ParseError,
    VizrecError,
)
from .network import WideDeepModel
from .tabular import AttributeType, Dataset, dataset_from_csv_text, dataset_from_record
from .util import sha256_hex
from .visspace import Visualization, chart_spec, iter_candidates

logger = logging.getLogger(__name__)

CANDIDATE_LIMIT = 200_000
DATASET_STORE_CAPACITY = 256

DEFAULT_MODEL_ENV = "VIZREC_MODEL"
DEFAULT_BIND_ENV = "VIZREC_BIND"
DEFAULT_BIND = "127.0.0.1:8080"


@dataclass(frozen=True)
class RecommendQuery:
    """Interactive constraints; empty sets mean unconstrained."""

    top_k: int = 10
    required_attribute_types: tuple = ()
    required_attributes: frozenset = frozenset()
    allowed_marks: frozenset = frozenset()
    allowed_aggregates: frozenset = frozenset()

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")

    @classmethod
    def from_dict(cls, payload: dict) -> "RecommendQuery":
        return cls(
            top_k=int(payload.get("top_k", 10)),
            required_attribute_types=tuple(
                AttributeType(t).value for t in payload.get("required_attribute_types", ())
            ),
            required_attributes=frozenset(payload.get("required_attributes", ())),
            allowed_marks=frozenset(payload.get("allowed_marks", ())),
            allowed_aggregates=frozenset(payload.get("allowed_aggregates", ())),
        )


@dataclass(frozen=True)
class Recommendation:
    rank: int
    score: float
    visualization: Visualization
    chart_spec: dict

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "score": self.score,
            "visualization": {
                "dataset_id": self.visualization.combo.dataset_id,
                "attributes": list(self.visualization.combo.attribute_names),
                "config_id": self.visualization.config_id,
            },
            "chart_spec": self.chart_spec,
        }


def _candidate_matches(query: RecommendQuery, dataset: Dataset, vis: Visualization) -> bool:
    names = vis.combo.attribute_names
    if query.required_attributes and not query.required_attributes.issubset(names):
        return False
    if query.required_attribute_types:
        bound = Counter(dataset.attribute(n).type.value for n in names)
        if bound != Counter(query.required_attribute_types):
            return False
    return True


def _config_passes(query: RecommendQuery, config) -> bool:
    if query.allowed_marks and config.mark not in query.allowed_marks:
        return False
    if query.allowed_aggregates:
        used = {c.aggregate for c in config.channels if c.aggregate != "none"}
        if not used.issubset(query.allowed_aggregates):
            return False
    return True


def constrained_candidates(
    model: WideDeepModel,
    dataset: Dataset,
    query: RecommendQuery,
    limit: int = CANDIDATE_LIMIT,
) -> list:
    """Enumerate candidates satisfying the query, stopping past the guard."""
    candidates = []
    for vis in iter_candidates(
        dataset,
        model.shape.vocab,
        max_arity=model.shape.max_arity,
        config_filter=lambda c: _config_passes(query, c),
    ):
        if not _candidate_matches(query, dataset, vis):
            continue
        candidates.append(vis)
        if len(candidates) > limit:
            raise CandidateLimitExceeded(bound=len(candidates), limit=limit)
    return candidates


def recommend(
    model: WideDeepModel,
    dataset: Dataset,
    query: RecommendQuery,
    encoder: Optional[FeatureEncoder] = None,
) -> list:
    """Top-k recommendations for a dataset under the query constraints.

    Candidates are scored by the frozen model and ranked by score with
    canonical-key tie-breaking; deterministic for fixed inputs.
    """
    candidates = constrained_candidates(model, dataset, query)
    if not candidates:
        raise NoCandidates(_no_candidates_message(query))
    enc = encoder if encoder is not None else model.encoder()
    bundles = [enc.encode(dataset, vis) for vis in candidates]
    scores = network.score_bundles(model, enc, bundles)
    order = sorted(
        range(len(candidates)), key=lambda i: (-scores[i], candidates[i].key)
    )
    results = []
    for rank, index in enumerate(order[: query.top_k], start=1):
        vis = candidates[index]
        config = model.shape.vocab.config(vis.config_id)
        results.append(
            Recommendation(
                rank=rank,
                score=float(scores[index]),
                visualization=vis,
                chart_spec=chart_spec(vis, config),
            )
        )
    return results


def _no_candidates_message(query: RecommendQuery) -> str:
    parts = []
    if query.required_attribute_types:
        parts.append(f"required_attribute_types={sorted(query.required_attribute_types)}")
    if query.required_attributes:
        parts.append(f"required_attributes={sorted(query.required_attributes)}")
    if query.allowed_marks:
        parts.append(f"allowed_marks={sorted(query.allowed_marks)}")
    if query.allowed_aggregates:
        parts.append(f"allowed_aggregates={sorted(query.allowed_aggregates)}")
    detail = ", ".join(parts) if parts else "no constraints"
    return f"constraints eliminate every candidate ({detail})"


class DatasetStore:
    """Bounded LRU of uploaded datasets keyed by content hash."""

    def __init__(self, capacity: int = DATASET_STORE_CAPACITY):
        self._capacity = capacity
        self._entries: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def put(self, content: bytes, dataset: Dataset) -> str:
        dataset_id = sha256_hex(content)[:16]
        with self._lock:
            self._entries[dataset_id] = dataset
            self._entries.move_to_end(dataset_id)
            while len(self._entries) > self._capacity:
                self._entries.popitem(last=False)
        return dataset_id

    def get(self, dataset_id: str) -> Optional[Dataset]:
        with self._lock:
            dataset = self._entries.get(dataset_id)
            if dataset is not None:
                self._entries.move_to_end(dataset_id)
            return dataset


def parse_dataset_payload(content: bytes, dataset_id: str) -> Dataset:
    """CSV text or a JSON dataset record; type inference applies either way."""
    text = content.decode("utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            record = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON dataset payload: {exc}") from exc
        if "dataset" in record:
            record = record["dataset"]
        record = dict(record)
        record["id"] = dataset_id
        return dataset_from_record(record)
    return dataset_from_csv_text(dataset_id, text)


def create_app(model: WideDeepModel) -> FastAPI:
    """FastAPI application over a frozen model snapshot."""
    app = FastAPI(title="vizrec", version="0.1.0")
    store = DatasetStore()
    encoder = model.encoder()

    def error_response(status: int, error: str, detail: str, **extra):
        return JSONResponse(
            status_code=status, content={"error": error, "detail": detail, **extra}
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "vocabulary_size": len(model.shape.vocab)}

    @app.get("/configs")
    def configs():
        return json.loads(model.shape.vocab.to_json())

    @app.post("/datasets")
    async def upload_dataset(request: Request):
        content = await request.body()
        dataset_id = sha256_hex(content)[:16]
        try:
            dataset = parse_dataset_payload(content, dataset_id)
        except (ParseError, EmptyDataset, DuplicateAttribute) as exc:
            return error_response(400, type(exc).__name__, str(exc))
        store.put(content, dataset)
        return {
            "dataset_id": dataset_id,
            "attributes": _attribute_summaries(dataset),
            "row_count": dataset.row_count,
        }

    @app.get("/datasets/{dataset_id}/attributes")
    def dataset_attributes(dataset_id: str):
        dataset = store.get(dataset_id)
        if dataset is None:
            return error_response(404, "UnknownDataset", f"no dataset {dataset_id!r}")
        return {
            "dataset_id": dataset_id,
            "row_count": dataset.row_count,
            "attributes": _attribute_summaries(dataset),
        }

    @app.post("/datasets/{dataset_id}/recommendations")
    async def recommendations(dataset_id: str, request: Request):
        dataset = store.get(dataset_id)
        if dataset is None:
            return error_response(404, "UnknownDataset", f"no dataset {dataset_id!r}")
        try:
            payload = await request.json()
        except Exception as exc:
            return error_response(400, "ParseError", f"invalid query body: {exc}")
        try:
            query = RecommendQuery.from_dict(payload or {})
        except (ValueError, KeyError) as exc:
            return error_response(400, "ParseError", f"invalid query: {exc}")
        try:
            results = recommend(model, dataset, query, encoder=encoder)
        except CandidateLimitExceeded as exc:
            return error_response(
                413,
                "CandidateLimitExceeded",
                str(exc),
                bound=exc.bound,
                limit=exc.limit,
            )
        except NoCandidates as exc:
            return {
                "dataset_id": dataset_id,
                "recommendations": [],
                "empty_reason": str(exc),
            }
        except VizrecError as exc:
            return error_response(400, type(exc).__name__, str(exc))
        return {
            "dataset_id": dataset_id,
            "recommendations": [r.to_dict() for r in results],
        }

    return app


def _attribute_summaries(dataset: Dataset) -> list:
    return [
        {
            "name": a.name,
            "type": a.type.value,
            "cardinality": a.cardinality,
            "missing": a.missing_count,
        }
        for a in dataset.attributes
    ]


def serve(model_path: str, bind_addr: Optional[str] = None) -> None:
    """Run the HTTP service on a frozen model snapshot."""
    import uvicorn

    model = network.load(model_path)
    bind = bind_addr or os.environ.get(DEFAULT_BIND_ENV, DEFAULT_BIND)
    host, _, port = bind.partition(":")
    app = create_app(model)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080))
