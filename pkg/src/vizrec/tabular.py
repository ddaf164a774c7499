"""Tabular data model: typed attributes, datasets, and the training corpus.

Datasets and corpora are immutable after load and safe to share across
threads. The corpus file format is newline-delimited JSON records, one
dataset (with its visualizations) per line.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import random
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Sequence, Union

from .errors import (
    DanglingReference,
    DuplicateAttribute,
    EmptyDataset,
    ParseError,
    TooFewDatasets,
)

if TYPE_CHECKING:  # circular at runtime: visspace builds on this module
    from .visspace import Visualization

logger = logging.getLogger(__name__)

Cell = Union[float, str, None]

# Datasets larger than this are truncated on load; column statistics are
# O(n log n) and the cap keeps interactive use responsive.
ROW_CAP = 100_000

MISSING_TOKENS = {"", "na", "n/a", "nan", "null", "none"}

# Fixed, deterministic set of accepted timestamp layouts.
_DATE_FORMATS = (
    "%Y-%m-%d",
    "%Y/%m/%d",
    "%m/%d/%Y",
    "%d-%m-%Y",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%SZ",
)


class AttributeType(str, Enum):
    """Semantic type of a column; serialized names are lowercase."""

    QUANTITATIVE = "quantitative"
    NOMINAL = "nominal"
    ORDINAL = "ordinal"
    TEMPORAL = "temporal"


def parse_timestamp(cell: str) -> Optional[datetime]:
    """Parse a cell against the accepted timestamp layouts; None if none fit."""
    text = str(cell).strip()
    if not text or _parse_number(text) is not None:
        return None
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        return None


def _parse_number(cell) -> Optional[float]:
    if isinstance(cell, bool):
        return None
    if isinstance(cell, (int, float)):
        value = float(cell)
        return value if value == value and abs(value) != float("inf") else None
    try:
        value = float(str(cell).strip())
    except (TypeError, ValueError):
        return None
    if value != value or abs(value) == float("inf"):
        return None
    return value


def _is_missing(cell) -> bool:
    if cell is None:
        return True
    return isinstance(cell, str) and cell.strip().lower() in MISSING_TOKENS


@dataclass(frozen=True)
class Attribute:
    """A named, typed column. Missing cells are explicit ``None`` markers."""

    name: str
    type: AttributeType
    values: tuple

    def __post_init__(self):
        if not self.name:
            raise ParseError("attribute name must be non-empty")

    @property
    def row_count(self) -> int:
        return len(self.values)

    def non_missing(self) -> list:
        return [v for v in self.values if v is not None]

    @property
    def cardinality(self) -> int:
        return len(set(self.non_missing()))

    @property
    def missing_count(self) -> int:
        return sum(1 for v in self.values if v is None)


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of attributes sharing one row count."""

    id: str
    attributes: tuple

    def __post_init__(self):
        if not self.attributes:
            raise EmptyDataset(f"dataset {self.id!r} has no attributes")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DuplicateAttribute(f"dataset {self.id!r} repeats {dupes}")
        counts = {a.row_count for a in self.attributes}
        if len(counts) > 1:
            raise ParseError(f"dataset {self.id!r} has ragged columns: {counts}")
        if self.row_count == 0:
            raise EmptyDataset(f"dataset {self.id!r} has zero rows")

    @property
    def row_count(self) -> int:
        return self.attributes[0].row_count

    @property
    def attribute_names(self) -> tuple:
        return tuple(a.name for a in self.attributes)

    def attribute(self, name: str) -> Attribute:
        for a in self.attributes:
            if a.name == name:
                return a
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(a.name == name for a in self.attributes)


@dataclass(frozen=True)
class Corpus:
    """Datasets plus their user-created (positive) visualizations."""

    datasets: tuple
    visualizations: dict = field(default_factory=dict)

    @property
    def dataset_ids(self) -> tuple:
        return tuple(d.id for d in self.datasets)

    def dataset(self, dataset_id: str) -> Dataset:
        for d in self.datasets:
            if d.id == dataset_id:
                return d
        raise KeyError(dataset_id)

    def visualizations_of(self, dataset_id: str) -> list:
        return list(self.visualizations.get(dataset_id, ()))

    @property
    def total_visualizations(self) -> int:
        return sum(len(v) for v in self.visualizations.values())


def infer_type(cells: Sequence) -> AttributeType:
    """Infer a column type from raw cells.

    Precedence: all numeric -> quantitative, all timestamps -> temporal,
    otherwise nominal. Ordinal is never inferred; it is only reachable via
    explicit overrides since raw data carries no ordering evidence.
    """
    present = [c for c in cells if not _is_missing(c)]
    if not present:
        return AttributeType.NOMINAL
    if all(_parse_number(c) is not None for c in present):
        return AttributeType.QUANTITATIVE
    if all(parse_timestamp(str(c)) is not None for c in present):
        return AttributeType.TEMPORAL
    return AttributeType.NOMINAL


def _canonical_cells(name: str, cells: Sequence, atype: AttributeType) -> tuple:
    """Normalize raw cells for one column: None markers, floats for quantitative."""
    out = []
    for c in cells:
        if _is_missing(c):
            out.append(None)
            continue
        if atype is AttributeType.QUANTITATIVE:
            value = _parse_number(c)
            if value is None:
                raise ParseError(f"column {name!r}: {c!r} is not a finite number")
            out.append(value)
        elif atype is AttributeType.TEMPORAL:
            if parse_timestamp(str(c)) is None:
                raise ParseError(f"column {name!r}: {c!r} is not a timestamp")
            out.append(str(c))
        else:
            out.append(str(c) if not isinstance(c, (int, float)) else c)
    return tuple(out)


def build_attribute(
    name: str, cells: Sequence, atype: Optional[AttributeType] = None
) -> Attribute:
    resolved = atype if atype is not None else infer_type(cells)
    return Attribute(name=name, type=resolved, values=_canonical_cells(name, cells, resolved))


def _columns_from_csv(text: str, delimiter: str) -> "list[tuple[str, list]]":
    try:
        rows = list(csv.reader(io.StringIO(text), delimiter=delimiter))
    except csv.Error as exc:
        raise ParseError(f"malformed delimited file: {exc}") from exc
    if not rows:
        raise EmptyDataset("file has no header row")
    header, data = rows[0], [r for r in rows[1:] if r]  # blank lines are skipped
    if not header or all(not h.strip() for h in header):
        raise EmptyDataset("file has zero columns")
    if any(len(r) != len(header) for r in data):
        raise ParseError("row length does not match header")
    if len(data) > ROW_CAP:
        logger.warning("dataset truncated to %d rows (had %d)", ROW_CAP, len(data))
        data = data[:ROW_CAP]
    return [(h.strip(), [r[i] for r in data]) for i, h in enumerate(header)]


def dataset_from_columns(
    dataset_id: str,
    columns: "Sequence[tuple[str, Sequence]]",
    type_overrides: Optional[dict] = None,
    declared_types: Optional[dict] = None,
) -> Dataset:
    overrides = {k: AttributeType(v) for k, v in (type_overrides or {}).items()}
    declared = {k: AttributeType(v) for k, v in (declared_types or {}).items()}
    attrs = []
    for name, cells in columns:
        atype = overrides.get(name, declared.get(name))
        attrs.append(build_attribute(name, cells, atype))
    return Dataset(id=dataset_id, attributes=tuple(attrs))


def dataset_from_record(record: dict, type_overrides: Optional[dict] = None) -> Dataset:
    """Build a Dataset from the corpus-record dataset object."""
    try:
        dataset_id = record["id"]
        columns = [(c["name"], c["values"]) for c in record["columns"]]
        declared = {c["name"]: c["type"] for c in record["columns"] if "type" in c}
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed dataset record: {exc}") from exc
    capped = []
    for name, cells in columns:
        if len(cells) > ROW_CAP:
            logger.warning("column %r truncated to %d rows", name, ROW_CAP)
            cells = cells[:ROW_CAP]
        capped.append((name, cells))
    return dataset_from_columns(dataset_id, capped, type_overrides, declared)


def dataset_to_record(dataset: Dataset) -> dict:
    return {
        "id": dataset.id,
        "columns": [
            {"name": a.name, "type": a.type.value, "values": list(a.values)}
            for a in dataset.attributes
        ],
    }


def dataset_from_csv_text(
    dataset_id: str,
    text: str,
    delimiter: str = ",",
    type_overrides: Optional[dict] = None,
) -> Dataset:
    return dataset_from_columns(dataset_id, _columns_from_csv(text, delimiter), type_overrides)


def load_dataset(path, type_overrides: Optional[dict] = None) -> Dataset:
    """Load a CSV/TSV file (header row required) or a single corpus record.

    Types are inferred per column unless overridden; overrides win over both
    inference and any types declared in a JSON record.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            record = json.loads(stripped.splitlines()[0])
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON record: {exc}") from exc
        if "dataset" in record:
            record = record["dataset"]
        return dataset_from_record(record, type_overrides)
    delimiter = "\t" if path.suffix.lower() in {".tsv", ".tab"} else ","
    return dataset_from_csv_text(path.stem, text, delimiter, type_overrides)


def parse_corpus_record(line: str):
    """Parse one corpus line into (Dataset, list[Visualization])."""
    from .visspace import visualization_from_record

    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid corpus record: {exc}") from exc
    if "dataset" not in record:
        raise ParseError("corpus record missing 'dataset'")
    dataset = dataset_from_record(record["dataset"])
    visualizations = [
        visualization_from_record(dataset, v) for v in record.get("visualizations", [])
    ]
    return dataset, visualizations


def load_corpus(path) -> Corpus:
    """Load a newline-delimited corpus file and validate its references."""
    datasets = []
    vis_map = {}
    seen = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                dataset, visualizations = parse_corpus_record(line)
            except (ParseError, DanglingReference) as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from exc
            if dataset.id in seen:
                raise ParseError(f"{path}:{lineno}: duplicate dataset id {dataset.id!r}")
            seen.add(dataset.id)
            datasets.append(dataset)
            vis_map[dataset.id] = visualizations
    if not datasets:
        raise EmptyDataset(f"{path}: corpus contains no datasets")
    return Corpus(datasets=tuple(datasets), visualizations=vis_map)


def save_corpus(corpus: Corpus, path) -> None:
    from .visspace import visualization_to_record

    with open(path, "w", encoding="utf-8") as handle:
        for dataset in corpus.datasets:
            record = {
                "dataset": dataset_to_record(dataset),
                "visualizations": [
                    visualization_to_record(v) for v in corpus.visualizations_of(dataset.id)
                ],
            }
            handle.write(json.dumps(record) + "\n")


def corpus_stats(corpus: Corpus) -> dict:
    """Summary counts in the usual corpus-table layout."""
    n_datasets = len(corpus.datasets)
    config_ids = set()
    distinct_per_dataset = []
    for dataset in corpus.datasets:
        used = {v.config_id for v in corpus.visualizations_of(dataset.id)}
        config_ids |= used
        distinct_per_dataset.append(len(used))
    n_attributes = sum(len(d.attributes) for d in corpus.datasets)
    return {
        "datasets": n_datasets,
        "vis_configs": len(config_ids),
        "attributes": n_attributes,
        "visualizations": corpus.total_visualizations,
        "attributes_per_dataset": round(n_attributes / n_datasets, 2),
        "vis_configs_per_dataset": round(sum(distinct_per_dataset) / n_datasets, 2),
    }


def split_corpus(
    corpus: Corpus, fractions: "tuple[float, float, float]", seed: int
) -> "tuple[Corpus, Corpus, Corpus]":
    """Partition a corpus into (train, val, test) by dataset, never by visualization.

    Deterministic for a fixed seed; every dataset lands in exactly one split.
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError("fractions must be three positive numbers")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    ids = list(corpus.dataset_ids)
    random.Random(seed).shuffle(ids)
    n = len(ids)
    counts = [int(f * n) for f in fractions]
    remainders = [(f * n - c, i) for i, (f, c) in enumerate(zip(fractions, counts))]
    for _, i in sorted(remainders, key=lambda t: (-t[0], t[1]))[: n - sum(counts)]:
        counts[i] += 1
    if any(c == 0 for c in counts):
        raise TooFewDatasets(f"{n} datasets cannot fill splits {fractions}")
    bounds = [0, counts[0], counts[0] + counts[1], n]
    parts = []
    for lo, hi in zip(bounds, bounds[1:]):
        chosen = set(ids[lo:hi])
        datasets = tuple(d for d in corpus.datasets if d.id in chosen)
        vis = {d.id: corpus.visualizations_of(d.id) for d in datasets}
        parts.append(Corpus(datasets=datasets, visualizations=vis))
    return parts[0], parts[1], parts[2]
