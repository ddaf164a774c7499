"""Fixed-width statistical descriptors for attributes of any type and length.

Every attribute maps to a K-dimensional vector by applying a registry of
statistic functions over a grid of value representations (raw values,
histogram probability distribution, unit-scaled values, log-binned counts)
and partitions (whole vector, quartile chunks). Undefined statistics map to
a sentinel 0 so the output is total: no NaN or Inf ever escapes.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy import stats as scipy_stats

from .errors import EmptyAttribute, ParseError, SchemaMismatch
from .tabular import Attribute, AttributeType, parse_timestamp
from .util import sha256_hex

HISTOGRAM_BINS = 10
CENTROID_BINS = 5


def _finite(value: float) -> float:
    value = float(value)
    return value if math.isfinite(value) else 0.0


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return 0.0
    return _finite(numerator / denominator)


# ---------------------------------------------------------------------------
# Statistic functions over a value vector. Each is total: empty or degenerate
# input yields the sentinel 0.
# ---------------------------------------------------------------------------


def quartiles(v: np.ndarray) -> "tuple[float, float, float]":
    """(Q1, median, Q3) via inclusive median-of-halves: each hinge is the
    median of the half that includes the overall median when n is odd."""
    n = len(v)
    if n == 0:
        return 0.0, 0.0, 0.0
    s = np.sort(v)
    half = (n + 1) // 2
    return float(np.median(s[:half])), float(np.median(s)), float(np.median(s[-half:]))


def q1(v: np.ndarray) -> float:
    return _finite(quartiles(v)[0])


def q3(v: np.ndarray) -> float:
    return _finite(quartiles(v)[2])


def iqr(v: np.ndarray) -> float:
    lo, _, hi = quartiles(v)
    return _finite(hi - lo)


def _iqr_fences(v: np.ndarray, alpha: float) -> "tuple[float, float]":
    lo, _, hi = quartiles(v)
    spread = hi - lo
    return lo - alpha * spread, hi + alpha * spread


def outliers_lower_iqr(v: np.ndarray, alpha: float) -> float:
    if len(v) == 0:
        return 0.0
    lower, _ = _iqr_fences(v, alpha)
    return float(np.sum(v < lower))


def outliers_upper_iqr(v: np.ndarray, alpha: float) -> float:
    if len(v) == 0:
        return 0.0
    _, upper = _iqr_fences(v, alpha)
    return float(np.sum(v > upper))


def outliers_total_iqr(v: np.ndarray, alpha: float) -> float:
    return outliers_lower_iqr(v, alpha) + outliers_upper_iqr(v, alpha)


def outliers_std(v: np.ndarray, alpha: float) -> float:
    """Count of values beyond alpha population standard deviations of the mean."""
    if len(v) == 0:
        return 0.0
    mu, sigma = float(np.mean(v)), float(np.std(v))
    if sigma == 0 or not math.isfinite(sigma):
        return 0.0
    return float(np.sum(np.abs(v - mu) > alpha * sigma))


def _rankdata(v: np.ndarray) -> np.ndarray:
    """Average-tie ranks, 1-based."""
    order = np.argsort(v, kind="mergesort")
    s = v[order]
    ranks = np.empty(len(v))
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and s[j + 1] == s[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) < 2:
        return 0.0
    da, db = a - np.mean(a), b - np.mean(b)
    denom = math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db)))
    if denom == 0:
        return 0.0
    return _finite(float(np.dot(da, db)) / denom)


def pearson_sorted(v: np.ndarray) -> float:
    """Pearson correlation between the vector and its own sorted order."""
    return _pearson(v, np.sort(v))


def spearman_sorted(v: np.ndarray) -> float:
    if len(v) < 2:
        return 0.0
    ranks = _rankdata(v)
    return _pearson(ranks, np.sort(ranks))


def kendall_sorted(v: np.ndarray) -> float:
    if len(v) < 2:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tau = scipy_stats.kendalltau(v, np.sort(v)).statistic
    return _finite(tau)


def minimum(v: np.ndarray) -> float:
    return _finite(np.min(v)) if len(v) else 0.0


def maximum(v: np.ndarray) -> float:
    return _finite(np.max(v)) if len(v) else 0.0


def value_range(v: np.ndarray) -> float:
    return _finite(np.max(v) - np.min(v)) if len(v) else 0.0


def median(v: np.ndarray) -> float:
    return _finite(np.median(v)) if len(v) else 0.0


def geometric_mean(v: np.ndarray) -> float:
    """nth root of the product; defined only for strictly positive values."""
    if len(v) == 0 or np.any(v <= 0):
        return 0.0
    return _finite(math.exp(float(np.mean(np.log(v)))))


def harmonic_mean(v: np.ndarray) -> float:
    if len(v) == 0 or np.any(v <= 0):
        return 0.0
    return _ratio(len(v), float(np.sum(1.0 / v)))


def mean(v: np.ndarray) -> float:
    return _finite(np.mean(v)) if len(v) else 0.0


def stdev(v: np.ndarray) -> float:
    return _finite(np.std(v)) if len(v) else 0.0


def variance(v: np.ndarray) -> float:
    return _finite(np.var(v)) if len(v) else 0.0


def _central_moment(v: np.ndarray, k: int) -> float:
    return float(np.mean((v - np.mean(v)) ** k))


def _standardized_moment(v: np.ndarray, k: int) -> float:
    if len(v) < 2:
        return 0.0
    m2 = _central_moment(v, 2)
    # the power can underflow to 0 even when m2 itself is nonzero
    return _ratio(_central_moment(v, k), m2 ** (k / 2.0))


def skewness(v: np.ndarray) -> float:
    return _standardized_moment(v, 3)


def kurtosis(v: np.ndarray) -> float:
    """Pearson (non-excess) kurtosis of the population."""
    return _standardized_moment(v, 4)


def hyperskewness(v: np.ndarray) -> float:
    return _standardized_moment(v, 5)


def central_moment(v: np.ndarray, k: int) -> float:
    if len(v) < 2:
        return 0.0
    return _finite(_central_moment(v, k))


def kstat_3(v: np.ndarray) -> float:
    """Unbiased estimator of the third cumulant."""
    n = len(v)
    if n < 3:
        return 0.0
    m3 = _central_moment(v, 3)
    return _finite(n * n * m3 / ((n - 1) * (n - 2)))


def kstat_4(v: np.ndarray) -> float:
    """Unbiased estimator of the fourth cumulant."""
    n = len(v)
    if n < 4:
        return 0.0
    m2, m4 = _central_moment(v, 2), _central_moment(v, 4)
    return _finite(n * n * ((n + 1) * m4 - 3 * (n - 1) * m2 * m2) / ((n - 1) * (n - 2) * (n - 3)))


def quartile_dispersion(v: np.ndarray) -> float:
    lo, _, hi = quartiles(v)
    return _ratio(hi - lo, hi + lo)


def median_abs_deviation(v: np.ndarray) -> float:
    if len(v) == 0:
        return 0.0
    return _finite(np.median(np.abs(v - np.median(v))))


def avg_abs_deviation(v: np.ndarray) -> float:
    if len(v) == 0:
        return 0.0
    return _finite(np.mean(np.abs(v - np.mean(v))))


def coeff_variation(v: np.ndarray) -> float:
    if len(v) == 0:
        return 0.0
    return _ratio(float(np.std(v)), float(np.mean(v)))


def efficiency_ratio(v: np.ndarray) -> float:
    if len(v) == 0:
        return 0.0
    mu = float(np.mean(v))
    return _ratio(float(np.var(v)), mu * mu)


def variance_mean_ratio(v: np.ndarray) -> float:
    if len(v) == 0:
        return 0.0
    return _ratio(float(np.var(v)), float(np.mean(v)))


def signal_noise_ratio(v: np.ndarray) -> float:
    if len(v) == 0:
        return 0.0
    mu = float(np.mean(v))
    return _ratio(mu * mu, float(np.var(v)))


def entropy(v: np.ndarray) -> float:
    """Shannon entropy in bits; defined only for non-negative vectors."""
    if len(v) == 0 or np.any(v < 0):
        return 0.0
    positive = v[v > 0]
    if len(positive) == 0:
        return 0.0
    return _finite(-float(np.sum(positive * np.log2(positive))))


def normalized_entropy(v: np.ndarray) -> float:
    if len(v) <= 1:
        return 0.0
    return _ratio(entropy(v), math.log2(len(v)))


def gini(v: np.ndarray) -> float:
    """Sample Gini coefficient for non-negative values, 0 when undefined."""
    n = len(v)
    if n == 0 or np.any(v < 0):
        return 0.0
    total = float(np.sum(v))
    if total <= 0:
        return 0.0
    s = np.sort(v)
    weights = 2.0 * np.arange(1, n + 1) - n - 1
    return _finite(float(np.dot(weights, s)) / (n * total))


def quartile_max_gap(v: np.ndarray) -> float:
    """Largest gap between consecutive five-number-summary points."""
    if len(v) == 0:
        return 0.0
    lo, med, hi = quartiles(v)
    points = [float(np.min(v)), lo, med, hi, float(np.max(v))]
    return _finite(max(b - a for a, b in zip(points, points[1:])))


def centroid_max_gap(v: np.ndarray) -> float:
    """Max pairwise distance between means of equal-width value bins."""
    groups = partition_equal_width(v, CENTROID_BINS)
    centroids = [float(np.mean(g)) for g in groups if len(g)]
    if len(centroids) < 2:
        return 0.0
    return _finite(max(centroids) - min(centroids))


# ---------------------------------------------------------------------------
# Representations and partitions
# ---------------------------------------------------------------------------


class Representation(str, Enum):
    RAW = "raw"
    PROBABILITY_DIST = "prob"
    SCALED_UNIT = "scaled"
    LOG_BINNED = "logbin"


class PartitionerKind(str, Enum):
    WHOLE = "whole"
    EQUAL_WIDTH_BINS = "equal_width"
    QUARTILES = "quartiles"


@dataclass(frozen=True)
class Partitioner:
    kind: PartitionerKind
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind is PartitionerKind.EQUAL_WIDTH_BINS and (self.k is None or self.k < 2):
            raise ParseError("equal-width partitioner needs k >= 2")

    def split(self, v: np.ndarray) -> list:
        if self.kind is PartitionerKind.WHOLE:
            return [v]
        if self.kind is PartitionerKind.QUARTILES:
            return [np.asarray(p) for p in np.array_split(np.sort(v), 4)]
        return partition_equal_width(v, self.k)


def partition_equal_width(v: np.ndarray, k: int) -> list:
    """Split values into k bins of equal value-range width; covers the input
    disjointly (constant input collapses into the first bin)."""
    if len(v) == 0:
        return [v[:0] for _ in range(k)]
    lo, hi = float(np.min(v)), float(np.max(v))
    if hi == lo:
        return [v] + [v[:0] for _ in range(k - 1)]
    idx = np.clip(((v - lo) / (hi - lo) * k).astype(int), 0, k - 1)
    return [v[idx == b] for b in range(k)]


def histogram_probability(v: np.ndarray, bins: int = HISTOGRAM_BINS) -> np.ndarray:
    """Equal-width histogram normalized to sum 1."""
    counts = np.array([len(g) for g in partition_equal_width(v, bins)], dtype=float)
    total = counts.sum()
    return counts / total if total > 0 else counts


def log_binned_counts(v: np.ndarray, bins: int = HISTOGRAM_BINS) -> np.ndarray:
    """Histogram counts of log1p(|v|) over equal-width bins."""
    transformed = np.log1p(np.abs(v))
    return np.array([len(g) for g in partition_equal_width(transformed, bins)], dtype=float)


def unit_scaled(v: np.ndarray) -> np.ndarray:
    if len(v) == 0:
        return v
    lo, hi = float(np.min(v)), float(np.max(v))
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


def apply_representation(v: np.ndarray, representation: Representation) -> np.ndarray:
    representation = Representation(representation)
    if representation is Representation.RAW:
        return v
    if representation is Representation.PROBABILITY_DIST:
        return histogram_probability(v)
    if representation is Representation.SCALED_UNIT:
        return unit_scaled(v)
    return log_binned_counts(v)


# ---------------------------------------------------------------------------
# Registries
# ---------------------------------------------------------------------------

VECTOR_FUNCTIONS = {
    "q1": q1,
    "q3": q3,
    "iqr": iqr,
    "outliers_lower_iqr_1_5": lambda v: outliers_lower_iqr(v, 1.5),
    "outliers_upper_iqr_1_5": lambda v: outliers_upper_iqr(v, 1.5),
    "outliers_total_iqr_1_5": lambda v: outliers_total_iqr(v, 1.5),
    "outliers_lower_iqr_3": lambda v: outliers_lower_iqr(v, 3.0),
    "outliers_upper_iqr_3": lambda v: outliers_upper_iqr(v, 3.0),
    "outliers_total_iqr_3": lambda v: outliers_total_iqr(v, 3.0),
    "outliers_std_2": lambda v: outliers_std(v, 2.0),
    "outliers_std_3": lambda v: outliers_std(v, 3.0),
    "spearman_sorted": spearman_sorted,
    "kendall_sorted": kendall_sorted,
    "pearson_sorted": pearson_sorted,
    "minimum": minimum,
    "maximum": maximum,
    "value_range": value_range,
    "median": median,
    "geometric_mean": geometric_mean,
    "harmonic_mean": harmonic_mean,
    "mean": mean,
    "stdev": stdev,
    "variance": variance,
    "skewness": skewness,
    "kurtosis": kurtosis,
    "hyperskewness": hyperskewness,
    "moment_6": lambda v: central_moment(v, 6),
    "moment_7": lambda v: central_moment(v, 7),
    "moment_8": lambda v: central_moment(v, 8),
    "moment_9": lambda v: central_moment(v, 9),
    "moment_10": lambda v: central_moment(v, 10),
    "kstat_3": kstat_3,
    "kstat_4": kstat_4,
    "quartile_dispersion": quartile_dispersion,
    "median_abs_deviation": median_abs_deviation,
    "avg_abs_deviation": avg_abs_deviation,
    "coeff_variation": coeff_variation,
    "efficiency_ratio": efficiency_ratio,
    "variance_mean_ratio": variance_mean_ratio,
    "signal_noise_ratio": signal_noise_ratio,
    "entropy": entropy,
    "normalized_entropy": normalized_entropy,
    "gini": gini,
    "quartile_max_gap": quartile_max_gap,
    "centroid_max_gap": centroid_max_gap,
}


def _num_instances(attr: Attribute) -> float:
    return float(attr.row_count)


def _num_missing(attr: Attribute) -> float:
    return float(attr.missing_count)


def _frac_missing(attr: Attribute) -> float:
    return _ratio(attr.missing_count, attr.row_count)


def _is_zero_cell(cell) -> bool:
    try:
        return float(cell) == 0.0
    except (TypeError, ValueError):
        return False


def _num_nonzeros(attr: Attribute) -> float:
    return float(sum(1 for c in attr.non_missing() if not _is_zero_cell(c)))


def _num_unique(attr: Attribute) -> float:
    return float(attr.cardinality)


def _density(attr: Attribute) -> float:
    return _ratio(_num_nonzeros(attr), attr.row_count)


ATTRIBUTE_FUNCTIONS = {
    "num_instances": _num_instances,
    "num_missing": _num_missing,
    "frac_missing": _frac_missing,
    "num_nonzeros": _num_nonzeros,
    "num_unique": _num_unique,
    "density": _density,
}


# ---------------------------------------------------------------------------
# Schema and computation
# ---------------------------------------------------------------------------

_PARTITION_IDS = ("whole", "quartile_1", "quartile_2", "quartile_3", "quartile_4")


@dataclass(frozen=True)
class FeatureDescriptor:
    representation: str
    partition: str
    function: str


@dataclass(frozen=True)
class MetaFeatureSchema:
    """Ordered feature layout; fixed at build time and shared between training
    and inference."""

    version: int
    features: tuple

    @property
    def k(self) -> int:
        return len(self.features)

    @property
    def hash(self) -> str:
        return sha256_hex(self.to_json().encode("utf-8"))[:16]

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": self.version,
                "k": self.k,
                "features": [
                    {"representation": f.representation, "partition": f.partition, "function": f.function}
                    for f in self.features
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "MetaFeatureSchema":
        payload = json.loads(text)
        features = tuple(
            FeatureDescriptor(f["representation"], f["partition"], f["function"])
            for f in payload["features"]
        )
        schema = cls(version=payload["version"], features=features)
        if payload.get("k") not in (None, schema.k):
            raise SchemaMismatch(f"schema claims k={payload['k']}, has {schema.k}")
        return schema


def default_schema() -> MetaFeatureSchema:
    """The concrete grid: attribute-level counts once, then every vector
    statistic over {raw, prob, scaled, logbin} x {whole, quartile chunks}."""
    features = [FeatureDescriptor("raw", "whole", name) for name in ATTRIBUTE_FUNCTIONS]
    for representation in Representation:
        for partition in _PARTITION_IDS:
            for name in VECTOR_FUNCTIONS:
                features.append(FeatureDescriptor(representation.value, partition, name))
    return MetaFeatureSchema(version=1, features=tuple(features))


@dataclass(frozen=True)
class MetaFeatureVector:
    values: np.ndarray
    schema_hash: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("meta-feature vector contains non-finite entries")


def numeric_view(attr: Attribute) -> np.ndarray:
    """Non-missing values as a numeric vector.

    Quantitative values pass through; nominal values become per-value
    frequency counts in first-occurrence order; ordinal and temporal values
    become sorted-order rank codes in original row order.
    """
    present = attr.non_missing()
    if not present:
        raise EmptyAttribute(f"attribute {attr.name!r} has no non-missing values")
    if attr.type is AttributeType.QUANTITATIVE:
        return np.asarray(present, dtype=float)
    if attr.type is AttributeType.NOMINAL:
        counts: dict = {}
        for cell in present:
            counts[cell] = counts.get(cell, 0) + 1
        return np.asarray(list(counts.values()), dtype=float)
    if attr.type is AttributeType.TEMPORAL:
        stamps = [parse_timestamp(str(c)) for c in present]
        distinct = sorted(set(stamps))
        code = {value: i for i, value in enumerate(distinct)}
        return np.asarray([code[s] for s in stamps], dtype=float)
    # ordinal: rank codes over the sorted distinct values
    try:
        distinct = sorted(set(present))
    except TypeError:
        distinct = sorted({str(c) for c in present})
        present = [str(c) for c in present]
    code = {value: i for i, value in enumerate(distinct)}
    return np.asarray([code[c] for c in present], dtype=float)


def compute_metafeatures(attr: Attribute, schema: MetaFeatureSchema) -> MetaFeatureVector:
    """Evaluate the schema on one attribute; deterministic, always length K."""
    with np.errstate(all="ignore"):
        return _compute(attr, schema)


def _compute(attr: Attribute, schema: MetaFeatureSchema) -> MetaFeatureVector:
    base = numeric_view(attr)
    rep_cache: dict = {}
    part_cache: dict = {}

    def parts_of(representation: str, partition: str) -> np.ndarray:
        if representation not in rep_cache:
            rep_cache[representation] = apply_representation(base, Representation(representation))
        key = (representation, partition)
        if key not in part_cache:
            vec = rep_cache[representation]
            if partition == "whole":
                part_cache[key] = vec
            else:
                index = int(partition.rsplit("_", 1)[1]) - 1
                chunks = Partitioner(PartitionerKind.QUARTILES).split(vec)
                for i, chunk in enumerate(chunks):
                    part_cache[(representation, f"quartile_{i + 1}")] = chunk
                part_cache[key] = chunks[index]
        return part_cache[key]

    values = np.empty(schema.k, dtype=float)
    for i, feat in enumerate(schema.features):
        if feat.function in ATTRIBUTE_FUNCTIONS:
            values[i] = ATTRIBUTE_FUNCTIONS[feat.function](attr)
        else:
            values[i] = VECTOR_FUNCTIONS[feat.function](parts_of(feat.representation, feat.partition))
    return MetaFeatureVector(values=values, schema_hash=schema.hash)


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension min-max scaling fitted on the training corpus only."""

    mins: np.ndarray
    maxs: np.ndarray
    schema_hash: str

    def apply(self, vector: MetaFeatureVector) -> MetaFeatureVector:
        if vector.schema_hash != self.schema_hash:
            raise SchemaMismatch(
                f"vector schema {vector.schema_hash} != normalizer schema {self.schema_hash}"
            )
        return MetaFeatureVector(
            values=self.apply_values(vector.values), schema_hash=self.schema_hash
        )

    def apply_values(self, values: np.ndarray) -> np.ndarray:
        if values.shape != self.mins.shape:
            raise SchemaMismatch(f"vector length {values.shape} != {self.mins.shape}")
        span = self.maxs - self.mins
        constant = span == 0
        scaled = np.where(constant, 0.5, (values - self.mins) / np.where(constant, 1.0, span))
        return np.clip(scaled, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            "mins": self.mins.tolist(),
            "maxs": self.maxs.tolist(),
            "schema_hash": self.schema_hash,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Normalizer":
        return cls(
            mins=np.asarray(payload["mins"], dtype=float),
            maxs=np.asarray(payload["maxs"], dtype=float),
            schema_hash=payload["schema_hash"],
        )


def fit_normalizer(vectors: Sequence[MetaFeatureVector]) -> Normalizer:
    if not vectors:
        raise ValueError("need at least one vector to fit a normalizer")
    schema_hash = vectors[0].schema_hash
    if any(v.schema_hash != schema_hash for v in vectors):
        raise SchemaMismatch("vectors come from different schemas")
    stacked = np.stack([v.values for v in vectors])
    return Normalizer(
        mins=stacked.min(axis=0), maxs=stacked.max(axis=0), schema_hash=schema_hash
    )
