"""Network input encoding: dense/sparse features for attributes and configurations.

The four inputs for one visualization are the normalized meta-features of its
bound attributes (dense, zero-padded to a fixed arity), their bin-bucketed
sparse form, the configuration embedding (resolved by the model from a
vocabulary position), and the configuration's sparse one-hot plus field-value
indicators. Cross-product transforms fire when chosen sparse bits co-occur.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IndexOutOfRange, UnknownAttribute, UnknownConfig
from .metafeatures import MetaFeatureSchema, Normalizer, compute_metafeatures
from .tabular import Dataset
from .visspace import AttributeCombination, ConfigVocabulary, Visualization

DEFAULT_BINS = 10
DEFAULT_MAX_ARITY = 3
DEFAULT_EMBED_DIM = 16

# Cross-product mask construction over training positives.
CROSS_MIN_COOCCURRENCE = 5
CROSS_MAX_MASKS = 5000


@dataclass(frozen=True)
class FeatureBundle:
    """Encoded inputs for one visualization.

    ``d_x`` is the zero-padded dense block; sparse vectors are carried as
    sorted active-index arrays (see ``sx_dense``/``sc_dense``). The
    configuration embedding is resolved by the model from ``config_index``.
    """

    d_x: np.ndarray
    sx_indices: np.ndarray
    sc_indices: np.ndarray
    config_index: int
    combo_arity: int

    def sx_dense(self, length: int) -> np.ndarray:
        dense = np.zeros(length, dtype=np.uint8)
        dense[self.sx_indices] = 1
        return dense

    def sc_dense(self, length: int) -> np.ndarray:
        dense = np.zeros(length, dtype=np.uint8)
        dense[self.sc_indices] = 1
        return dense


def bin_index(value: float, bins: int) -> int:
    """Equal-width bin of a value in [0,1]; the right edge folds into the last bin."""
    return min(int(value * bins), bins - 1)


def encode_attributes(
    combo: AttributeCombination,
    dataset: Dataset,
    schema: MetaFeatureSchema,
    normalizer: Normalizer,
    bins: int = DEFAULT_BINS,
    max_arity: int = DEFAULT_MAX_ARITY,
) -> "tuple[np.ndarray, np.ndarray]":
    """Dense and sparse attribute features for a combination.

    Dense: per-attribute normalized meta-features concatenated in slot order,
    zero-padded to max_arity * K. Sparse: one active bin bit per real
    (attribute, dimension) pair; padded slots set no bits.
    """
    if combo.arity > max_arity:
        raise ValueError(f"combination arity {combo.arity} exceeds {max_arity}")
    k = schema.k
    d_x = np.zeros(max_arity * k, dtype=float)
    for slot, name in enumerate(combo.attribute_names):
        if name not in dataset:
            raise UnknownAttribute(f"{name!r} not in dataset {dataset.id!r}")
        vector = normalizer.apply(compute_metafeatures(dataset.attribute(name), schema))
        d_x[slot * k : (slot + 1) * k] = vector.values
    s_x = np.zeros(max_arity * k * bins, dtype=np.uint8)
    s_x[_sx_indices_from_dense(d_x, combo.arity, k, bins)] = 1
    return d_x, s_x


def _sx_indices_from_dense(d_x: np.ndarray, arity: int, k: int, bins: int) -> np.ndarray:
    dims = np.arange(arity * k)
    binned = np.minimum((d_x[: arity * k] * bins).astype(int), bins - 1)
    return (dims * bins + binned).astype(np.int32)


def encode_config(config_id: str, vocab: ConfigVocabulary) -> np.ndarray:
    """Sparse configuration features: vocabulary one-hot concatenated with
    field-value indicator bits."""
    indices, _ = _sc_indices(config_id, vocab)
    dense = np.zeros(len(vocab) + len(vocab.field_value_keys()), dtype=np.uint8)
    dense[indices] = 1
    return dense


def _sc_indices(config_id: str, vocab: ConfigVocabulary) -> "tuple[np.ndarray, int]":
    if config_id not in vocab:
        raise UnknownConfig(f"configuration {config_id!r} not in vocabulary")
    position = vocab.position(config_id)
    config = vocab.config(config_id)
    keys = {key: i for i, key in enumerate(vocab.field_value_keys())}
    active = [position]
    seen = {("mark", config.mark)}
    for c in config.channels:
        seen.add((c.channel, c.slot))
        if c.aggregate != "none":
            seen.add((f"{c.channel}.aggregate", c.aggregate))
    for key in seen:
        active.append(len(vocab) + keys[key])
    return np.asarray(sorted(active), dtype=np.int32), position


@dataclass(frozen=True)
class CrossProductSpec:
    """Masks over the concatenated sparse vector s = [s_c, s_x]; transform k
    fires iff every index in mask k is active."""

    masks: tuple
    s_length: int

    def __post_init__(self):
        for mask in self.masks:
            if len(mask) < 2:
                raise ValueError(f"cross-product mask needs >= 2 indices: {mask}")
            if any(i < 0 or i >= self.s_length for i in mask):
                raise IndexOutOfRange(f"mask {mask} out of range for |s|={self.s_length}")

    def __len__(self) -> int:
        return len(self.masks)

    def to_dict(self) -> dict:
        return {"s_length": self.s_length, "masks": [list(m) for m in self.masks]}

    @classmethod
    def from_dict(cls, payload: dict) -> "CrossProductSpec":
        return cls(
            masks=tuple(tuple(m) for m in payload["masks"]),
            s_length=int(payload["s_length"]),
        )


def cross_products(s: np.ndarray, spec: CrossProductSpec) -> np.ndarray:
    """s'[k] = 1 iff all indices of mask k are set in s."""
    if len(s) != spec.s_length:
        raise IndexOutOfRange(f"|s|={len(s)} but spec expects {spec.s_length}")
    out = np.zeros(len(spec.masks), dtype=np.uint8)
    for k, mask in enumerate(spec.masks):
        out[k] = 1 if all(s[i] for i in mask) else 0
    return out


class FeatureEncoder:
    """Bundles visualizations for the network, caching per-attribute vectors.

    Pure given its inputs; one encoder instance is shared by training,
    evaluation, and serving of a single model.
    """

    def __init__(
        self,
        schema: MetaFeatureSchema,
        normalizer: Normalizer,
        vocab: ConfigVocabulary,
        max_arity: int = DEFAULT_MAX_ARITY,
        bins: int = DEFAULT_BINS,
    ):
        self.schema = schema
        self.normalizer = normalizer
        self.vocab = vocab
        self.max_arity = max_arity
        self.bins = bins
        self.k = schema.k
        self.sc_length = len(vocab) + len(vocab.field_value_keys())
        self.sx_length = max_arity * schema.k * bins
        self.s_length = self.sc_length + self.sx_length
        self._attr_cache: dict = {}
        self._sc_cache: dict = {}

    def attribute_vector(self, dataset: Dataset, name: str) -> np.ndarray:
        key = (dataset.id, name)
        if key not in self._attr_cache:
            if name not in dataset:
                raise UnknownAttribute(f"{name!r} not in dataset {dataset.id!r}")
            raw = compute_metafeatures(dataset.attribute(name), self.schema)
            self._attr_cache[key] = self.normalizer.apply(raw).values
        return self._attr_cache[key]

    def encode(self, dataset: Dataset, vis: Visualization) -> FeatureBundle:
        combo = vis.combo
        if combo.arity > self.max_arity:
            raise ValueError(f"combination arity {combo.arity} exceeds {self.max_arity}")
        d_x = np.zeros(self.max_arity * self.k, dtype=float)
        for slot, name in enumerate(combo.attribute_names):
            d_x[slot * self.k : (slot + 1) * self.k] = self.attribute_vector(dataset, name)
        sx_idx = _sx_indices_from_dense(d_x, combo.arity, self.k, self.bins)
        if vis.config_id not in self._sc_cache:
            self._sc_cache[vis.config_id] = _sc_indices(vis.config_id, self.vocab)
        sc_idx, position = self._sc_cache[vis.config_id]
        return FeatureBundle(
            d_x=d_x,
            sx_indices=sx_idx,
            sc_indices=sc_idx,
            config_index=position,
            combo_arity=combo.arity,
        )

    def s_indices(self, bundle: FeatureBundle) -> np.ndarray:
        """Active positions within s = [s_c, s_x]."""
        return np.concatenate([bundle.sc_indices, self.sc_length + bundle.sx_indices])

    def batch_dense_s(self, bundles: Sequence[FeatureBundle]) -> np.ndarray:
        """Materialize s for a batch as a dense matrix (rows are bundles)."""
        out = np.zeros((len(bundles), self.s_length), dtype=float)
        for row, bundle in enumerate(bundles):
            out[row, bundle.sc_indices] = 1.0
            out[row, self.sc_length + bundle.sx_indices] = 1.0
        return out

    def batch_dense_dx(self, bundles: Sequence[FeatureBundle]) -> np.ndarray:
        return np.stack([b.d_x for b in bundles])

    def batch_cross(self, s_dense: np.ndarray, spec: CrossProductSpec) -> np.ndarray:
        """Vectorized cross-product features for a dense batch of s vectors."""
        if s_dense.shape[1] != spec.s_length:
            raise IndexOutOfRange(
                f"|s|={s_dense.shape[1]} but spec expects {spec.s_length}"
            )
        if not spec.masks:
            return np.zeros((s_dense.shape[0], 0), dtype=float)
        out = np.ones((s_dense.shape[0], len(spec.masks)), dtype=float)
        max_len = max(len(m) for m in spec.masks)
        for position in range(max_len):
            cols = [m[position] if position < len(m) else m[0] for m in spec.masks]
            out *= s_dense[:, cols]
        return out


def build_cross_spec(
    encoder: FeatureEncoder,
    positive_bundles: Sequence[FeatureBundle],
    min_cooccurrence: int = CROSS_MIN_COOCCURRENCE,
    max_masks: int = CROSS_MAX_MASKS,
) -> CrossProductSpec:
    """Pair masks {configuration one-hot bit, attribute bin bit} that co-occur
    at least min_cooccurrence times among training positives, most frequent
    first, capped at max_masks."""
    counts = np.zeros((len(encoder.vocab), encoder.sx_length), dtype=np.int64)
    for bundle in positive_bundles:
        counts[bundle.config_index, bundle.sx_indices] += 1
    config_pos, sx_pos = np.nonzero(counts >= min_cooccurrence)
    pairs = sorted(
        zip(config_pos.tolist(), sx_pos.tolist()),
        key=lambda p: (-counts[p[0], p[1]], p[0], p[1]),
    )[:max_masks]
    masks = tuple((c, encoder.sc_length + x) for c, x in pairs)
    return CrossProductSpec(masks=masks, s_length=encoder.s_length)
