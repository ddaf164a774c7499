"""Evaluation framework: per-dataset pools, rank-quality metric, baselines,
and a planted-rule synthetic corpus for desk-scale experiments.

The metric is a per-dataset normalized DCG whose normalizer is truncated at
min(K, number of positives in the pool), so a perfect ranking scores exactly
1 regardless of how many positives a dataset has; dataset scores are averaged.
"""
from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Callable, Optional, Sequence

import numpy as np

from . import network
from .encoding import FeatureEncoder
from .errors import InvalidRuleSpec, NoNegativesAvailable, NoPositives
from .network import WideDeepModel
from .tabular import Attribute, AttributeType, Corpus, Dataset
from .util import stable_seed
from .visspace import (
    AttributeCombination,
    ChannelSpec,
    ConfigVocabulary,
    Visualization,
    VisConfiguration,
    sample_negatives,
)

logger = logging.getLogger(__name__)

NDCG_KS = (1, 2, 5, 10, 20)

# A scorer maps (dataset, candidates) to one score per candidate.
Scorer = Callable[[Dataset, Sequence[Visualization]], np.ndarray]


@dataclass(frozen=True)
class PoolConfig:
    negatives_per_dataset: int = 99
    seed: int = 1
    max_arity: int = 3
    strict: bool = False


@dataclass(frozen=True)
class RankedItem:
    key: str
    score: float
    label: int


@dataclass(frozen=True)
class RankedList:
    """Scored pool for one dataset, descending by score with stable key ties."""

    dataset_id: str
    items: tuple

    @property
    def labels(self) -> list:
        return [item.label for item in self.items]

    @property
    def positive_count(self) -> int:
        return sum(self.labels)

    @property
    def tie_count(self) -> int:
        scores = [item.score for item in self.items]
        return len(scores) - len(set(scores))


def rank_pool(
    dataset_id: str, pool: Sequence[Visualization], scores: np.ndarray
) -> RankedList:
    """Sort by score descending; ties break on the candidate canonical key so
    rankings are exact and reproducible."""
    items = [
        RankedItem(key=vis.key, score=float(score), label=int(vis.label or 0))
        for vis, score in zip(pool, scores)
    ]
    items.sort(key=lambda item: (-item.score, item.key))
    return RankedList(dataset_id=dataset_id, items=tuple(items))


def _dcg_weight(rank: int) -> float:
    return 1.0 / math.log2(rank + 1)


def ndcg_of_list(ranked: RankedList, k: int) -> float:
    """Normalized DCG truncated at k for one dataset's ranking."""
    positives = ranked.positive_count
    if positives == 0:
        raise NoPositives(f"dataset {ranked.dataset_id!r} has no positives in pool")
    dcg = sum(
        (2.0 ** item.label - 1.0) * _dcg_weight(j)
        for j, item in enumerate(ranked.items[:k], start=1)
    )
    normalizer = sum(_dcg_weight(j) for j in range(1, min(k, positives) + 1))
    return dcg / normalizer


def ndcg_at_k(lists: Sequence[RankedList], k: int, strict: bool = False) -> float:
    """Mean over datasets; datasets without positives are skipped with a
    warning unless strict."""
    values = []
    for ranked in lists:
        try:
            values.append(ndcg_of_list(ranked, k))
        except NoPositives:
            if strict:
                raise
            logger.warning("dataset %s skipped: no positives", ranked.dataset_id)
    if not values:
        raise NoPositives("no dataset had positives in its pool")
    return float(np.mean(values))


@dataclass
class EvalResult:
    ndcg: dict  # k -> mean
    per_dataset: dict  # dataset id -> {k: value}
    pool_sizes: dict
    tie_counts: dict
    skipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ndcg": {f"@{k}": self.ndcg[k] for k in sorted(self.ndcg)},
            "per_dataset": self.per_dataset,
            "pool_sizes": self.pool_sizes,
            "tie_counts": self.tie_counts,
            "skipped": self.skipped,
        }


def build_pool(
    dataset: Dataset,
    positives: Sequence[Visualization],
    vocab: ConfigVocabulary,
    pool_cfg: PoolConfig,
) -> list:
    """Held-out positives plus sampled negatives for one test dataset."""
    kept = [v for v in positives if v.config_id in vocab]
    if len(kept) < len(positives):
        logger.warning(
            "dataset %s: %d positives use configurations outside the vocabulary",
            dataset.id,
            len(positives) - len(kept),
        )
    negatives = sample_negatives(
        dataset,
        kept,
        vocab,
        pool_cfg.negatives_per_dataset,
        seed=stable_seed(pool_cfg.seed, "pool", dataset.id),
        max_arity=pool_cfg.max_arity,
    )
    return kept + negatives


def evaluate(
    scorer: Scorer,
    test_split: Corpus,
    vocab: ConfigVocabulary,
    pool_cfg: PoolConfig,
    ks: Sequence[int] = NDCG_KS,
) -> EvalResult:
    """Score per-dataset pools, rank, and aggregate the metric at each cutoff.

    Per-dataset values are independent of which other datasets are evaluated;
    aggregation is a deterministic fold in dataset order.
    """
    lists = []
    pool_sizes = {}
    tie_counts = {}
    skipped = []
    for dataset in test_split.datasets:
        positives = test_split.visualizations_of(dataset.id)
        if not positives:
            if pool_cfg.strict:
                raise NoPositives(f"dataset {dataset.id!r} has no positives")
            skipped.append(dataset.id)
            continue
        try:
            pool = build_pool(dataset, positives, vocab, pool_cfg)
        except NoNegativesAvailable:
            if pool_cfg.strict:
                raise
            logger.warning("dataset %s skipped: no negatives available", dataset.id)
            skipped.append(dataset.id)
            continue
        if not any(v.label == 1 for v in pool):
            if pool_cfg.strict:
                raise NoPositives(f"dataset {dataset.id!r} has no scorable positives")
            skipped.append(dataset.id)
            continue
        scores = np.asarray(scorer(dataset, pool), dtype=float)
        ranked = rank_pool(dataset.id, pool, scores)
        lists.append(ranked)
        pool_sizes[dataset.id] = len(pool)
        tie_counts[dataset.id] = ranked.tie_count
    per_dataset = {
        r.dataset_id: {k: ndcg_of_list(r, k) for k in ks} for r in lists
    }
    ndcg = {k: ndcg_at_k(lists, k, strict=pool_cfg.strict) for k in ks}
    return EvalResult(
        ndcg=ndcg,
        per_dataset=per_dataset,
        pool_sizes=pool_sizes,
        tie_counts=tie_counts,
        skipped=skipped,
    )


# ---------------------------------------------------------------------------
# Scorers: trained model and common-sense baselines
# ---------------------------------------------------------------------------


def model_scorer(model: WideDeepModel, encoder: Optional[FeatureEncoder] = None) -> Scorer:
    enc = encoder if encoder is not None else model.encoder()

    def score(dataset: Dataset, candidates: Sequence[Visualization]) -> np.ndarray:
        bundles = [enc.encode(dataset, vis) for vis in candidates]
        return network.score_bundles(model, enc, bundles)

    return score


def baseline_random(seed: int) -> Scorer:
    """I.i.d. uniform scores, reproducible per (seed, dataset, pool order)."""

    def score(dataset: Dataset, candidates: Sequence[Visualization]) -> np.ndarray:
        rng = np.random.default_rng(stable_seed(seed, "random-baseline", dataset.id))
        return rng.uniform(size=len(candidates))

    return score


def baseline_configpop(vocab: ConfigVocabulary) -> Scorer:
    """Scores a candidate by its configuration's training-corpus frequency,
    independent of which attributes are bound."""

    def score(dataset: Dataset, candidates: Sequence[Visualization]) -> np.ndarray:
        return np.asarray([vocab.count(vis.config_id) for vis in candidates], dtype=float)

    return score


# ---------------------------------------------------------------------------
# Planted-rule synthetic corpus
# ---------------------------------------------------------------------------

_SCATTER = VisConfiguration(
    mark="scatter",
    channels=(ChannelSpec("x", "quantitative"), ChannelSpec("y", "quantitative")),
)
_HBAR = VisConfiguration(
    mark="bar",
    channels=(ChannelSpec("x", "quantitative", "mean"), ChannelSpec("y", "nominal")),
)
_LINE = VisConfiguration(
    mark="line",
    channels=(ChannelSpec("x", "temporal"), ChannelSpec("y", "quantitative")),
)


@dataclass(frozen=True)
class PlantedRule:
    """A type-level preference with a data-dependent condition.

    ``slots`` are the attribute types bound in order; ``condition`` inspects
    the bound attributes and decides whether the binding is a positive.
    """

    name: str
    config: VisConfiguration
    condition: Callable[[Dataset, "tuple[Attribute, ...]"], bool]
    symmetric: bool = False  # emit both orders when slots have equal types


def _scatter_condition(dataset: Dataset, attrs) -> bool:
    return dataset.row_count >= 80


def _hbar_condition(dataset: Dataset, attrs) -> bool:
    nominal = attrs[1]
    return nominal.cardinality <= 12


def _line_condition(dataset: Dataset, attrs) -> bool:
    temporal = attrs[0]
    stamps = [str(v) for v in temporal.values if v is not None]
    return stamps == sorted(stamps)


DEFAULT_RULES = (
    PlantedRule("scatter-many-rows", _SCATTER, _scatter_condition, symmetric=True),
    PlantedRule("hbar-small-category", _HBAR, _hbar_condition),
    PlantedRule("line-chronological", _LINE, _line_condition),
)


def _rule_bindings(dataset: Dataset, rule: PlantedRule):
    """All ordered attribute bindings matching the rule's slot types."""
    by_type: dict = {}
    for attr in dataset.attributes:
        by_type.setdefault(attr.type, []).append(attr)
    slots = rule.config.typed_slots

    def assign(prefix: list, remaining: "tuple[AttributeType, ...]"):
        if not remaining:
            yield tuple(prefix)
            return
        for attr in by_type.get(remaining[0], ()):
            if attr in prefix:
                continue
            yield from assign(prefix + [attr], remaining[1:])

    yield from assign([], slots)


def rule_positives(dataset: Dataset, rules: Sequence[PlantedRule]) -> list:
    """Deterministic positives: every binding a rule's condition accepts."""
    positives = []
    seen = set()
    for rule in rules:
        for attrs in _rule_bindings(dataset, rule):
            if not rule.condition(dataset, attrs):
                continue
            vis = Visualization(
                combo=AttributeCombination(dataset.id, tuple(a.name for a in attrs)),
                config_id=rule.config.id,
                label=1,
            )
            if vis.key not in seen:
                seen.add(vis.key)
                positives.append(vis)
    return positives


def rule_scorer(rules: Sequence[PlantedRule] = DEFAULT_RULES) -> Scorer:
    """Oracle that scores 1 exactly when a rule accepts the candidate."""

    def score(dataset: Dataset, candidates: Sequence[Visualization]) -> np.ndarray:
        positive_keys = {v.key for v in rule_positives(dataset, rules)}
        return np.asarray(
            [1.0 if vis.key in positive_keys else 0.0 for vis in candidates]
        )

    return score


def _random_dataset(dataset_id: str, rng: random.Random) -> Dataset:
    """One dataset with a randomized attribute profile.

    Row counts, category cardinalities, and temporal sortedness are drawn
    from continuous ranges that straddle the rule thresholds, so learning
    the rules requires resolving values finer than coarse feature bins.
    """
    rows = rng.randint(45, 120)
    n_quant = rng.randint(1, 4)
    n_nominal = rng.randint(0, 2)
    n_temporal = rng.randint(0, 2)
    attrs = []
    for i in range(n_quant):
        center = rng.uniform(-50, 50)
        scale = rng.uniform(0.5, 20)
        values = tuple(round(rng.gauss(center, scale), 6) for _ in range(rows))
        attrs.append(Attribute(f"q{i}", AttributeType.QUANTITATIVE, values))
    for i in range(n_nominal):
        cardinality = rng.randint(3, 28)
        labels = [f"v{j}" for j in range(cardinality)]
        values = [labels[j % cardinality] for j in range(rows)]
        rng.shuffle(values)
        attrs.append(Attribute(f"n{i}", AttributeType.NOMINAL, tuple(values)))
    for i in range(n_temporal):
        days = sorted(rng.sample(range(20000), rows))
        kind = rng.random()
        if kind < 0.30:  # fully shuffled
            rng.shuffle(days)
        elif kind < 0.55:  # nearly sorted: one contiguous block shuffled
            span = max(3, rows // 4)
            start = rng.randint(0, rows - span)
            block = days[start : start + span]
            rng.shuffle(block)
            days[start : start + span] = block
        epoch = date(1990, 1, 1)
        values = tuple((epoch + timedelta(days=d)).isoformat() for d in days)
        attrs.append(Attribute(f"t{i}", AttributeType.TEMPORAL, values))
    rng.shuffle(attrs)
    return Dataset(id=dataset_id, attributes=tuple(attrs))


def generate_synthetic_corpus(
    n_datasets: int,
    rules: Sequence[PlantedRule] = DEFAULT_RULES,
    seed: int = 1,
) -> Corpus:
    """Datasets with randomized profiles whose positives follow the planted
    rules exactly. Every dataset is guaranteed at least one positive and one
    negative candidate so train and test pools are always well-formed."""
    if n_datasets < 1:
        raise InvalidRuleSpec("n_datasets must be >= 1")
    if not rules:
        raise InvalidRuleSpec("need at least one planted rule")
    for rule in rules:
        if not callable(rule.condition):
            raise InvalidRuleSpec(f"rule {rule.name!r} has no condition")

    datasets = []
    vis_map = {}
    for index in range(n_datasets):
        dataset_id = f"synth-{index:04d}"
        rng = random.Random(stable_seed(seed, "synth", index))
        for _attempt in range(200):
            dataset = _random_dataset(dataset_id, rng)
            positives = rule_positives(dataset, rules)
            candidate_count = _candidate_count(dataset, rules)
            if positives and candidate_count > len(positives):
                break
        else:
            raise InvalidRuleSpec(
                f"could not satisfy rules for dataset {dataset_id} in 200 attempts"
            )
        datasets.append(dataset)
        vis_map[dataset_id] = positives
    return Corpus(datasets=tuple(datasets), visualizations=vis_map)


def _candidate_count(dataset: Dataset, rules: Sequence[PlantedRule]) -> int:
    """Size of the candidate space induced by the rules' configurations."""
    total = 0
    seen = set()
    for rule in rules:
        if rule.config.id in seen:
            continue
        seen.add(rule.config.id)
        total += sum(1 for _ in _rule_bindings(dataset, rule))
    return total
