"""Training pipeline: example construction, SGD, and validation-based selection.

Examples are each dataset's positives plus a fixed number of negatives
sampled once at build time. The whole run is deterministic for a fixed
config: sampling, shuffling, and initialization all derive from the seed.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import network
from .encoding import (
    CROSS_MAX_MASKS,
    CROSS_MIN_COOCCURRENCE,
    FeatureEncoder,
    build_cross_spec,
)
from .errors import DivergedLoss, NoNegativesAvailable
from .metafeatures import compute_metafeatures, default_schema, fit_normalizer
from .network import ModelShape, WideDeepModel
from .tabular import Corpus
from .util import stable_seed
from .visspace import ConfigVocabulary, Visualization, extract_vocabulary, sample_negatives

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    negatives_per_dataset: int = 20
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 64
    seed: int = 1
    early_stop_patience: int = 3
    mode: str = "full"
    hidden: tuple = (256, 64, 16)
    embed_dim: int = 16
    max_arity: int = 3
    bins: int = 10
    val_negatives: int = 99
    resample_negatives_per_epoch: bool = False
    cross_min_cooccurrence: int = CROSS_MIN_COOCCURRENCE
    cross_max_masks: int = CROSS_MAX_MASKS

    def __post_init__(self):
        positives = (
            self.negatives_per_dataset,
            self.learning_rate,
            self.epochs,
            self.batch_size,
            self.early_stop_patience,
        )
        if any(p <= 0 for p in positives):
            raise ValueError("all training knobs must be positive")
        if not self.learning_rate < 1:
            raise ValueError("learning_rate must be < 1")


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)  # per epoch
    val_ndcg5: list = field(default_factory=list)  # per epoch
    selected_epoch: int = 0
    wall_clock_sec: float = 0.0
    skipped_datasets: int = 0

    def to_dict(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_ndcg5": self.val_ndcg5,
            "selected_epoch": self.selected_epoch,
            "wall_clock_sec": round(self.wall_clock_sec, 3),
            "skipped_datasets": self.skipped_datasets,
        }


@dataclass(frozen=True)
class LabeledExample:
    """One training visualization before feature encoding."""

    vis: Visualization
    label: int
    dataset_id: str


def build_examples(
    corpus_split: Corpus,
    vocab: ConfigVocabulary,
    cfg: TrainConfig,
    epoch: int = 0,
) -> "tuple[list, int]":
    """Per dataset: all positives plus sampled negatives, tagged with the
    dataset id. Returns (examples, skipped-dataset count)."""
    examples = []
    skipped = 0
    for dataset in corpus_split.datasets:
        positives = [
            v
            for v in corpus_split.visualizations_of(dataset.id)
            if v.config_id in vocab
        ]
        try:
            negatives = sample_negatives(
                dataset,
                positives,
                vocab,
                cfg.negatives_per_dataset,
                seed=stable_seed(cfg.seed, "neg", dataset.id, epoch),
                max_arity=cfg.max_arity,
            )
        except NoNegativesAvailable:
            logger.warning("dataset %s: no negatives available, skipped", dataset.id)
            skipped += 1
            continue
        for vis in positives:
            examples.append(LabeledExample(vis=vis, label=1, dataset_id=dataset.id))
        for vis in negatives:
            examples.append(LabeledExample(vis=vis, label=0, dataset_id=dataset.id))
    return examples, skipped


def _assert_no_leakage(*splits: Corpus) -> None:
    seen: dict = {}
    for i, split in enumerate(splits):
        for dataset_id in split.dataset_ids:
            if dataset_id in seen:
                raise ValueError(
                    f"dataset {dataset_id!r} appears in splits {seen[dataset_id]} and {i}"
                )
            seen[dataset_id] = i


def fit_feature_pipeline(
    train_split: Corpus, vocab: ConfigVocabulary, cfg: TrainConfig
) -> FeatureEncoder:
    """Schema plus a normalizer fitted on the training attributes only."""
    schema = default_schema()
    vectors = [
        compute_metafeatures(attr, schema)
        for dataset in train_split.datasets
        for attr in dataset.attributes
    ]
    normalizer = fit_normalizer(vectors)
    return FeatureEncoder(
        schema, normalizer, vocab, max_arity=cfg.max_arity, bins=cfg.bins
    )


def train(
    train_split: Corpus,
    val_split: Corpus,
    cfg: TrainConfig,
    vocab: Optional[ConfigVocabulary] = None,
) -> "tuple[WideDeepModel, TrainReport]":
    """SGD on the summed per-visualization log loss, returning the snapshot
    with the best validation ranking quality."""
    from .evaluator import PoolConfig, evaluate, model_scorer

    started = time.monotonic()
    _assert_no_leakage(train_split, val_split)
    if vocab is None:
        vocab = extract_vocabulary(train_split)
    encoder = fit_feature_pipeline(train_split, vocab, cfg)

    examples, skipped = build_examples(train_split, vocab, cfg)
    bundles = [
        encoder.encode(train_split.dataset(ex.dataset_id), ex.vis) for ex in examples
    ]
    labels = np.asarray([ex.label for ex in examples], dtype=float)
    cross_spec = build_cross_spec(
        encoder,
        [b for b, ex in zip(bundles, examples) if ex.label == 1],
        min_cooccurrence=cfg.cross_min_cooccurrence,
        max_masks=cfg.cross_max_masks,
    )
    shape = ModelShape(
        schema=encoder.schema,
        normalizer=encoder.normalizer,
        vocab=vocab,
        cross_spec=cross_spec,
        hidden=cfg.hidden,
        embed_dim=cfg.embed_dim,
        max_arity=cfg.max_arity,
        bins=cfg.bins,
        mode=cfg.mode,
    )
    model = network.init(shape, seed=stable_seed(cfg.seed, "init"))
    pool_cfg = PoolConfig(negatives_per_dataset=cfg.val_negatives, seed=cfg.seed)

    report = TrainReport(skipped_datasets=skipped)
    best_snapshot = network.snapshot_parameters(model)
    best_ndcg = -1.0
    best_epoch = 0
    best_strict_epoch = 0
    indices = np.arange(len(examples))

    for epoch in range(1, cfg.epochs + 1):
        if cfg.resample_negatives_per_epoch and epoch > 1:
            examples, _ = build_examples(train_split, vocab, cfg, epoch=epoch - 1)
            bundles = [
                encoder.encode(train_split.dataset(ex.dataset_id), ex.vis)
                for ex in examples
            ]
            labels = np.asarray([ex.label for ex in examples], dtype=float)
            indices = np.arange(len(examples))

        rng = np.random.default_rng(stable_seed(cfg.seed, "shuffle", epoch))
        order = rng.permutation(indices)
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            chosen = order[start : start + cfg.batch_size]
            batch = network.make_batch(model, encoder, [bundles[i] for i in chosen])
            scores, cache = network.forward_batch(model, batch)
            batch_labels = labels[chosen]
            epoch_loss += float(
                -np.sum(
                    batch_labels * np.log(scores)
                    + (1.0 - batch_labels) * np.log(1.0 - scores)
                )
            )
            grads = network.backward_batch(model, batch, cache, batch_labels)
            network.apply_gradients(model, grads, cfg.learning_rate)
        mean_loss = epoch_loss / len(order)
        if not np.isfinite(mean_loss):
            raise DivergedLoss(f"epoch {epoch}: loss {mean_loss}")
        report.train_loss.append(mean_loss)

        val_result = evaluate(
            model_scorer(model, encoder), val_split, vocab, pool_cfg
        )
        ndcg5 = val_result.ndcg[5]
        report.val_ndcg5.append(ndcg5)
        logger.info("epoch %d: loss %.4f val nDCG@5 %.4f", epoch, mean_loss, ndcg5)
        # ties keep the later (longer-trained) snapshot; patience counts only
        # strict improvements
        if ndcg5 > best_ndcg:
            best_strict_epoch = epoch
        if ndcg5 >= best_ndcg:
            best_ndcg = ndcg5
            best_epoch = epoch
            best_snapshot = network.snapshot_parameters(model)
        if epoch - best_strict_epoch >= cfg.early_stop_patience:
            logger.info("early stop at epoch %d (best %d)", epoch, best_epoch)
            break

    network.restore_parameters(model, best_snapshot)
    report.selected_epoch = best_epoch
    report.wall_clock_sec = time.monotonic() - started
    return model, report
