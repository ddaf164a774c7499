import logging

import pytest

from vizrec.evaluator import generate_synthetic_corpus
from vizrec.tabular import split_corpus
from vizrec.trainer import TrainConfig, train

logging.getLogger("vizrec").setLevel(logging.ERROR)

QUICK_CFG = TrainConfig(
    negatives_per_dataset=10,
    learning_rate=0.05,
    epochs=4,
    batch_size=32,
    seed=11,
    hidden=(32, 16),
    val_negatives=60,
)


@pytest.fixture(scope="session")
def small_corpus():
    return generate_synthetic_corpus(30, seed=101)


@pytest.fixture(scope="session")
def small_splits(small_corpus):
    return split_corpus(small_corpus, (0.66, 0.17, 0.17), seed=5)


@pytest.fixture(scope="session")
def small_model(small_splits):
    train_split, val_split, _ = small_splits
    model, report = train(train_split, val_split, QUICK_CFG)
    return model, report
