"""vizrec: a machine-learned visualization recommendation engine.

Learns a wide-and-deep scoring model from a corpus of datasets and their
user-created visualizations, then generates, scores, and ranks candidate
visualizations for unseen tabular datasets.
"""

from .tabular import (
    Attribute,
    AttributeType,
    Corpus,
    Dataset,
    load_corpus,
    load_dataset,
    split_corpus,
)
from .visspace import (
    AttributeCombination,
    ConfigVocabulary,
    VisConfiguration,
    Visualization,
    enumerate_combinations,
    extract_vocabulary,
    generate_candidates,
    sample_negatives,
)

__version__ = "0.1.0"

__all__ = [
    "Attribute",
    "AttributeType",
    "AttributeCombination",
    "ConfigVocabulary",
    "Corpus",
    "Dataset",
    "VisConfiguration",
    "Visualization",
    "enumerate_combinations",
    "extract_vocabulary",
    "generate_candidates",
    "load_corpus",
    "load_dataset",
    "sample_negatives",
    "split_corpus",
    "__version__",
]
