"""Exception hierarchy shared by all vizrec modules."""


class VizrecError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(VizrecError):
    """A file or payload could not be parsed in the expected format."""


class EmptyDataset(VizrecError):
    """A dataset has zero columns or zero rows."""


class DuplicateAttribute(VizrecError):
    """Two attributes in one dataset share a name."""


class DanglingReference(VizrecError):
    """A corpus visualization references an unknown attribute or configuration."""


class InvalidVisualization(ParseError):
    """A visualization binding violates its configuration's slot contract."""


class TooFewDatasets(VizrecError):
    """A corpus split would leave one of the partitions empty."""


class EmptyAttribute(VizrecError):
    """An attribute has no non-missing values to compute features on."""


class SchemaMismatch(VizrecError):
    """A vector or normalizer does not match the expected meta-feature schema."""


class EmptyCorpus(VizrecError):
    """A corpus contains no visualizations to build a vocabulary from."""


class NoNegativesAvailable(VizrecError):
    """A dataset's candidate space minus its positives is empty."""


class UnknownAttribute(VizrecError):
    """An attribute name is not present in the dataset."""


class UnknownConfig(VizrecError):
    """A configuration id is not in the vocabulary."""


class IndexOutOfRange(VizrecError):
    """A cross-product mask references a sparse-feature index out of range."""


class ShapeMismatch(VizrecError):
    """A feature bundle's shapes do not match the model."""


class InvalidShape(VizrecError):
    """A model shape record is internally inconsistent."""


class VersionMismatch(VizrecError):
    """A model file was written by an incompatible format version."""


class CorruptFile(VizrecError):
    """A model file is truncated or fails its integrity checks."""


class DivergedLoss(VizrecError):
    """Training produced a non-finite loss."""


class NoPositives(VizrecError):
    """A test dataset has no positive visualizations in its pool."""


class InvalidRuleSpec(VizrecError):
    """A synthetic-corpus rule specification is malformed."""


class NoCandidates(VizrecError):
    """Query constraints eliminated every candidate visualization."""


class ModelNotLoaded(VizrecError):
    """An operation requiring a model was called before one was loaded."""


class CandidateLimitExceeded(VizrecError):
    """A dataset's constrained candidate space exceeds the serving guard."""

    def __init__(self, bound: int, limit: int):
        self.bound = bound
        self.limit = limit
        super().__init__(
            f"candidate space has at least {bound} visualizations (limit {limit})"
        )
