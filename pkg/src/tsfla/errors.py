"""Exception types raised across the package."""


class TsflaError(Exception):
    """Base class for all package errors."""


class ConfigurationError(TsflaError, ValueError):
    """Invalid configuration, unknown identifier or inconsistent settings."""


class EmptySampleError(TsflaError, ValueError):
    pass


class FlatObjectiveError(TsflaError, ValueError):
    """All sampled objective values are identical, so no anchors exist."""


class ModelUnbuiltError(TsflaError, RuntimeError):
    """A surrogate was queried before its archive could support it."""


class SnapshotTooSmallError(TsflaError, ValueError):
    pass


class DegenerateAnchorError(TsflaError, ValueError):
    pass


class DegenerateDatasetError(TsflaError, ValueError):
    pass


class UndefinedMetricError(TsflaError, ValueError):
    pass


class SampleTooSmallError(TsflaError, ValueError):
    pass
