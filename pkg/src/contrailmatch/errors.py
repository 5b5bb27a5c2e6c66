"""Exception hierarchy shared by all modules."""


class ContrailMatchError(Exception):
    """Base class for every error raised by this package."""


class LoadError(ContrailMatchError):
    """An input file is missing, malformed or violates its invariants."""


class OutOfDomainError(ContrailMatchError):
    """A query lies outside the meteorological grid beyond the clamp margin."""


class DataError(ContrailMatchError):
    """Ground-truth or runtime data is inconsistent."""


class ScenarioError(ContrailMatchError):
    """A synthetic scenario description cannot produce a usable scenario."""
