class MTLabError(Exception):
    """Base class for errors raised by mtlab."""


class DomainError(MTLabError, ValueError):
    """An operation was called outside its domain.

    Examples are supports that are not subsets, overlapping regions or a
    non-contiguous conditioning region.
    """


class NumericDomainError(DomainError):
    """A matrix function was asked for outside its spectral domain."""


class DimensionCapError(DomainError):
    """A dense matrix would exceed the configured MTLAB_MAX_DIM."""


class ConfigError(MTLabError):
    """An experiment configuration is invalid."""
