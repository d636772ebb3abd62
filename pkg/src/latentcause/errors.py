"""Exception taxonomy for estimation failures.

Every error raised by the library derives from :class:`LatentCauseError`, so
callers (including the CLI, which maps them to exit code 2) can catch one
type. Each subclass names a specific failure mode of the spectral or
regression stages.
"""


class LatentCauseError(Exception):
    """Base class for all estimation errors raised by this package."""


class DegenerateSpectrum(LatentCauseError):
    """The k-th eigenvalue fell below the floor: K is too large for the data."""


class EmptyInput(LatentCauseError):
    """An operation received zero samples."""


class DimensionMismatch(LatentCauseError):
    """Array shapes are inconsistent with each other or with the model."""


class NonConvergence(LatentCauseError):
    """Power iteration failed to stabilize within the iteration budget."""


class NotPSD(LatentCauseError):
    """A matrix required to be positive semidefinite failed factorization."""


class AlignmentAmbiguity(LatentCauseError):
    """Two component matchings are indistinguishable; components not separated."""


class RankDeficiency(LatentCauseError):
    """A cross-moment matrix has numerical rank below the requested K."""


class UnfittedModel(LatentCauseError):
    """A prediction was requested from a model that has not been fitted."""


class AllZeroLikelihood(LatentCauseError):
    """Every component likelihood underflowed and no fallback was possible."""


class KTooLarge(LatentCauseError):
    """Exhaustive permutation search was forced for K above the K! budget."""


class SingularSystem(LatentCauseError):
    """Normal equations remained singular at the maximum ridge level."""


class DegenerateCluster(LatentCauseError):
    """A component's total posterior weight is numerically zero."""


class InvalidConfig(LatentCauseError):
    """A configuration value is missing, malformed, or out of range."""
