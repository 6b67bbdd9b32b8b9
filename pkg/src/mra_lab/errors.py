"""Exception types shared across the package."""


class MRALabError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatchError(MRALabError):
    """A vector or matrix does not match the ambient dimension."""


class NotAGroupError(MRALabError):
    """A custom element set fails the group axioms."""


class SizeLimitError(MRALabError):
    """Requested group order exceeds the configured cap."""


class AmbiguousStabilizerError(MRALabError):
    """Some orbit distance falls too close to the membership threshold."""


class NotASubgroupError(MRALabError):
    """The thresholded stabilizer candidate is not closed under the group law."""


class ZeroDirectionError(MRALabError):
    """A direction vector is identically zero."""


class EmptyDatasetError(MRALabError):
    """An operation requires at least one observation."""


class DegenerateEigensolveError(MRALabError):
    """The Jacobi eigensolver failed to converge."""


class NotANullDirectionError(MRALabError):
    """A direction expected in the projector null space is not."""


class ConfigInvalidError(MRALabError):
    """An experiment configuration violates the schema or a precondition."""


class SingularFisherError(MRALabError):
    """The Fisher information is singular where an invertible one is required."""
