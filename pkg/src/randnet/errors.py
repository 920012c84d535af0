"""Exception types shared across the package."""


class RandnetError(Exception):
    """Base class for all randnet errors."""


class DimensionMismatch(RandnetError, ValueError):
    """Input dimensions do not match the model or dataset."""


class NonFiniteInput(RandnetError, ValueError):
    """An input array contains NaN or infinite entries."""


class NonFiniteValue(RandnetError, ValueError):
    """A probed function returned NaN or an infinite value."""


class SolveFailure(RandnetError):
    """A linear solve broke down on a numerically pathological system."""


class NonFiniteRisk(RandnetError):
    """The gradient-descent objective became NaN/Inf (constants mis-set)."""


class NonFiniteLoss(RandnetError):
    """Adam training diverged to a NaN/Inf loss."""


class DomainError(RandnetError, ValueError):
    """An argument lies outside the mathematically valid domain."""


class TooSmall(RandnetError, ValueError):
    """A dataset is too small for the requested split."""


class EmptyCandidates(RandnetError, ValueError):
    """A selection step received no candidates to choose from."""


class UsageError(RandnetError):
    """Invalid command-line or configuration input."""
