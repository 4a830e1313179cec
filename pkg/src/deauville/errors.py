"""Exception hierarchy shared across the pipeline.

Exit-code mapping used by the CLI: ValidationError -> 2,
TrainingDivergenceError -> 3, UnrecoverableStateError -> 4.
"""


class DeauvilleError(Exception):
    """Base class for all pipeline errors."""


class ValidationError(DeauvilleError):
    """Invalid input, configuration, or precondition violation."""


class UndefinedKappaError(ValidationError):
    """Weighted kappa is undefined (zero expected disagreement)."""


class TrainingDivergenceError(DeauvilleError):
    """Training produced a non-finite loss."""


class UnrecoverableStateError(DeauvilleError):
    """A persisted run directory is corrupt and cannot be resumed."""
