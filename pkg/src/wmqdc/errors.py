"""Exception and warning types shared across the package."""


class TruncationError(ValueError):
    """A state has non-negligible weight at the Fock cutoff."""


class CutoffMismatchError(ValueError):
    """Two Fock vectors or operators live in spaces of different size."""


class DegeneratePostselectionError(ArithmeticError):
    """The post-selected (conditional) state has vanishing norm."""


class ValidityWarning(UserWarning):
    """Parameters fall outside the window where an approximation holds."""
