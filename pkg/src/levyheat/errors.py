"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the admissible range of a formula."""


class PoleError(DomainError):
    """Evaluation exactly at a pole (Gamma at a non-positive integer)."""


class OverflowSignal(OverflowError):
    """Result exceeds the representable double range."""


class DivergenceError(DomainError):
    """Evaluation at an argument where the function diverges (K_nu at 0)."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not converge; carries the achieved estimate."""

    def __init__(self, message, estimate=None, value=None):
        super().__init__(message)
        self.estimate = estimate
        self.value = value


class NoRootError(RuntimeError):
    """Bisection target not reached within the search ceiling."""


class BlowupError(RuntimeError):
    """Solver field exceeded the blow-up guard; carries the offending index."""

    def __init__(self, step, cell, value):
        super().__init__(
            f"field blow-up at step {step}, cell {cell}: |X| = {value:.3e}"
        )
        self.step = step
        self.cell = cell
        self.value = value


class ValidationError(ValueError):
    """Config validation failure; carries the first offending key path."""

    def __init__(self, key_path, message):
        super().__init__(f"{key_path}: {message}")
        self.key_path = key_path


class DegenerateMeasureError(DomainError):
    """Levy measure carries no mass where the operation requires it."""
