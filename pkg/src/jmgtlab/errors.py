"""Exception hierarchy. Everything under NumericalFailure maps to CLI exit code 3."""


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


class FactorizationError(NumericalFailure):
    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DegeneracyError(NumericalFailure):
    """The quasilinear coefficient 1 - k*psi_t became non-positive."""

    def __init__(self, min_alpha, t=None):
        where = "" if t is None else f" at t={t:.6e}"
        super().__init__(f"degenerate coefficient: min alpha = {min_alpha:.6e}{where}")
        self.min_alpha = min_alpha
        self.t = t


class ConvergenceError(NumericalFailure):
    def __init__(self, increment, iterations, t=None):
        where = "" if t is None else f" at t={t:.6e}"
        super().__init__(
            f"fixed-point iteration did not converge after {iterations} "
            f"iterations{where} (last relative increment {increment:.3e})")
        self.increment = increment
        self.iterations = iterations
        self.t = t
