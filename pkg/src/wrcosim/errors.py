"""Exception types shared across the package."""


class NetlistError(ValueError):
    """Raised for malformed or invalid netlist input.

    Carries the 1-based line and column of the offending token when known.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "")
            message = f"{where}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    """Invalid solver or run configuration."""


class SolverError(RuntimeError):
    """Newton non-convergence or a singular linear solve.

    ``step`` is the index of the failing time step, when applicable.
    """

    def __init__(self, message: str, step: int | None = None, residual: float | None = None):
        self.step = step
        self.residual = residual
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class InconsistentStartError(ValueError):
    """Initial data violates the algebraic constraints at t0."""
