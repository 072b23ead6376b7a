"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ValidationError(ValueError):
    """Structured input failed a consistency check."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class DegenerateEstimatorError(ValueError):
    """A quadratic-form estimator has neither snapshots nor diagonal loading."""


class ConfigError(ValueError):
    """A configuration file is malformed; carries the offending key and line."""

    def __init__(self, message, key=None, line=None):
        where = ""
        if key is not None:
            where += f" [key '{key}'"
            where += f", line {line}]" if line is not None else "]"
        super().__init__(message + where)
        self.key = key
        self.line = line
