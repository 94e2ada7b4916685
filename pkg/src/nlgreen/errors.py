"""Exception types shared across the package.

Exit-code mapping used by the CLI: configuration problems map to 2,
numerical failures to 3, scientific budget violations to 1.
"""


class ConfigurationError(ValueError):
    """Invalid configuration: bad parameter ranges, empty grids, schema errors."""


class NumericsError(RuntimeError):
    """Numerical failure: non-convergence, singular systems, invalid quadrature."""


class NonConvergenceError(NumericsError):
    """Iterative solver exceeded its iteration budget.

    Carries the relative residual history so runs can be diagnosed offline.
    """

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])
