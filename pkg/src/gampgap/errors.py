"""Exception types raised across the package."""


class DomainError(ValueError):
    """A natural parameter fell outside the likelihood's domain."""

    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without meeting its tolerance.

    ``last`` carries the last iterate (or objective value) for inspection.
    """

    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


class DivergenceError(ConvergenceError):
    """Non-finite values appeared during iteration."""

    def __init__(self, msg, iteration=None, last=None):
        super().__init__(msg, last=last)
        self.iteration = iteration


class SingularCavityError(ArithmeticError):
    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class DegenerateLeverageError(ArithmeticError):
    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class UnsupportedDiagnosticError(ValueError):
    pass


class RefitError(RuntimeError):
    """A leave-one-out refit failed for observation ``index``."""

    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index
