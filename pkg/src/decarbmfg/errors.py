"""Exception hierarchy shared by all modules."""


class DecarbError(Exception):
    """Base class for all package errors."""


class ParameterError(DecarbError):
    """A model parameter violates its documented constraint.

    The message starts with the field path (e.g. ``params.N``) so CLI
    diagnostics can point at the offending config entry.
    """


class ConfigError(DecarbError):
    """A run configuration file is malformed or contains invalid fields."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class UsageError(DecarbError):
    """An API precondition was violated by the caller (wrong shapes, missing inputs)."""


class NumericalError(DecarbError):
    """A numerical failure: non-finite values, rank deficiency, non-convergence."""

    def __init__(self, message, iteration=None, path_index=None, condition=None, residual=None):
        super().__init__(message)
        self.iteration = iteration
        self.path_index = path_index
        self.condition = condition
        self.residual = residual


class ResourceError(DecarbError):
    """A resource budget (memory) would be exceeded."""

    def __init__(self, message, required_bytes=None, budget_bytes=None):
        super().__init__(message)
        self.required_bytes = required_bytes
        self.budget_bytes = budget_bytes
