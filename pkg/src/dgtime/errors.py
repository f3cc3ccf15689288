"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class ConfigurationError(RuntimeError):
    """A configuration is internally inconsistent (e.g. too-weak quadrature)."""


class UnsupportedConfigurationError(RuntimeError):
    """The requested operation is not available for this variant."""


class NumericalFailureError(RuntimeError):
    """A solve failed numerically; carries the offending slab index."""

    def __init__(self, message, slab=None, residual=None):
        super().__init__(message)
        self.slab = slab
        self.residual = residual
