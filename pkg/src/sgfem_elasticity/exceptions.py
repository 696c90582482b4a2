"""Exception types raised by the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside its admissible range or has the wrong shape."""


class InadmissibleFieldError(ValueError):
    """The Young's modulus field is not uniformly bounded away from zero."""


class NotSPDError(RuntimeError):
    """A block that must be symmetric positive definite failed to factorize."""


class InsufficientDataError(RuntimeError):
    """Too few Lanczos steps were recorded to estimate a spectrum."""


class SingularSystemError(RuntimeError):
    """A deterministic system could not be solved (singular matrix)."""
