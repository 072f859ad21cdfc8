"""Exception hierarchy.

Validation problems derive from :class:`ValidationError`, numerical breakdowns
(instability, integrator failure) from :class:`NumericalError`. The CLI maps
the two families to exit codes 1 and 2.
"""


class KerrPolaritonError(Exception):
    pass


class ValidationError(KerrPolaritonError, ValueError):
    pass


class NumericalError(KerrPolaritonError, ArithmeticError):
    pass


class InvalidDimensionError(ValidationError):
    pass


class SpaceMismatchError(ValidationError):
    pass


class LayoutError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class UnphysicalRegimeError(ValidationError):
    pass


class SingularGeometryError(ValidationError):
    pass


class DegenerateDetuningError(ValidationError):
    pass


class SqueezingUndefinedError(NumericalError):
    """Two-magnon term too strong: the magnon mode is in the hyperbolic regime."""


class UndefinedCriticalityError(NumericalError):
    pass


class UnstablePolaritonError(NumericalError):
    """The low-frequency polariton has ``omega_minus**2 <= 0``."""


class IntegrationError(NumericalError):
    pass


class PositivityError(IntegrationError):
    pass
