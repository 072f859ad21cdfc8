"""Driven Kerr-magnon / CPW cavity / NV-spin hybrid: model reduction and dynamics."""

__version__ = "0.1.0"

from .errors import KerrPolaritonError, NumericalError, ValidationError  # noqa: E402
from .model import DerivedScales, derive  # noqa: E402
from .params import CouplingCalibration, PhysicalParams  # noqa: E402

__all__ = [
    "__version__",
    "CouplingCalibration",
    "DerivedScales",
    "KerrPolaritonError",
    "NumericalError",
    "PhysicalParams",
    "ValidationError",
    "derive",
]
