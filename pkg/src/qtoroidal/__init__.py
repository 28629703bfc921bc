"""Free-field realisations of quantum toroidal algebras and their numerical checks."""

__version__ = "0.1.0"

from .params import AlgebraParams, ParameterError, sample_params  # noqa: E402
from .report import CheckRecord, VerificationReport  # noqa: E402

__all__ = ["AlgebraParams", "ParameterError", "sample_params", "CheckRecord",
           "VerificationReport", "__version__"]
