"""Good shadows of minimizing sequences and supporting hyperplanes of immersed submanifolds."""

from .errors import (CapabilityError, ConfigError, DomainError, GeneralPositionError, GenerationError,
                     GoodShadowsError, InconsistencyError, NoSupportError, NumericalPrecisionError,
                     PreconditionError)
from .scenarios import VERSION as __version__

__all__ = [
    "CapabilityError", "ConfigError", "DomainError", "GeneralPositionError", "GenerationError",
    "GoodShadowsError", "InconsistencyError", "NoSupportError", "NumericalPrecisionError", "PreconditionError",
    "__version__",
]
