"""Joint-spectrum and polarization-entanglement maps for type-II SPDC photon pairs."""

from ._core import *  # noqa: F401,F403
from ._core import FitError, ValidationError

__all__ = [name for name in dir() if not name.startswith("_")]
