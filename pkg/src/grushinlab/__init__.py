"""Numerical laboratory for the frequency function of Baouendi-Grushin equations."""

__version__ = "0.1.0"

from .geometry import DEFAULT_DIMS, Dims, DomainError, dilate, gauge  # noqa: E402
from .solutions import builtin_members, manufactured  # noqa: E402

__all__ = ["DEFAULT_DIMS", "Dims", "DomainError", "builtin_members", "dilate", "gauge", "manufactured",
           "__version__"]
