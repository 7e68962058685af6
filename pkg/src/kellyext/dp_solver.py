"""Finite-horizon value iteration (alias of :mod:`kellyext.dp`)."""

from .dp import *  # noqa: F401,F403
from .dp import __all__  # noqa: F401
