"""Gamble primitives and rate functions (alias of :mod:`kellyext.gamble`)."""

from .gamble import *  # noqa: F401,F403
from .gamble import __all__  # noqa: F401
