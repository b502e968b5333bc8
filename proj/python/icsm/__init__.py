"""Constrained spatial autoregressive models for interval-valued data."""

from icsm._core import *  # noqa: F401,F403
from icsm._core import __version__  # noqa: F401
