"""Copper-loss-optimal feedback-linearizing torque control for salient PMSMs."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
