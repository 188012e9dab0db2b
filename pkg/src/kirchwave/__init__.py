"""Spectral simulator and verification bench for a damped Kirchhoff wave
model with fading memory and a time-dependent mass coefficient."""

__version__ = "0.1.0"

from .core import default_problem, simulate, StepperConfig  # noqa: F401
