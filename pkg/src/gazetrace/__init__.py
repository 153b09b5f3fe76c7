"""Gaze event detection, attention metrics and risk reporting for eye-tracking logs
recorded during an inhibitory-control sorting game."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
