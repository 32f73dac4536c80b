"""Discrete data assimilation lab: Lorenz and 2D Navier-Stokes."""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
