"""Depth recovery from camera-projector reflectance fields."""

__version__ = "0.1.0"
