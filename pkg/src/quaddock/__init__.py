"""Vision-guided UAV docking on a moving quadruped platform."""

__version__ = "0.1.0"
