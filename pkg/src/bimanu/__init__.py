"""Desk-scale bimanual teleoperation and visuotactile imitation learning."""

__version__ = "0.1.0"
