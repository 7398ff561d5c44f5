"""Tomography of time-bin qudits measured by time-resolved detection after a dispersive fiber."""

__version__ = "0.1.0"
