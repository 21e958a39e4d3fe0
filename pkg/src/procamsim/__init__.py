"""Simulator and calibration toolkit for steerable projector-camera AR rigs."""

__version__ = "0.1.0"
