"""Unpaired ultrasound-style image enhancement with tunable strength."""

__version__ = "0.1.0"
