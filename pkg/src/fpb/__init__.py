"""Maze-navigation and tangram-assembly benchmark toolkit for video reasoning models.

Generates instances and golden solution videos, and scores candidate videos
at the pixel level.
"""

__version__ = "0.1.0"
