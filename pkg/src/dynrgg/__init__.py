"""Dynamic random geometric graphs on the unit torus under Random Walk mobility."""

__version__ = "0.1.0"
