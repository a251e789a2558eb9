"""Source localization for spreading processes on multiplex networks."""

__version__ = "0.1.0"
