"""Figure rendering for multiplex source-localization result CSVs."""

__version__ = "0.1.0"
