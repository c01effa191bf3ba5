"""Data-parallel plant microRNA prediction and functional annotation."""

__version__ = "0.1.0"
