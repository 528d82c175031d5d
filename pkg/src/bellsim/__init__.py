"""Simulator and analysis toolkit for Bell-type experiments under
hidden-influence models with local parts."""

__version__ = "0.1.0"
