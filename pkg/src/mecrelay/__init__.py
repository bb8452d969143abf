"""Delay-outage analysis of relay selection in computing-enabled relay networks."""

__version__ = "0.1.0"
