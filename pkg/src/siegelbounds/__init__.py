"""Rotation combinatorics, extremal widths and obstruction tests for quadratic
rational maps with Siegel disks."""

__version__ = "0.1.0"
