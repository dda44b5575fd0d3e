"""Elliptic Weingarten hypersurfaces of M x R built as graphs over parallel families."""

__version__ = "0.1.0"
