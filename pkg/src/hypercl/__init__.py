"""Relative-entropy weak-strong uniqueness audits for hyperbolic conservation laws."""

from __future__ import annotations

__version__ = "0.1.0"
