"""Finite path-graph epimorphisms, amalgamation, joint projection and
certified inverse-system towers."""
from __future__ import annotations

__version__ = "0.1.0"
