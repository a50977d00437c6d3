"""Endpoint types, amalgamation and type lifting in one namespace."""
from __future__ import annotations

from .amalgam import (
    Amalgam,
    Anchors,
    amalgam_problems,
    amalgamate_aligned,
    amalgamate_anchored,
    amalgamate_search,
    base_amalgamate,
    oracle_amalgamate,
    search_bound,
)
from .lifting import LiftLevel, TypeLift, amalgamate_typed, lift_through, lift_type
from .ltypes import LType, compute_type, enumerate_types, type_signature

__all__ = [
    "Amalgam", "Anchors", "amalgam_problems", "amalgamate_aligned", "amalgamate_anchored",
    "amalgamate_search", "base_amalgamate", "oracle_amalgamate", "search_bound", "LiftLevel",
    "TypeLift", "amalgamate_typed", "lift_through", "lift_type", "LType", "compute_type",
    "enumerate_types", "type_signature",
]
