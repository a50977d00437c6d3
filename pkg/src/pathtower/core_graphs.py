"""Path graphs, intervals and the maps between them."""
from __future__ import annotations

from .graphs import Interval, PathGraph, interval_gap, r_k
from .maps import (
    GraphMap,
    compose,
    compose_all,
    contracts_rk,
    enumerate_epis,
    epi_array,
    fiber_components,
    is_epi,
    is_lipschitz,
    is_surjective,
    max_distance,
    min_fiber_component,
    r_close,
    repetition,
    stretch,
)

__all__ = [
    "Interval", "PathGraph", "interval_gap", "r_k", "GraphMap", "compose", "compose_all",
    "contracts_rk", "enumerate_epis", "epi_array", "fiber_components", "is_epi", "is_lipschitz",
    "is_surjective", "max_distance", "min_fiber_component", "r_close", "repetition", "stretch",
]
