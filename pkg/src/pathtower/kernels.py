"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting PATHTOWER_PURE=1
forces the pure-Python implementation.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

FOUND, NONE, BOUND = 0, 1, 2

_compiled = None
if os.environ.get("PATHTOWER_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _compiled  # type: ignore[attr-defined,no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _pykernels


def _c(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.int64)


def fp_walk(f, fp, sx: int, sy: int, tx: int, ty: int, tmask: int, max_len: int, backend=None):
    impl = backend or _impl
    return impl.fp_walk(_c(f), _c(fp), int(sx), int(sy), int(tx), int(ty), int(tmask), int(max_len))


def oracle_walk(f, fp, sx: int, sy: int, tx: int, ty: int, bound: int, backend=None):
    impl = backend or _impl
    return impl.oracle_walk(_c(f), _c(fp), int(sx), int(sy), int(tx), int(ty), int(bound))


def kp_maxdist(fplus, gplus, F, G, backend=None) -> int:
    impl = backend or _impl
    return int(impl.kp_maxdist(_c(fplus), _c(gplus), _c(F), _c(G)))


def conju_counts(FPHI, GPSI, FAPHI, GAPSI, mode: int, backend=None):
    impl = backend or _impl
    return impl.conju_counts(_c(FPHI), _c(GPSI), _c(FAPHI), _c(GAPSI), int(mode))


def backends() -> dict:
    """Available implementations by name."""
    out = {"python": _pykernels}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
