from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathtower import kernels
from pathtower.maps import epi_array
from pathtower.tower import random_epi

BACKENDS = kernels.backends()


@pytest.fixture(scope="module")
def rng() -> np.random.Generator:
    return np.random.default_rng(11)


def test_pure_switch_forces_python_backend() -> None:
    env = dict(os.environ, PATHTOWER_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "from pathtower import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@given(st.integers(1, 9), st.integers(1, 9), st.integers(1, 4), st.integers(0, 2**31))
@settings(max_examples=120, deadline=None)
def test_fp_walk_backends_agree(n: int, n2: int, m: int, seed: int) -> None:
    if n < m or n2 < m:
        return
    rng = np.random.default_rng(seed)
    f = random_epi(rng, n, m).vals
    fp = random_epi(rng, n2, m).vals
    res = [kernels.fp_walk(f, fp, -1, -1, -1, -1, 15, 4 * n * n2, be) for be in BACKENDS.values()]
    assert all(r[0] == res[0][0] for r in res)
    if res[0][0] == kernels.FOUND:
        lens = {r[1].shape[0] for r in res}
        assert len(lens) == 1  # shortest walk, same length everywhere


@given(st.integers(1, 6), st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**31))
@settings(max_examples=120, deadline=None)
def test_oracle_walk_backends_agree(n: int, n2: int, m: int, seed: int) -> None:
    if n < m or n2 < m:
        return
    rng = np.random.default_rng(seed)
    f = random_epi(rng, n, m).vals
    fp = random_epi(rng, n2, m).vals
    res = [kernels.oracle_walk(f, fp, 0, 0, -1, -1, 60, be) for be in BACKENDS.values()]
    assert len({r[0] for r in res}) == 1


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 8), st.integers(0, 8)), min_size=1, max_size=40))
@settings(max_examples=200, deadline=None)
def test_kp_maxdist_against_pair_loop(rows: list[tuple[int, int, int, int]]) -> None:
    a, b, F, G = (np.array(x, dtype=np.int64) for x in zip(*rows))
    brute = max([abs(int(F[i]) - int(G[j])) for i in range(len(a)) for j in range(len(a)) if a[i] == b[j]], default=-1)
    for be in BACKENDS.values():
        assert kernels.kp_maxdist(a, b, F, G, be) == brute


def test_conju_counts_backends_agree(rng: np.random.Generator) -> None:
    phis = epi_array(5, 3)
    vals = [rng.integers(0, 4, 3) for _ in range(4)]
    arrs = [np.clip(v[phis], 0, 3) for v in vals]
    for mode in (0, 1):
        res = {be: kernels.conju_counts(*arrs, mode, backend=impl) for be, impl in BACKENDS.items()}
        assert len({tuple(r) for r in res.values()}) == 1
