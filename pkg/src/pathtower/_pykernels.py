"""Pure-Python versions of the compiled loops, used when the extension is absent."""
from __future__ import annotations

from collections import deque

import numpy as np

FOUND = 0
NONE = 1
BOUND = 2


def _flags(x: int, y: int, n: int, m: int, tmask: int) -> int:
    fl = 0
    if x == 0:
        fl |= 1
    if x == n - 1:
        fl |= 2
    if y == 0:
        fl |= 4
    if y == m - 1:
        fl |= 8
    return fl & tmask


def _reconstruct(par: dict, goal):
    out = []
    st = goal
    while st is not None:
        out.append(st)
        st = par[st]
    out.reverse()
    return out


def fp_walk(f, fp, sx, sy, tx, ty, tmask, max_len):
    f = [int(v) for v in f]
    fp = [int(v) for v in fp]
    n, m = len(f), len(fp)
    by_val: dict[int, list[int]] = {}
    for y, v in enumerate(fp):
        by_val.setdefault(v, []).append(y)
    if tx >= 0 and f[tx] != fp[ty]:
        return NONE, None, None
    par: dict = {}
    frontier = []
    if sx >= 0:
        if f[sx] != fp[sy]:
            return NONE, None, None
        s = (sx, sy, _flags(sx, sy, n, m, tmask))
        par[s] = None
        frontier.append(s)
    else:
        for x in range(n):
            for y in by_val.get(f[x], ()):
                s = (x, y, _flags(x, y, n, m, tmask))
                par[s] = None
                frontier.append(s)
    if not frontier:
        return NONE, None, None

    def done(s) -> bool:
        return s[2] == tmask and (tx < 0 or (s[0] == tx and s[1] == ty))

    goal = next((s for s in frontier if done(s)), None)
    depth = 1
    while goal is None and frontier:
        if depth + 1 > max_len:
            return BOUND, None, None
        nxt = []
        for s in frontier:
            x, y, fl = s
            for x2 in (x - 1, x, x + 1):
                if x2 < 0 or x2 >= n:
                    continue
                v = f[x2]
                for y2 in (y - 1, y, y + 1):
                    if y2 < 0 or y2 >= m or fp[y2] != v:
                        continue
                    s2 = (x2, y2, fl | _flags(x2, y2, n, m, tmask))
                    if s2 in par:
                        continue
                    par[s2] = s
                    nxt.append(s2)
                    if done(s2):
                        goal = s2
                        break
                if goal is not None:
                    break
            if goal is not None:
                break
        frontier = nxt
        depth += 1
    if goal is None:
        return NONE, None, None
    path = _reconstruct(par, goal)
    return FOUND, np.array([p[0] for p in path], dtype=np.int64), np.array([p[1] for p in path], dtype=np.int64)


def oracle_walk(f, fp, sx, sy, tx, ty, bound):
    f = [int(v) for v in f]
    fp = [int(v) for v in fp]
    n, m = len(f), len(fp)
    if n + m > 24:
        raise ValueError("oracle limited to |M| + |M'| <= 24")
    fullx, fully = (1 << n) - 1, (1 << m) - 1

    def done(s) -> bool:
        return s[2] == fullx and s[3] == fully and (tx < 0 or (s[0] == tx and s[1] == ty))

    par: dict = {}
    frontier = []
    for x in range(n):
        for y in range(m):
            if f[x] != fp[y]:
                continue
            if sx >= 0 and (x != sx or y != sy):
                continue
            s = (x, y, 1 << x, 1 << y)
            par[s] = None
            frontier.append(s)
    goal = next((s for s in frontier if done(s)), None)
    depth = 1
    while goal is None and frontier and depth + 1 <= bound:
        nxt = []
        for s in frontier:
            x, y, mx, my = s
            for x2 in (x - 1, x, x + 1):
                if x2 < 0 or x2 >= n:
                    continue
                for y2 in (y - 1, y, y + 1):
                    if y2 < 0 or y2 >= m or f[x2] != fp[y2]:
                        continue
                    s2 = (x2, y2, mx | (1 << x2), my | (1 << y2))
                    if s2 in par:
                        continue
                    par[s2] = s
                    nxt.append(s2)
                    if done(s2):
                        goal = s2
                        break
                if goal is not None:
                    break
            if goal is not None:
                break
        frontier = nxt
        depth += 1
    if goal is None:
        return NONE, None, None
    path = _reconstruct(par, goal)
    return FOUND, np.array([p[0] for p in path], dtype=np.int64), np.array([p[1] for p in path], dtype=np.int64)


def kp_maxdist(fplus, gplus, F, G):
    # grouping by the common value gives the same maximum as the pair loop
    fplus = np.asarray(fplus)
    gplus = np.asarray(gplus)
    F = np.asarray(F)
    G = np.asarray(G)
    best = -1
    for v in np.intersect1d(fplus, gplus):
        fa = F[fplus == v]
        ga = G[gplus == v]
        d = max(int(fa.max()) - int(ga.min()), int(ga.max()) - int(fa.min()))
        best = max(best, d)
    return best


def conju_counts(FPHI, GPSI, FAPHI, GAPSI, mode):
    FPHI = np.asarray(FPHI)
    GPSI = np.asarray(GPSI)
    FAPHI = np.asarray(FAPHI)
    GAPSI = np.asarray(GAPSI)
    d = np.abs(FPHI[:, None, :] - GPSI[None, :, :]).max(axis=2)
    d2 = np.abs(FAPHI[:, None, :] - GAPSI[None, :, :]).max(axis=2)
    if mode == 0:
        prem = d <= 1
        bad = prem & ((d2 > 1) | ((d == 0) & (d2 > 0)))
    else:
        prem = d == 0
        bad = prem & (d2 > 1)
    fails = int(bad.sum())
    fi = fk = -1
    if fails:
        idx = np.argwhere(bad)[0]
        fi, fk = int(idx[0]), int(idx[1])
    return int(prem.sum()), fails, fi, fk
