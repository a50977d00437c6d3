# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Semantics mirror _pykernels exactly."""
import numpy as np

FOUND = 0
NONE = 1
BOUND = 2


cdef inline int _flags(long long x, long long y, long long n, long long m, int tmask):
    cdef int fl = 0
    if x == 0:
        fl |= 1
    if x == n - 1:
        fl |= 2
    if y == 0:
        fl |= 4
    if y == m - 1:
        fl |= 8
    return fl & tmask


def fp_walk(const long long[::1] f, const long long[::1] fp,
            long long sx, long long sy, long long tx, long long ty,
            int tmask, long long max_len):
    """Shortest walk in the fiber product of f and fp.

    Returns (status, xs, ys). A walk starts at (sx, sy) (every product
    vertex when sx < 0), ends at (tx, ty) (anywhere when tx < 0) and passes
    through the boundary rows/columns selected by tmask (1: x=0, 2: x=n-1,
    4: y=0, 8: y=m-1). max_len caps the number of walk vertices.
    """
    cdef long long n = f.shape[0], m = fp.shape[0]
    cdef long long L = 0, x, y, v, i
    for x in range(n):
        if f[x] + 1 > L:
            L = f[x] + 1
    for y in range(m):
        if fp[y] + 1 > L:
            L = fp[y] + 1
    cnt_a = np.zeros(L, dtype=np.int64)
    rank_a = np.empty(m, dtype=np.int64)
    cdef long long[::1] cnt = cnt_a
    cdef long long[::1] rank = rank_a
    for y in range(m):
        rank[y] = cnt[fp[y]]
        cnt[fp[y]] += 1
    off_a = np.empty(n + 1, dtype=np.int64)
    cdef long long[::1] off = off_a
    off[0] = 0
    for x in range(n):
        off[x + 1] = off[x] + cnt[f[x]]
    cdef long long T = off[n]
    if T == 0:
        return NONE, None, None
    nx_a = np.empty(T, dtype=np.int64)
    ny_a = np.empty(T, dtype=np.int64)
    cdef long long[::1] nx = nx_a
    cdef long long[::1] ny = ny_a
    # fill node coordinates; each x lists its partners in increasing y
    fill_a = np.zeros(L, dtype=np.int64)
    cdef long long[::1] fill = fill_a
    start_a = np.zeros(L + 1, dtype=np.int64)
    cdef long long[::1] start = start_a
    for v in range(L):
        start[v + 1] = start[v] + cnt[v]
    ylist_a = np.empty(m, dtype=np.int64)
    cdef long long[::1] ylist = ylist_a
    for y in range(m):
        ylist[start[fp[y]] + rank[y]] = y
    cdef long long k
    for x in range(n):
        v = f[x]
        for k in range(cnt[v]):
            nx[off[x] + k] = x
            ny[off[x] + k] = ylist[start[v] + k]

    # compact flag indexing
    cdef int bits[4]
    cdef int nb = 0, b
    for b in range(4):
        if tmask & (1 << b):
            bits[nb] = 1 << b
            nb += 1
    cdef long long S = 1 << nb
    cdef long long full = S - 1

    par_a = np.full(T * S, -1, dtype=np.int64)
    cdef long long[::1] par = par_a
    q_a = np.empty(T * S, dtype=np.int64)
    cdef long long[::1] q = q_a
    cdef long long qh = 0, qt = 0
    cdef long long node, st, node2, st2, fl, cfl, x2, y2, dx, dy, raw
    cdef long long target = -1
    if tx >= 0:
        if fp[ty] != f[tx]:
            return NONE, None, None
        target = off[tx] + rank[ty]
    cdef long long goal = -1

    if sx >= 0:
        if fp[sy] != f[sx]:
            return NONE, None, None
        node = off[sx] + rank[sy]
        raw = _flags(sx, sy, n, m, tmask)
        cfl = 0
        for b in range(nb):
            if raw & bits[b]:
                cfl |= 1 << b
        st = node * S + cfl
        par[st] = -2
        q[qt] = st
        qt += 1
    else:
        for node in range(T):
            raw = _flags(nx[node], ny[node], n, m, tmask)
            cfl = 0
            for b in range(nb):
                if raw & bits[b]:
                    cfl |= 1 << b
            st = node * S + cfl
            par[st] = -2
            q[qt] = st
            qt += 1
    for i in range(qt):
        st = q[i]
        if st % S == full and (target < 0 or st // S == target):
            goal = st
            break

    cdef long long depth = 1
    cdef long long layer_end = qt
    while goal < 0 and qh < qt:
        if qh == layer_end:
            depth += 1
            layer_end = qt
        if depth + 1 > max_len:
            return BOUND, None, None
        st = q[qh]
        qh += 1
        node = st // S
        fl = st % S
        x = nx[node]
        y = ny[node]
        for dx in range(-1, 2):
            x2 = x + dx
            if x2 < 0 or x2 >= n:
                continue
            v = f[x2]
            for dy in range(-1, 2):
                y2 = y + dy
                if y2 < 0 or y2 >= m or fp[y2] != v:
                    continue
                node2 = off[x2] + rank[y2]
                raw = _flags(x2, y2, n, m, tmask)
                cfl = fl
                for b in range(nb):
                    if raw & bits[b]:
                        cfl |= 1 << b
                st2 = node2 * S + cfl
                if par[st2] != -1:
                    continue
                par[st2] = st
                q[qt] = st2
                qt += 1
                if cfl == full and (target < 0 or node2 == target):
                    goal = st2
                    break
            if goal >= 0:
                break
    if goal < 0:
        return NONE, None, None
    path = []
    st = goal
    while st != -2:
        path.append(st // S)
        st = par[st]
    path.reverse()
    idx = np.array(path, dtype=np.int64)
    return FOUND, nx_a[idx], ny_a[idx]


def oracle_walk(const long long[::1] f, const long long[::1] fp,
                long long sx, long long sy, long long tx, long long ty,
                long long bound):
    """Breadth-first enumeration of walks by length, tracking visited sets.

    A walk is accepted when every x and every y has been visited and the
    requested end vertex (if any) is reached. Returns (status, xs, ys).
    """
    cdef long long n = f.shape[0], m = fp.shape[0]
    if n + m > 24:
        raise ValueError("oracle limited to |M| + |M'| <= 24")
    cdef long long FX = 1 << n, FY = 1 << m
    cdef long long NS = n * m * FX * FY
    if NS > (1 << 27):
        raise ValueError("oracle state space too large")
    seen_a = np.full(NS, -1, dtype=np.int64)
    cdef long long[::1] seen = seen_a
    q_a = np.empty(NS, dtype=np.int64)
    cdef long long[::1] q = q_a
    cdef long long qh = 0, qt = 0, st, st2, x, y, mx, my, x2, y2, dx, dy, rest
    cdef long long goal = -1
    cdef long long fullx = FX - 1, fully = FY - 1
    for x in range(n):
        for y in range(m):
            if f[x] != fp[y]:
                continue
            if sx >= 0 and (x != sx or y != sy):
                continue
            st = ((x * m + y) * FX + (1 << x)) * FY + (1 << y)
            seen[st] = -2
            q[qt] = st
            qt += 1
            if fullx == (1 << x) and fully == (1 << y) and (tx < 0 or (x == tx and y == ty)):
                goal = st
    cdef long long depth = 1
    cdef long long layer_end = qt
    while goal < 0 and qh < qt:
        if qh == layer_end:
            depth += 1
            layer_end = qt
        if depth + 1 > bound:
            break
        st = q[qh]
        qh += 1
        my = st % FY
        rest = st // FY
        mx = rest % FX
        rest = rest // FX
        y = rest % m
        x = rest // m
        for dx in range(-1, 2):
            x2 = x + dx
            if x2 < 0 or x2 >= n:
                continue
            for dy in range(-1, 2):
                y2 = y + dy
                if y2 < 0 or y2 >= m or f[x2] != fp[y2]:
                    continue
                st2 = ((x2 * m + y2) * FX + (mx | (1 << x2))) * FY + (my | (1 << y2))
                if seen[st2] != -1:
                    continue
                seen[st2] = st
                q[qt] = st2
                qt += 1
                if (mx | (1 << x2)) == fullx and (my | (1 << y2)) == fully and (tx < 0 or (x2 == tx and y2 == ty)):
                    goal = st2
                    break
            if goal >= 0:
                break
    if goal < 0:
        return NONE, None, None
    xs = []
    ys = []
    st = goal
    while st != -2:
        rest = st // (FX * FY)
        xs.append(rest // m)
        ys.append(rest % m)
        st = seen[st]
    xs.reverse()
    ys.reverse()
    return FOUND, np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64)


def kp_maxdist(const long long[::1] fplus, const long long[::1] gplus,
               const long long[::1] F, const long long[::1] G):
    """max |F[a0] - G[a1]| over all pairs with fplus[a0] == gplus[a1]; -1 if none.

    Linear: for each common value only the extremes of F and G matter."""
    cdef Py_ssize_t n = fplus.shape[0], m = gplus.shape[0], a, v
    cdef long long V = 0, best = -1, d
    for a in range(n):
        if fplus[a] > V:
            V = fplus[a]
    for a in range(m):
        if gplus[a] > V:
            V = gplus[a]
    big = np.iinfo(np.int64).max
    fmin_a = np.full(V + 1, big, dtype=np.int64)
    fmax_a = np.full(V + 1, -big, dtype=np.int64)
    gmin_a = np.full(V + 1, big, dtype=np.int64)
    gmax_a = np.full(V + 1, -big, dtype=np.int64)
    cdef long long[::1] fmin = fmin_a, fmax = fmax_a, gmin = gmin_a, gmax = gmax_a
    for a in range(n):
        v = fplus[a]
        if F[a] < fmin[v]:
            fmin[v] = F[a]
        if F[a] > fmax[v]:
            fmax[v] = F[a]
    for a in range(m):
        v = gplus[a]
        if G[a] < gmin[v]:
            gmin[v] = G[a]
        if G[a] > gmax[v]:
            gmax[v] = G[a]
    for v in range(V + 1):
        if fmax[v] < fmin[v] or gmax[v] < gmin[v]:
            continue
        d = fmax[v] - gmin[v]
        if gmax[v] - fmin[v] > d:
            d = gmax[v] - fmin[v]
        if d > best:
            best = d
    return best


def conju_counts(const long long[:, ::1] FPHI, const long long[:, ::1] GPSI,
                 const long long[:, ::1] FAPHI, const long long[:, ::1] GAPSI,
                 int mode):
    """Check the transport implication for every (phi, psi) row pair.

    mode 0 (exact): d <= 1 implies d' <= 1, and d == 0 implies d' == 0.
    mode 1 (approx): d == 0 implies d' <= 1.
    d is the sup distance between rows of FPHI and GPSI, d' between rows
    of FAPHI and GAPSI. Returns (premises, failures, first_i, first_k).
    """
    cdef Py_ssize_t P = FPHI.shape[0], Q = GPSI.shape[0], J = FPHI.shape[1]
    cdef Py_ssize_t i, k, j
    cdef long long d, d2, t
    cdef long long premises = 0, fails = 0, fi = -1, fk = -1
    cdef int bad
    for i in range(P):
        for k in range(Q):
            d = 0
            for j in range(J):
                t = FPHI[i, j] - GPSI[k, j]
                if t < 0:
                    t = -t
                if t > d:
                    d = t
                    if d > 1:
                        break
            if d > 1 or (mode == 1 and d > 0):
                continue
            premises += 1
            d2 = 0
            for j in range(J):
                t = FAPHI[i, j] - GAPSI[k, j]
                if t < 0:
                    t = -t
                if t > d2:
                    d2 = t
            bad = 0
            if mode == 0:
                if d2 > 1 or (d == 0 and d2 > 0):
                    bad = 1
            else:
                if d2 > 1:
                    bad = 1
            if bad:
                fails += 1
                if fi < 0:
                    fi = i
                    fk = k
    return premises, fails, fi, fk
