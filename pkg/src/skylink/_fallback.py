"""Pure numpy implementation of the hot kernels.

Mirrors ``_kernels.pyx`` step for step: same Dormand-Prince tableau, same
error norm and step-size controller, same reduction order. The two backends
are expected to agree to round-off.
"""
import numpy as np

NAME = "python"

FLAT, CONFORMAL, SPHERE = 0, 1, 2

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
               22 / 525, -1 / 40])

H_INIT = 0.1
SAFETY, FAC_MIN, FAC_MAX = 0.9, 0.2, 5.0

OK, UNDERFLOW, MAX_STEPS, NO_APPROACH = 0, 1, 2, 3


def _accel(kind, prm, x, v):
    if kind == FLAT:
        return np.zeros_like(v)
    if kind == CONFORMAL:
        amp, width = prm[0], prm[1]
        dx = x - prm[2:2 + x.shape[1]]
        lam = amp * np.exp(-np.sum(dx * dx, axis=1) / (width * width))
        grad = (-2.0 * lam / (width * width))[:, None] * dx
        dot = np.sum(grad * v, axis=1)
        vv = np.sum(v * v, axis=1)
        return -(2.0 * v * dot[:, None] - vv[:, None] * grad)
    if kind == SPHERE:
        vv = np.sum(v * v, axis=1)
        return -vv[:, None] * x
    raise ValueError(f"unknown kernel kind {kind}")


def _rhs(kind, prm, y, d):
    x, v = y[:, :d], y[:, d:]
    return np.concatenate([v, _accel(kind, prm, x, v)], axis=1)


def _project(kind, y, d):
    if kind != SPHERE:
        return y
    x = y[:, :d] / np.linalg.norm(y[:, :d], axis=1)[:, None]
    v = y[:, d:]
    v = v - np.sum(v * x, axis=1)[:, None] * x
    return np.concatenate([x, v], axis=1)


def _step(kind, prm, y, h, d, tol):
    """One Dormand-Prince attempt for a batch; returns (ynew, err)."""
    ks = []
    hh = h[:, None]
    for i in range(7):
        yi = y.copy()
        for j, a in enumerate(_A[i]):
            if a != 0.0:
                yi += hh * a * ks[j]
        ks.append(_rhs(kind, prm, yi, d))
    ynew = y.copy()
    for j, a in enumerate(_A[6]):
        if a != 0.0:
            ynew += hh * a * ks[j]
    errv = np.zeros_like(y)
    for j in range(7):
        if _E[j] != 0.0:
            errv += _E[j] * ks[j]
    errv *= hh
    sc = tol + tol * np.maximum(np.abs(y), np.abs(ynew))
    err = np.sqrt(np.mean((errv / sc) ** 2, axis=1))
    return ynew, err


def _factor(err):
    with np.errstate(divide="ignore"):
        fac = np.where(err > 0.0, SAFETY * err ** -0.2, FAC_MAX)
    return np.clip(fac, FAC_MIN, FAC_MAX)


def propagate(kind, params, x0, v0, s_end, tol, max_steps=100000):
    """Integrate a batch of geodesics of a base metric to affine parameters ``s_end``.

    Returns ``(x, v, status, nsteps)``; ``status`` is 0 on success, 1 on step
    underflow and 2 when ``max_steps`` accepted+rejected attempts were used.
    """
    prm = np.ascontiguousarray(params, dtype=float)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    n, d = x0.shape
    y = np.concatenate([x0, np.atleast_2d(np.asarray(v0, dtype=float))], axis=1)
    s_end = np.broadcast_to(np.asarray(s_end, dtype=float), (n,)).copy()
    s = np.zeros(n)
    sgn = np.where(s_end < 0.0, -1.0, 1.0)
    h = sgn * np.minimum(np.abs(s_end), H_INIT)
    status = np.zeros(n, dtype=np.int64)
    nsteps = np.zeros(n, dtype=np.int64)
    active = np.abs(s_end) > 0.0

    while np.any(active):
        idx = np.flatnonzero(active)
        rem = s_end[idx] - s[idx]
        hs = sgn[idx] * np.minimum(np.abs(h[idx]), np.abs(rem))
        ynew, err = _step(kind, prm, y[idx], hs, d, tol)
        nsteps[idx] += 1
        fac = _factor(err)
        acc = err <= 1.0
        ai = idx[acc]
        if ai.size:
            y[ai] = _project(kind, ynew[acc], d)
            last = np.abs(hs[acc]) >= np.abs(rem[acc])
            s[ai] = np.where(last, s_end[ai], s[ai] + hs[acc])
            active[ai[last]] = False
        h[idx] = hs * np.where(acc, fac, np.minimum(fac, 1.0))
        tiny = np.abs(h[idx]) < 1e-13 * np.maximum(1.0, np.abs(s[idx]))
        bad = active[idx] & tiny
        status[idx[bad]] = UNDERFLOW
        active[idx[bad]] = False
        over = active[idx] & (nsteps[idx] >= max_steps)
        status[idx[over]] = MAX_STEPS
        active[idx[over]] = False
    return y[:, :d].copy(), y[:, d:].copy(), status, nsteps


def _hermite(y0, f0, y1, f1, h, th, d):
    """Cubic Hermite position and velocity at fraction ``th`` of a step."""
    x0, v0, x1, v1 = y0[:d], f0[:d], y1[:d], f1[:d]
    h00 = 2 * th**3 - 3 * th**2 + 1
    h10 = th**3 - 2 * th**2 + th
    h01 = -2 * th**3 + 3 * th**2
    h11 = th**3 - th**2
    x = h00 * x0 + h10 * h * v0 + h01 * x1 + h11 * h * v1
    d00 = (6 * th**2 - 6 * th) / h
    d10 = 3 * th**2 - 4 * th + 1
    d01 = (-6 * th**2 + 6 * th) / h
    d11 = 3 * th**2 - 2 * th
    v = d00 * x0 + d10 * v0 + d01 * x1 + d11 * v1
    return x, v


def _locate_approach(kind, prm, y0, y1, h, target, d, tol):
    f0 = _rhs(kind, prm, y0[None, :], d)[0]
    f1 = _rhs(kind, prm, y1[None, :], d)[0]
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        x, v = _hermite(y0, f0, y1, f1, h, mid, d)
        if np.dot(v, target - x) > 0.0:
            lo = mid
        else:
            hi = mid
    th = 0.5 * (lo + hi)
    yth, _ = _step(kind, prm, y0[None, :], np.array([th * h]), d, tol)
    return th * h, _project(kind, yth, d)[0]


def trace_approach(kind, params, x0, v0, target, s_max, tol, max_steps=100000):
    """Follow each ray until it first passes ``target`` (closest Euclidean approach).

    Returns ``(s, x, v, status)``; status 3 marks rays that never pass the
    target within ``s_max``.
    """
    prm = np.ascontiguousarray(params, dtype=float)
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    n, d = x0.shape
    target = np.asarray(target, dtype=float)
    y = np.concatenate([x0, np.atleast_2d(np.asarray(v0, dtype=float))], axis=1)
    s = np.zeros(n)
    h = np.full(n, min(H_INIT, s_max))
    status = np.full(n, NO_APPROACH, dtype=np.int64)
    nsteps = np.zeros(n, dtype=np.int64)
    along = np.sum(y[:, d:] * (target - y[:, :d]), axis=1)
    active = along > 0.0
    out_s = np.full(n, np.nan)
    out_y = y.copy()

    while np.any(active):
        idx = np.flatnonzero(active)
        rem = s_max - s[idx]
        hs = np.minimum(h[idx], rem)
        ynew, err = _step(kind, prm, y[idx], hs, d, tol)
        nsteps[idx] += 1
        fac = _factor(err)
        acc = err <= 1.0
        for k in np.flatnonzero(acc):
            i = idx[k]
            yn = _project(kind, ynew[k:k + 1], d)[0]
            a_new = np.dot(yn[d:], target - yn[:d])
            if a_new <= 0.0:
                ds, yr = _locate_approach(kind, prm, y[i], yn, hs[k], target, d, tol)
                out_s[i] = s[i] + ds
                out_y[i] = yr
                status[i] = OK
                active[i] = False
                continue
            y[i] = yn
            if hs[k] >= rem[k]:
                s[i] = s_max
                active[i] = False
            else:
                s[i] += hs[k]
        h[idx] = hs * np.where(acc, fac, np.minimum(fac, 1.0))
        tiny = np.abs(h[idx]) < 1e-13 * np.maximum(1.0, np.abs(s[idx]))
        bad = active[idx] & tiny
        status[idx[bad]] = UNDERFLOW
        active[idx[bad]] = False
        over = active[idx] & (nsteps[idx] >= max_steps)
        status[idx[over]] = MAX_STEPS
        active[idx[over]] = False
    return out_s, out_y[:, :d].copy(), out_y[:, d:].copy(), status


def reduce_z2(indptr, indices, target):
    """Reduce ``target`` against the Z/2 column space of a sparse boundary matrix.

    Columns are given in CSR-like form (``indptr``/``indices`` with row ranks);
    the pivot of a column is its largest row. The returned vector has the
    smallest possible pivot among ``target + span(columns)``.
    """
    indptr = np.asarray(indptr)
    indices = np.asarray(indices)
    pivots = {}
    for j in range(len(indptr) - 1):
        col = set(indices[indptr[j]:indptr[j + 1]].tolist())
        while col:
            low = max(col)
            other = pivots.get(low)
            if other is None:
                pivots[low] = col
                break
            col ^= other
    col = set(np.asarray(target).tolist())
    while col:
        other = pivots.get(max(col))
        if other is None:
            break
        col ^= other
    return np.array(sorted(col), dtype=np.int64)


def union_find(nverts, eu, ev):
    """Elder-rule union-find over vertices already numbered by filtration rank.

    Edges are processed in the given order. Returns ``(roots, pairs)`` where
    ``roots[i]`` is the oldest vertex of the final component of ``i`` and
    ``pairs`` lists ``(dying vertex, killing edge index)``.
    """
    parent = np.arange(nverts, dtype=np.int64)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    pairs = []
    for k in range(len(eu)):
        ra, rb = find(eu[k]), find(ev[k])
        if ra == rb:
            continue
        young, old = (ra, rb) if ra > rb else (rb, ra)
        parent[young] = old
        pairs.append((young, k))
    roots = np.array([find(i) for i in range(nverts)], dtype=np.int64)
    return roots, np.array(pairs, dtype=np.int64).reshape(-1, 2)
