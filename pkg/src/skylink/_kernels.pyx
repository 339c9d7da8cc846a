# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled hot kernels: batched geodesic propagation and Z/2 filtration reduction.

Same algorithms and constants as ``_fallback.py``; see that module for the
reference semantics of every function here.
"""
import numpy as np

from libc.math cimport exp, sqrt, fabs, pow
from libcpp.vector cimport vector

NAME = "cython"

cdef enum:
    MAXD = 4
    MAXY = 8

cdef int FLAT = 0
cdef int CONFORMAL = 1
cdef int SPHERE = 2

cdef double H_INIT = 0.1
cdef double SAFETY = 0.9
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 5.0

cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef inline void _rhs(int kind, const double* prm, const double* y, double* f, int d) noexcept nogil:
    cdef int i
    cdef double r2, lam, w2, dot, vv, g
    cdef const double* x = y
    cdef const double* v = y + d
    for i in range(d):
        f[i] = v[i]
    if kind == CONFORMAL:
        w2 = prm[1] * prm[1]
        r2 = 0.0
        for i in range(d):
            r2 += (x[i] - prm[2 + i]) * (x[i] - prm[2 + i])
        lam = prm[0] * exp(-r2 / w2)
        dot = 0.0
        vv = 0.0
        for i in range(d):
            g = -2.0 * lam / w2 * (x[i] - prm[2 + i])
            dot += g * v[i]
            vv += v[i] * v[i]
        for i in range(d):
            g = -2.0 * lam / w2 * (x[i] - prm[2 + i])
            f[d + i] = -(2.0 * v[i] * dot - vv * g)
    elif kind == SPHERE:
        vv = 0.0
        for i in range(d):
            vv += v[i] * v[i]
        for i in range(d):
            f[d + i] = -vv * x[i]
    else:
        for i in range(d):
            f[d + i] = 0.0


cdef inline void _project(int kind, double* y, int d) noexcept nogil:
    cdef int i
    cdef double nrm = 0.0, dot = 0.0
    if kind != SPHERE:
        return
    for i in range(d):
        nrm += y[i] * y[i]
    nrm = sqrt(nrm)
    for i in range(d):
        y[i] /= nrm
    for i in range(d):
        dot += y[d + i] * y[i]
    for i in range(d):
        y[d + i] -= dot * y[i]


cdef double _step(int kind, const double* prm, const double* y, double h, int d,
                  double tol, double* ynew) noexcept nogil:
    """One Dormand-Prince attempt; writes ``ynew`` and returns the error norm."""
    cdef double k1[MAXY]
    cdef double k2[MAXY]
    cdef double k3[MAXY]
    cdef double k4[MAXY]
    cdef double k5[MAXY]
    cdef double k6[MAXY]
    cdef double k7[MAXY]
    cdef double yi[MAXY]
    cdef int i, n = 2 * d
    cdef double e, sc, acc = 0.0, ya, yb

    _rhs(kind, prm, y, k1, d)
    for i in range(n):
        yi[i] = y[i] + h * A21 * k1[i]
    _rhs(kind, prm, yi, k2, d)
    for i in range(n):
        yi[i] = y[i] + h * A31 * k1[i] + h * A32 * k2[i]
    _rhs(kind, prm, yi, k3, d)
    for i in range(n):
        yi[i] = y[i] + h * A41 * k1[i] + h * A42 * k2[i] + h * A43 * k3[i]
    _rhs(kind, prm, yi, k4, d)
    for i in range(n):
        yi[i] = (y[i] + h * A51 * k1[i] + h * A52 * k2[i] + h * A53 * k3[i]
                 + h * A54 * k4[i])
    _rhs(kind, prm, yi, k5, d)
    for i in range(n):
        yi[i] = (y[i] + h * A61 * k1[i] + h * A62 * k2[i] + h * A63 * k3[i]
                 + h * A64 * k4[i] + h * A65 * k5[i])
    _rhs(kind, prm, yi, k6, d)
    for i in range(n):
        ynew[i] = (y[i] + h * A71 * k1[i] + h * A73 * k3[i] + h * A74 * k4[i]
                   + h * A75 * k5[i] + h * A76 * k6[i])
    _rhs(kind, prm, ynew, k7, d)
    for i in range(n):
        e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                 + E6 * k6[i] + E7 * k7[i])
        ya = fabs(y[i])
        yb = fabs(ynew[i])
        sc = tol + tol * (ya if ya > yb else yb)
        acc += (e / sc) * (e / sc)
    return sqrt(acc / n)


cdef inline double _factor(double err) noexcept nogil:
    cdef double fac
    if err > 0.0:
        fac = SAFETY * pow(err, -0.2)
    else:
        fac = FAC_MAX
    if fac < FAC_MIN:
        fac = FAC_MIN
    if fac > FAC_MAX:
        fac = FAC_MAX
    return fac


cdef int _integrate(int kind, const double* prm, double* y, int d, double s_end,
                    double tol, long max_steps, long* nsteps) noexcept nogil:
    cdef double ynew[MAXY]
    cdef double s = 0.0, rem, hs, err, fac
    cdef double sgn = -1.0 if s_end < 0.0 else 1.0
    cdef double h = sgn * (fabs(s_end) if fabs(s_end) < H_INIT else H_INIT)
    cdef int i
    cdef long steps = 0
    if s_end == 0.0:
        nsteps[0] = 0
        return 0
    while True:
        rem = s_end - s
        hs = sgn * (fabs(h) if fabs(h) < fabs(rem) else fabs(rem))
        err = _step(kind, prm, y, hs, d, tol, ynew)
        steps += 1
        fac = _factor(err)
        if err <= 1.0:
            _project(kind, ynew, d)
            for i in range(2 * d):
                y[i] = ynew[i]
            if fabs(hs) >= fabs(rem):
                nsteps[0] = steps
                return 0
            s += hs
            h = hs * fac
        else:
            h = hs * (fac if fac < 1.0 else 1.0)
        if fabs(h) < 1e-13 * (fabs(s) if fabs(s) > 1.0 else 1.0):
            nsteps[0] = steps
            return 1
        if steps >= max_steps:
            nsteps[0] = steps
            return 2


def propagate(int kind, params, x0, v0, s_end, double tol, long max_steps=100000):
    """Batched geodesic propagation; see ``_fallback.propagate``."""
    cdef const double[::1] prm = np.ascontiguousarray(params, dtype=np.float64)
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    cdef Py_ssize_t n = x0.shape[0]
    cdef int d = x0.shape[1]
    if d > MAXD:
        raise ValueError("dimension too large for compiled kernel")
    cdef double[:, ::1] y = np.ascontiguousarray(
        np.concatenate([x0, np.atleast_2d(np.asarray(v0, dtype=np.float64))], axis=1))
    cdef const double[::1] se = np.ascontiguousarray(
        np.broadcast_to(np.asarray(s_end, dtype=np.float64), (n,)))
    status = np.zeros(n, dtype=np.int64)
    nsteps = np.zeros(n, dtype=np.int64)
    cdef long[::1] st = status
    cdef long[::1] ns = nsteps
    cdef Py_ssize_t r
    with nogil:
        for r in range(n):
            st[r] = _integrate(kind, &prm[0], &y[r, 0], d, se[r], tol, max_steps, &ns[r])
    ya = np.asarray(y)
    return ya[:, :d].copy(), ya[:, d:].copy(), status, nsteps


cdef inline double _along(const double* y, const double* target, int d) noexcept nogil:
    cdef double a = 0.0
    cdef int i
    for i in range(d):
        a += y[d + i] * (target[i] - y[i])
    return a


cdef double _locate(int kind, const double* prm, const double* y0, const double* y1,
                    double h, const double* target, int d, double tol,
                    double* yout) noexcept nogil:
    cdef double f0[MAXY]
    cdef double f1[MAXY]
    cdef double x[MAXD]
    cdef double v[MAXD]
    cdef double lo = 0.0, hi = 1.0, th, a
    cdef double h00, h10, h01, h11, d00, d10, d01, d11
    cdef int it, i
    _rhs(kind, prm, y0, f0, d)
    _rhs(kind, prm, y1, f1, d)
    for it in range(60):
        th = 0.5 * (lo + hi)
        h00 = 2 * th * th * th - 3 * th * th + 1
        h10 = th * th * th - 2 * th * th + th
        h01 = -2 * th * th * th + 3 * th * th
        h11 = th * th * th - th * th
        d00 = (6 * th * th - 6 * th) / h
        d10 = 3 * th * th - 4 * th + 1
        d01 = (-6 * th * th + 6 * th) / h
        d11 = 3 * th * th - 2 * th
        a = 0.0
        for i in range(d):
            x[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i]
            v[i] = d00 * y0[i] + d10 * f0[i] + d01 * y1[i] + d11 * f1[i]
            a += v[i] * (target[i] - x[i])
        if a > 0.0:
            lo = th
        else:
            hi = th
    th = 0.5 * (lo + hi)
    _step(kind, prm, y0, th * h, d, tol, yout)
    _project(kind, yout, d)
    return th * h


cdef int _trace(int kind, const double* prm, double* y, int d, const double* target,
                double s_max, double tol, long max_steps, double* out_s) noexcept nogil:
    cdef double ynew[MAXY]
    cdef double yr[MAXY]
    cdef double s = 0.0, rem, hs, err, fac, ds
    cdef double h = s_max if s_max < H_INIT else H_INIT
    cdef int i
    cdef long steps = 0
    if _along(y, target, d) <= 0.0:
        return 3
    while True:
        rem = s_max - s
        hs = h if h < rem else rem
        err = _step(kind, prm, y, hs, d, tol, ynew)
        steps += 1
        fac = _factor(err)
        if err <= 1.0:
            _project(kind, ynew, d)
            if _along(ynew, target, d) <= 0.0:
                ds = _locate(kind, prm, y, ynew, hs, target, d, tol, yr)
                out_s[0] = s + ds
                for i in range(2 * d):
                    y[i] = yr[i]
                return 0
            for i in range(2 * d):
                y[i] = ynew[i]
            if hs >= rem:
                return 3
            s += hs
            h = hs * fac
        else:
            h = hs * (fac if fac < 1.0 else 1.0)
        if fabs(h) < 1e-13 * (fabs(s) if fabs(s) > 1.0 else 1.0):
            return 1
        if steps >= max_steps:
            return 2


def trace_approach(int kind, params, x0, v0, target, double s_max, double tol,
                   long max_steps=100000):
    """Follow rays to their first pass of ``target``; see ``_fallback.trace_approach``."""
    cdef const double[::1] prm = np.ascontiguousarray(params, dtype=np.float64)
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    cdef Py_ssize_t n = x0.shape[0]
    cdef int d = x0.shape[1]
    if d > MAXD:
        raise ValueError("dimension too large for compiled kernel")
    cdef double[:, ::1] y = np.ascontiguousarray(
        np.concatenate([x0, np.atleast_2d(np.asarray(v0, dtype=np.float64))], axis=1))
    cdef const double[::1] tg = np.ascontiguousarray(target, dtype=np.float64)
    out = np.full(n, np.nan)
    cdef double[::1] so = out
    status = np.zeros(n, dtype=np.int64)
    cdef long[::1] st = status
    cdef Py_ssize_t r
    with nogil:
        for r in range(n):
            st[r] = _trace(kind, &prm[0], &y[r, 0], d, &tg[0], s_max, tol, max_steps, &so[r])
    ya = np.asarray(y)
    return out, ya[:, :d].copy(), ya[:, d:].copy(), status


cdef void _symdiff(vector[long]& a, vector[long]& b, vector[long]& out) noexcept nogil:
    cdef size_t i = 0, j = 0
    out.clear()
    while i < a.size() and j < b.size():
        if a[i] < b[j]:
            out.push_back(a[i])
            i += 1
        elif b[j] < a[i]:
            out.push_back(b[j])
            j += 1
        else:
            i += 1
            j += 1
    while i < a.size():
        out.push_back(a[i])
        i += 1
    while j < b.size():
        out.push_back(b[j])
        j += 1


def reduce_z2(indptr, indices, target):
    """Column reduction over Z/2; see ``_fallback.reduce_z2``.

    ``indices`` must be sorted ascending within each column.
    """
    cdef const long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const long[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef const long[::1] tg = np.ascontiguousarray(np.sort(np.asarray(target, dtype=np.int64)))
    cdef Py_ssize_t ncols = ip.shape[0] - 1
    cdef long nrows = 0
    if ix.shape[0]:
        nrows = np.max(indices) + 1
    if tg.shape[0]:
        nrows = max(nrows, tg[tg.shape[0] - 1] + 1)
    cdef vector[long] pivot_col
    pivot_col.assign(nrows, -1)
    cdef vector[vector[long]] store
    cdef vector[long] col, tmp
    cdef Py_ssize_t j, k
    cdef long low, owner
    with nogil:
        for j in range(ncols):
            col.clear()
            for k in range(ip[j], ip[j + 1]):
                col.push_back(ix[k])
            while col.size() > 0:
                low = col.back()
                owner = pivot_col[low]
                if owner < 0:
                    pivot_col[low] = store.size()
                    store.push_back(col)
                    break
                _symdiff(col, store[owner], tmp)
                col.swap(tmp)
        col.clear()
        for k in range(tg.shape[0]):
            col.push_back(tg[k])
        while col.size() > 0:
            owner = pivot_col[col.back()]
            if owner < 0:
                break
            _symdiff(col, store[owner], tmp)
            col.swap(tmp)
    result = np.empty(col.size(), dtype=np.int64)
    cdef long[::1] rv = result
    for k in range(<Py_ssize_t>col.size()):
        rv[k] = col[k]
    return result


cdef inline long _find(long[::1] parent, long a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def union_find(long nverts, eu, ev):
    """Elder-rule union-find; see ``_fallback.union_find``."""
    cdef const long[::1] u = np.ascontiguousarray(eu, dtype=np.int64)
    cdef const long[::1] v = np.ascontiguousarray(ev, dtype=np.int64)
    parent_arr = np.arange(nverts, dtype=np.int64)
    cdef long[::1] parent = parent_arr
    pairs_arr = np.empty((max(nverts - 1, 0), 2), dtype=np.int64)
    cdef long[:, ::1] pairs = pairs_arr
    cdef long npairs = 0, ra, rb, young, old
    cdef Py_ssize_t k, i
    with nogil:
        for k in range(u.shape[0]):
            ra = _find(parent, u[k])
            rb = _find(parent, v[k])
            if ra == rb:
                continue
            if ra > rb:
                young = ra
                old = rb
            else:
                young = rb
                old = ra
            parent[young] = old
            pairs[npairs, 0] = young
            pairs[npairs, 1] = k
            npairs += 1
        for i in range(nverts):
            parent[i] = _find(parent, i)
    return parent_arr, pairs_arr[:npairs].copy()
