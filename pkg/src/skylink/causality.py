"""Ground-truth causal relation between events of product spacetimes.

For ``gbar ⊕ (-dt²)`` an event ``y`` lies in ``J+(x)`` exactly when
``t_y - t_x >= d(xbar, ybar)`` for the Riemannian distance ``d`` of ``gbar``.
Nothing here touches skies or Legendrian data.
"""
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.optimize import brentq, minimize_scalar
from scipy.sparse.csgraph import dijkstra

from ._backend import kernels
from .errors import CapabilityError, NumericalError
from .geometry import ConformalBase, FlatBase, SphereBase

SHOOT_TOL = 1e-10
SHOOT_FAN = 256
GRID_NODES = 400
GRID_REACH = 3


class Relation(Enum):
    CHRONOLOGICAL = "chronologically-related"
    NULL = "null-related"
    UNRELATED = "unrelated"
    MARGINAL = "marginal"

    @property
    def causal(self):
        return self in (Relation.CHRONOLOGICAL, Relation.NULL)


class Order(Enum):
    Y_AFTER_X = "y-in-future-of-x"
    X_AFTER_Y = "x-in-future-of-y"

    def reversed(self):
        return Order.X_AFTER_Y if self is Order.Y_AFTER_X else Order.Y_AFTER_X


@dataclass(frozen=True)
class CausalVerdict:
    relation: Relation
    order: Order | None
    margin: float
    distance: float
    uncertainty: float = 0.0


# -- distances ----------------------------------------------------------------

def _segment_length(base, a, b, nodes=64):
    t, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (t + 1.0)
    pts = a[None, :] + t[:, None] * (b - a)[None, :]
    lam = np.array([base.lam(p) for p in pts])
    return 0.5 * float(np.dot(w, np.exp(lam))) * np.linalg.norm(b - a)


def _miss(base, a, b, theta, s_max):
    """Signed perpendicular offset of ray ``theta`` from ``b`` at closest approach."""
    theta = np.atleast_1d(theta)
    v0 = np.exp(-base.lam(a)) * np.c_[np.cos(theta), np.sin(theta)]
    x0 = np.broadcast_to(a, v0.shape)
    s, x, v, status = kernels.trace_approach(base.kernel_kind, base.kernel_params,
                                             x0, v0, b, s_max, SHOOT_TOL)
    r = b[None, :] - x
    miss = (v[:, 0] * r[:, 1] - v[:, 1] * r[:, 0]) / np.linalg.norm(v, axis=1)
    miss[status != 0] = np.nan
    return miss, s


def shooting_distance(base, a, b, fan=SHOOT_FAN):
    """Length of the shortest geodesic from ``a`` to ``b`` found by shooting.

    A fan of launch angles brackets every sign change of the closest-approach
    offset; each bracket is refined by root-finding on the launch angle.
    Raises :class:`NumericalError` (``best`` = straight-segment length) when
    no geodesic is bracketed.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    chord = np.linalg.norm(b - a)
    if chord < 1e-14:
        return 0.0
    bound = _segment_length(base, a, b)
    # the minimizer is no longer than the straight segment; slack keeps its
    # neighbours in the fan so sign changes stay visible
    s_max = 2.0 * bound + 1e-9
    theta = np.linspace(0.0, 2 * np.pi, fan, endpoint=False)
    miss, s_fan = _miss(base, a, b, theta, s_max)
    nxt = np.roll(np.arange(fan), -1)
    ok = (np.isfinite(miss) & np.isfinite(miss[nxt]) & (np.sign(miss) != np.sign(miss[nxt]))
          & (np.abs(miss) < 0.25 * chord) & (np.abs(miss[nxt]) < 0.25 * chord))
    hit = np.isfinite(miss) & (np.abs(miss) < 1e-8 * max(1.0, chord))
    best = float(np.min(s_fan[hit])) if hit.any() else np.inf
    for k in np.flatnonzero(ok):
        lo = theta[k]
        hi = lo + 2 * np.pi / fan

        def f(t):
            m, _ = _miss(base, a, b, t, s_max)
            return m[0]

        try:
            root = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        except ValueError:
            continue
        m, s = _miss(base, a, b, root, s_max)
        if np.isfinite(m[0]) and abs(m[0]) < 1e-8 * max(1.0, chord):
            best = min(best, float(s[0]))
    if not np.isfinite(best):
        raise NumericalError("shooting failed to bracket a geodesic", best=bound)
    return best


@lru_cache(maxsize=4)
def _stencil(n, reach):
    moves = [(i, j) for i in range(0, reach + 1) for j in range(-reach, reach + 1)
             if (i > 0 or j > 0) and np.gcd(i, abs(j)) == 1]
    src, dst, off = [], [], []
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for di, dj in moves:
        ok = (ii + di < n) & (jj + dj >= 0) & (jj + dj < n)
        a = (ii * n + jj)[ok]
        src.append(a)
        dst.append(a + di * n + dj)
        off.append(np.full(a.size, len(off)))
    return (np.concatenate(src), np.concatenate(dst), np.concatenate(off),
            np.array(moves, dtype=float))


def grid_graph_distance(base, a, b, n=GRID_NODES, reach=GRID_REACH):
    """Shortest-path length on an ``n x n`` grid graph around ``a`` and ``b``.

    Edges join nodes whose index offset is a primitive vector of max-norm at
    most ``reach`` (reach 3: 32 neighbours). Weights integrate ``exp(λ)`` by
    Simpson's rule along each straight edge; ``a`` and ``b`` join the nodes of
    all nodes within ``reach·h``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.linalg.norm(b - a) < 1e-14:
        return 0.0
    chord = np.linalg.norm(b - a)
    margin = 0.5 * chord
    lo = np.minimum(a, b) - margin
    side = float(np.max(np.maximum(a, b) + margin - lo))
    h = side / (n - 1)
    src, dst, off, moves = _stencil(n, reach)
    grid = lo + h * np.stack(np.meshgrid(np.arange(n), np.arange(n), indexing="ij"), -1).reshape(-1, 2)
    conf = _conformal_factor(base, grid)
    mid = _conformal_factor(base, 0.5 * (grid[src] + grid[dst]))
    w = h * np.linalg.norm(moves, axis=1)[off] * (conf[src] + 4 * mid + conf[dst]) / 6.0

    # endpoints join every node within a disk of radius reach·h
    extra_src, extra_dst, extra_w = [], [], []
    for node, p in ((n * n, a), (n * n + 1, b)):
        c = np.rint((p - lo) / h).astype(int)
        ii, jj = np.meshgrid(np.arange(c[0] - reach - 1, c[0] + reach + 2),
                             np.arange(c[1] - reach - 1, c[1] + reach + 2), indexing="ij")
        keep = (ii >= 0) & (ii < n) & (jj >= 0) & (jj < n)
        k = (ii * n + jj)[keep]
        q = grid[k]
        length = np.linalg.norm(q - p, axis=1)
        near = length <= reach * h * (1 + 1e-12)
        k, q, length = k[near], q[near], length[near]
        f = (_conformal_factor(base, p[None])[0] + 4 * _conformal_factor(base, 0.5 * (p + q))
             + conf[k]) / 6.0
        extra_src.append(np.full(k.size, node))
        extra_dst.append(k)
        extra_w.append(np.maximum(length * f, 1e-300))
    extra_src, extra_dst, extra_w = map(np.concatenate, (extra_src, extra_dst, extra_w))
    rows = np.r_[src, extra_src]
    cols = np.r_[dst, extra_dst]
    graph = sparse.csr_matrix((np.r_[w, extra_w], (rows, cols)), shape=(n * n + 2, n * n + 2))
    bound = _segment_length(base, a, b) if isinstance(base, ConformalBase) else np.linalg.norm(b - a)
    dist = dijkstra(graph, directed=False, indices=n * n, limit=1.2 * bound + 4 * h)
    return float(dist[n * n + 1])


def _conformal_factor(base, pts):
    if isinstance(base, ConformalBase):
        dx = pts - base.center
        return np.exp(base.amplitude * np.exp(-np.sum(dx * dx, axis=1) / base.width**2))
    return np.ones(len(pts))


def riemannian_distance(base, a, b):
    """Geodesic distance of the spatial metric ``base`` between ``a`` and ``b``.

    Exact for flat space and the round sphere; shooting for conformal bumps
    (cross-check with :func:`grid_graph_distance`).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    base.check(a)
    base.check(b)
    if isinstance(base, FlatBase):
        return float(np.linalg.norm(b - a))
    if isinstance(base, SphereBase):
        return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))
    if isinstance(base, ConformalBase):
        return shooting_distance(base, a, b)
    raise CapabilityError(f"no distance routine for {base!r}")


def distance_uncertainty(base, d):
    if isinstance(base, ConformalBase):
        return 1e-6 * max(d, 1e-12)
    return 0.0


# -- causal verdicts ----------------------------------------------------------

def causal_oracle(metric, x, y, band=1e-6):
    """Causal relation of events ``x`` and ``y`` from ``margin = |Δt| - d(xbar, ybar)``.

    Inside ``±band`` the pair is null related; verdicts that the distance
    uncertainty cannot place on one side of the band are ``MARGINAL``.
    """
    if not isinstance(metric.base, (FlatBase, ConformalBase, SphereBase)):
        raise CapabilityError(f"causal oracle does not support {metric!r}")
    x = metric.check_event(x)
    y = metric.check_event(y)
    d = riemannian_distance(metric.base, x[:-1], y[:-1])
    dt = y[-1] - x[-1]
    margin = abs(dt) - d
    unc = distance_uncertainty(metric.base, d)
    order = Order.Y_AFTER_X if dt > 0 else Order.X_AFTER_Y if dt < 0 else None
    if margin > band + unc:
        rel = Relation.CHRONOLOGICAL
    elif margin < -band - unc:
        rel = Relation.UNRELATED
    elif abs(margin) <= band - unc:
        rel = Relation.NULL
    else:
        rel = Relation.MARGINAL
    if not rel.causal:
        order = None
    return CausalVerdict(rel, order, float(margin), float(d), unc)


def _fan_endpoints(metric, x, theta, s_end):
    base = metric.base
    frame = base.frame(x[:-1])
    dirs = np.cos(theta)[:, None] * frame[0] + np.sin(theta)[:, None] * frame[1]
    xs, vs, status, _ = kernels.propagate(base.kernel_kind, base.kernel_params,
                                          np.broadcast_to(x[:-1], dirs.shape), dirs,
                                          s_end, SHOOT_TOL)
    return xs, vs, status


def same_null_geodesic(metric, x, y, tol=1e-6, fan=720):
    """True iff some null geodesic through ``x`` passes within ``tol`` of ``y``.

    The null fan from ``x`` is followed to ``t_y``; the closest ray is refined
    over launch angle and, to first order, over the affine parameter.
    """
    x = metric.check_event(x)
    y = metric.check_event(y)
    dt = y[-1] - x[-1]
    if abs(dt) < 1e-15:
        return bool(np.linalg.norm(y - x) < tol)
    theta = np.linspace(0, 2 * np.pi, fan, endpoint=False)
    xs, vs, _ = _fan_endpoints(metric, x, theta, dt)

    def chart_gap(xe, ve):
        e = xe - y[:-1]
        delta = -np.dot(e, ve) / (np.dot(ve, ve) + 1.0)
        return float(np.sqrt(np.sum((e + delta * ve) ** 2) + delta**2))

    gaps = np.array([chart_gap(a, b) for a, b in zip(xs, vs)])
    k = int(np.argmin(gaps))
    if gaps[k] < tol:
        return True
    step = 2 * np.pi / fan

    def objective(t):
        xe, ve, _ = _fan_endpoints(metric, x, np.array([t]), dt)
        return chart_gap(xe[0], ve[0])

    res = minimize_scalar(objective, bounds=(theta[k] - step, theta[k] + step),
                          method="bounded", options={"xatol": 1e-13})
    return bool(min(res.fun, gaps[k]) < tol)
