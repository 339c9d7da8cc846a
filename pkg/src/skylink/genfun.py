"""Generating functions quadratic at infinity on ``S¹ x R`` and the selector c₋.

``S(q, ξ) = f(q) + σ ξ²`` plus an optional perturbation supported in
``|ξ| < R/2``. The selector is computed on a cubical grid over
``S¹ x [-R, R]`` whose cells carry the maximum of ``S`` over their corners.

* ``κ = 0`` (``σ = +1``): the class of a point is born with the oldest
  component, so an elder-rule union-find yields ``c₋``.
* ``κ = 1`` (``σ = -1``): relative to ``A = {S ≤ -R²/2}`` (two bands at the
  ends of the cylinder) the fibre segment ``V = {q0} x [-R, R]`` generates
  ``H_1(X, A)``. Its class comes from the sublevel set at ``c`` exactly when
  that set joins the two bands, so ``c₋`` is the level at which the two
  bands merge. A Z/2 reduction of ``V`` against the boundaries of the 2-cells
  computes the same number and is available as ``method="reduction"``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from ._backend import kernels
from .errors import DomainError, NumericalError

VALUE_STEP = 1e-3
N_XI = 8
MAX_NQ = 1 << 21


# -- trigonometric polynomials --------------------------------------------------

@dataclass(frozen=True)
class TrigPoly:
    """``a0 + Σ_k a_k cos(kq) + b_k sin(kq)`` for ``k = 1..K``."""

    a0: float = 0.0
    a: tuple = ()
    b: tuple = ()

    def __post_init__(self):
        a, b = tuple(map(float, self.a)), tuple(map(float, self.b))
        k = max(len(a), len(b))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a", a + (0.0,) * (k - len(a)))
        object.__setattr__(self, "b", b + (0.0,) * (k - len(b)))

    @classmethod
    def random(cls, rng, harmonics=5, scale=2.0):
        """Random polynomial with up to ``harmonics`` harmonics, coefficients in ``[-scale, scale]``."""
        k = int(rng.integers(1, harmonics + 1))
        return cls(rng.uniform(-scale, scale), rng.uniform(-scale, scale, k),
                   rng.uniform(-scale, scale, k))

    @property
    def degree(self):
        return len(self.a)

    def _k(self):
        return np.arange(1, self.degree + 1)

    def __call__(self, q, order=0):
        """Value (``order=0``) or ``order``-th derivative at ``q``."""
        q = np.asarray(q, dtype=float)
        out = np.full(q.shape, self.a0 if order == 0 else 0.0)
        for k, ak, bk in zip(self._k(), self.a, self.b):
            # d^n/dq^n of cos/sin is a phase shift by nπ/2
            ph = k * q + order * np.pi / 2
            out = out + k**order * (ak * np.cos(ph) + bk * np.sin(ph))
        return out

    def deriv(self, q, order=1):
        return self(q, order)

    def bound(self):
        """Upper bound for ``|f|_∞``."""
        return abs(self.a0) + float(np.sum(np.abs(self.a)) + np.sum(np.abs(self.b)))

    def slope_bound(self):
        """Upper bound for ``|f'|_∞``."""
        k = self._k()
        return float(np.sum(k * (np.abs(self.a) + np.abs(self.b))))

    def __add__(self, other):
        if np.isscalar(other):
            return TrigPoly(self.a0 + other, self.a, self.b)
        k = max(self.degree, other.degree)
        pad = lambda c: np.r_[c, np.zeros(k - len(c))]
        return TrigPoly(self.a0 + other.a0, pad(self.a) + pad(other.a), pad(self.b) + pad(other.b))

    def __sub__(self, other):
        return self + (-other if np.isscalar(other) else other.scale(-1.0))

    def scale(self, c):
        return TrigPoly(c * self.a0, np.multiply(c, self.a), np.multiply(c, self.b))

    def sign_changes_of_derivative(self, n=10000):
        """Number of sign changes of ``f'`` on a periodic grid of ``n`` points."""
        d = self.deriv(2 * np.pi * np.arange(n) / n)
        return int(np.sum(np.sign(d) != np.sign(np.roll(d, -1))))


# -- perturbations and families -------------------------------------------------

@dataclass(frozen=True)
class Perturbation:
    """``g(q) β(ξ / r)`` with the smooth bump ``β(s) = exp(1 - 1/(1 - s²))`` on ``|s| < 1``."""

    g: TrigPoly
    halfwidth: float

    def _beta(self, xi):
        s = np.asarray(xi, dtype=float) / self.halfwidth
        inside = np.abs(s) < 1
        w = np.where(inside, 1.0 - s * s, 1.0)
        e = np.where(inside, np.exp(1.0 - 1.0 / w), 0.0)
        # derivatives of exp(1 - 1/w) with w = 1 - s², chain rule in ξ
        d1 = np.where(inside, e * (-2 * s / w**2), 0.0) / self.halfwidth
        d2 = np.where(inside, e * ((2 * s / w**2) ** 2 - 2 / w**2 - 8 * s * s / w**3), 0.0) / self.halfwidth**2
        return e, d1, d2

    def __call__(self, q, xi):
        return self.g(q) * self._beta(xi)[0]

    def bound(self):
        return self.g.bound()


class GenFamily:
    """``S(q, ξ) = f(q) + σ ξ² + perturbation`` on ``S¹ x R``.

    Parameters
    ----------
    f : TrigPoly
    sigma : {+1, -1}
        Sign of the quadratic part; the index ``κ`` is 0 for ``+1`` and 1 for ``-1``.
    R : float, optional
        Truncation radius; defaults to ``2 sqrt(M + 1)`` where ``M`` bounds
        ``|f + perturbation|``. Must satisfy ``M < R²/4``.
    perturbation : Perturbation, optional
        Must be supported in ``|ξ| ≤ R/2``.
    """

    def __init__(self, f, sigma=1, R=None, perturbation=None):
        if sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")
        self.f = f
        self.sigma = int(sigma)
        self.perturbation = perturbation
        m = f.bound() + (perturbation.bound() if perturbation else 0.0)
        self.R = 2.0 * np.sqrt(m + 1.0) if R is None else float(R)
        if not m < self.R**2 / 4:
            raise DomainError(f"R = {self.R} too small: |S - σξ²| may reach {m} ≥ R²/4")
        if perturbation is not None and perturbation.halfwidth > self.R / 2:
            raise DomainError("perturbation must be supported in |ξ| ≤ R/2")

    @property
    def kappa(self):
        return 0 if self.sigma == 1 else 1

    def __repr__(self):
        return f"GenFamily({self.f}, sigma={self.sigma}, R={self.R:.4g})"

    def __call__(self, q, xi):
        q, xi = np.broadcast_arrays(np.asarray(q, float), np.asarray(xi, float))
        out = self.f(q) + self.sigma * xi * xi
        if self.perturbation is not None:
            out = out + self.perturbation(q, xi)
        return out

    def gradient(self, q, xi):
        dq = self.f.deriv(q)
        dxi = 2.0 * self.sigma * np.asarray(xi, float)
        if self.perturbation is not None:
            b, b1, _ = self.perturbation._beta(xi)
            g = self.perturbation.g
            dq = dq + g.deriv(q) * b
            dxi = dxi + g(q) * b1
        return np.array([dq, dxi])

    def hessian(self, q, xi):
        hqq = float(self.f.deriv(q, 2))
        hqx = 0.0
        hxx = 2.0 * self.sigma
        if self.perturbation is not None:
            b, b1, b2 = (float(v) for v in self.perturbation._beta(xi))
            g = self.perturbation.g
            hqq += float(g.deriv(q, 2)) * b
            hqx += float(g.deriv(q)) * b1
            hxx += float(g(q)) * b2
        return np.array([[hqq, hqx], [hqx, hxx]])

    def shifted(self, c):
        return GenFamily(self.f + c, self.sigma, None, self.perturbation)


def genfun_for_front(f):
    """``S = f(q) + ξ²``, generating the graph of the 1-jet of ``f``."""
    return GenFamily(f, sigma=1)


def generated_legendrian(S, n=720):
    """``(q, ∂_q S, S)`` over the fibre-critical set ``ξ = 0`` of an unperturbed family."""
    if S.perturbation is not None:
        raise ValueError("the fibre-critical set is ξ = 0 only for unperturbed families")
    q = 2 * np.pi * np.arange(n) / n
    return np.c_[q, S.f.deriv(q), S.f(q)]


# -- critical points ------------------------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    q: float
    xi: float
    value: float
    index: int


@dataclass
class CriticalSet:
    points: list
    degenerate: bool = False

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    @property
    def values(self):
        return np.array([c.value for c in self.points])


def critical_points(S, seeds=(64, 9), dedupe=1e-9):
    """Solutions of ``∇S = 0`` on ``S¹ x [-R, R]`` by seeded damped Newton.

    For unperturbed families the critical set is ``{ξ = 0, f'(q) = 0}`` and
    is found by bracketing the sign changes of ``f'``; identically vanishing
    ``f'`` is reported as a degenerate (critical circle) family.
    """
    f = S.f
    if S.perturbation is None:
        if f.slope_bound() == 0.0:
            return CriticalSet([], degenerate=True)
        n = 4096
        q = 2 * np.pi * np.arange(n + 1) / n
        d = f.deriv(q)
        roots = []
        for i in range(n):
            if d[i] == 0.0:
                roots.append(q[i])
            elif d[i] * d[i + 1] < 0:
                roots.append(brentq(f.deriv, q[i], q[i + 1], xtol=1e-14))
        pts = _dedupe([(r % (2 * np.pi), 0.0) for r in roots], dedupe)
        expected = f.sign_changes_of_derivative(n)
        if len(pts) < expected:
            raise NumericalError(f"found {len(pts)} critical points, expected {expected}")
        return CriticalSet([_classify(S, q, xi) for q, xi in pts])
    found = []
    qs = np.linspace(0, 2 * np.pi, seeds[0], endpoint=False)
    xs = np.linspace(-S.R / 2, S.R / 2, seeds[1])
    for q0 in qs:
        for x0 in xs:
            z = _newton(S, np.array([q0, x0]))
            if z is not None:
                found.append((z[0] % (2 * np.pi), z[1]))
    pts = _dedupe(found, dedupe)
    degenerate = any(abs(np.linalg.det(S.hessian(q, xi))) < 1e-10 for q, xi in pts)
    return CriticalSet([_classify(S, q, xi) for q, xi in pts], degenerate)


def _newton(S, z, iters=60):
    for _ in range(iters):
        g = S.gradient(z[0], z[1])
        if np.max(np.abs(g)) < 1e-13:
            return z
        try:
            step = np.linalg.solve(S.hessian(z[0], z[1]), g)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        n0 = np.linalg.norm(g)
        while lam > 1e-4:
            znew = z - lam * step
            if np.linalg.norm(S.gradient(znew[0], znew[1])) < (1 - 0.25 * lam) * n0:
                break
            lam *= 0.5
        z = z - lam * step
        if abs(z[1]) > S.R:
            return None
    g = S.gradient(z[0], z[1])
    return z if np.max(np.abs(g)) < 1e-10 else None


def _dedupe(pts, tol):
    out = []
    for q, xi in sorted(pts):
        if not any(abs((q - a + np.pi) % (2 * np.pi) - np.pi) < tol and abs(xi - b) < tol for a, b in out):
            out.append((q, xi))
    return out


def _classify(S, q, xi):
    ev = np.linalg.eigvalsh(S.hessian(q, xi))
    return CriticalPoint(float(q), float(xi), float(S(q, xi)), int(np.sum(ev < 0)))


# -- the filtration complex -----------------------------------------------------

@dataclass
class CriticalValueResult:
    """``c₋`` with its grid and witness.

    ``witness`` is the vertex that is the oldest class (κ = 0) or the pair of
    vertices of the edge at which the two ends of the cylinder merge (κ = 1),
    as ``(q, ξ)`` rows.
    """

    c_minus: float
    kappa: int
    n_q: int
    n_xi: int
    value_step: float
    witness: np.ndarray
    method: str
    family: object = None

    @property
    def level(self):
        return self.c_minus

    def relative_cycle(self):
        """Vertex path ``(q, ξ)`` in the sublevel set at ``c₋`` representing the class.

        For ``κ = 0`` the class is a point and the witness vertex is returned.
        """
        if self.kappa == 0:
            return self.witness
        grid = FiltrationComplex(self.family, self.n_q, self.n_xi)
        return grid.representative(self.c_minus)


class FiltrationComplex:
    """Cubical complex on ``S¹ x [-R, R]`` with ``n_q x n_xi`` cells.

    Vertex ``(i, j)`` sits at ``q = 2πi/n_q``, ``ξ = -R + 2Rj/n_xi``; ``n_xi``
    is even so the row ``ξ = 0`` is on the grid.
    """

    def __init__(self, S, n_q, n_xi=N_XI):
        if n_xi % 2:
            raise ValueError("n_xi must be even")
        self.S, self.n_q, self.n_xi = S, int(n_q), int(n_xi)
        self.q = 2 * np.pi * np.arange(self.n_q) / self.n_q
        self.xi = np.linspace(-S.R, S.R, self.n_xi + 1)
        self.values = S(self.q[:, None], self.xi[None, :])
        self.c_low = -S.R**2 / 2

    @property
    def nv(self):
        return self.n_q * (self.n_xi + 1)

    def vid(self, i, j):
        return (i % self.n_q) * (self.n_xi + 1) + j

    def edges(self):
        """``(u, v)`` vertex ids of horizontal then vertical edges, each lexicographic in ``(i, j)``."""
        i, j = np.meshgrid(np.arange(self.n_q), np.arange(self.n_xi + 1), indexing="ij")
        hu, hv = self.vid(i, j).ravel(), self.vid(i + 1, j).ravel()
        i, j = np.meshgrid(np.arange(self.n_q), np.arange(self.n_xi), indexing="ij")
        vu, vv = self.vid(i, j).ravel(), self.vid(i, j + 1).ravel()
        return np.r_[hu, vu], np.r_[hv, vv]

    def value_step(self):
        """Largest value change along q-edges within ``|ξ| ≤ R/2``."""
        rows = np.abs(self.xi) <= self.S.R / 2 + 1e-12
        v = self.values[:, rows]
        return float(np.max(np.abs(np.roll(v, -1, axis=0) - v)))

    def in_A(self):
        return self.values.ravel() <= self.c_low

    def _vertex_rank(self):
        order = np.argsort(self.values.ravel(), kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        return order, rank

    # κ = 0 ---------------------------------------------------------------
    def oldest_class(self):
        order, rank = self._vertex_rank()
        eu, ev = self.edges()
        ew = np.maximum(self.values.ravel()[eu], self.values.ravel()[ev])
        e_order = np.argsort(ew, kind="stable")
        roots, _ = kernels.union_find(self.nv, rank[eu[e_order]].astype(np.int64),
                                      rank[ev[e_order]].astype(np.int64))
        if np.any(roots != 0):
            raise NumericalError("cubical grid is disconnected")
        v = order[0]
        return float(self.values.ravel()[v]), np.array([[self.q[v // (self.n_xi + 1)],
                                                         self.xi[v % (self.n_xi + 1)]]])

    # κ = 1 ---------------------------------------------------------------
    def _band_labels(self):
        """0 for bottom band of A, 1 for top band, -1 outside A."""
        a = self.in_A().reshape(self.n_q, self.n_xi + 1)
        lab = np.full(a.shape, -1)
        half = self.n_xi // 2
        lab[:, :half][a[:, :half]] = 0
        lab[:, half + 1:][a[:, half + 1:]] = 1
        if np.any(a[:, half]) or not (np.all(a[:, 0]) and np.all(a[:, -1])):
            raise DomainError("sublevel set at -R²/2 is not two boundary bands; increase R")
        return lab.ravel()

    def band_merge(self):
        """Level at which the two ends of the cylinder join, and the joining edge."""
        vals = self.values.ravel()
        lab = self._band_labels()
        free = np.flatnonzero(lab < 0)
        order = free[np.argsort(vals[free], kind="stable")]
        # bands become the two oldest vertices; free vertices follow by value
        rank = np.empty(self.nv, dtype=np.int64)
        rank[lab == 0] = 0
        rank[lab == 1] = 1
        rank[order] = 2 + np.arange(order.size)
        eu, ev = self.edges()
        keep = rank[eu] != rank[ev]
        eu, ev = eu[keep], ev[keep]
        ew = np.maximum(vals[eu], vals[ev])
        ew = np.where((lab[eu] >= 0) & (lab[ev] >= 0), -np.inf, ew)
        e_order = np.argsort(ew, kind="stable")
        _, pairs = kernels.union_find(order.size + 2, rank[eu[e_order]], rank[ev[e_order]])
        hit = np.flatnonzero(pairs[:, 0] == 1)
        if hit.size == 0:
            raise NumericalError("the ends of the cylinder never merge")
        k = e_order[pairs[hit[0], 1]]
        a, b = eu[k], ev[k]
        return float(ew[k]), self._coords(np.array([a, b]))

    def _coords(self, v):
        return np.c_[self.q[v // (self.n_xi + 1)], self.xi[v % (self.n_xi + 1)]]

    def reduce_fibre(self, i0=0):
        """Z/2 reduction of the fibre segment at column ``i0`` against the 2-cell boundaries."""
        vals = self.values.ravel()
        inA = self.in_A()
        eu, ev = self.edges()
        ew = np.maximum(vals[eu], vals[ev])
        e_in_A = inA[eu] & inA[ev]
        rel = np.flatnonzero(~e_in_A)
        order = rel[np.argsort(ew[rel], kind="stable")]
        erank = np.full(eu.size, -1, dtype=np.int64)
        erank[order] = np.arange(order.size)
        nh = self.n_q * (self.n_xi + 1)
        i, j = np.meshgrid(np.arange(self.n_q), np.arange(self.n_xi), indexing="ij")
        h0 = ((i % self.n_q) * (self.n_xi + 1) + j).ravel()
        h1 = h0 + 1
        v0 = nh + (i * self.n_xi + j).ravel()
        v1 = nh + (((i + 1) % self.n_q) * self.n_xi + j).ravel()
        faces = erank[np.c_[h0, h1, v0, v1]]
        cols = [np.sort(r[r >= 0]) for r in faces]
        indptr = np.r_[0, np.cumsum([len(c) for c in cols])].astype(np.int64)
        indices = np.concatenate(cols).astype(np.int64) if cols else np.zeros(0, np.int64)
        target = erank[nh + i0 * self.n_xi + np.arange(self.n_xi)]
        target = np.sort(target[target >= 0])
        reduced = kernels.reduce_z2(indptr, indices, target)
        if reduced.size == 0:
            raise NumericalError("fibre class reduced to zero")
        k = order[reduced.max()]
        return float(ew[k]), self._coords(np.array([eu[k], ev[k]]))

    def representative(self, level):
        """Vertex path from the bottom to the top band inside ``{S ≤ level}``."""
        vals = self.values.ravel()
        lab = self._band_labels()
        ok = vals <= level + 1e-15
        eu, ev = self.edges()
        keep = ok[eu] & ok[ev]
        src = self.nv
        dst = self.nv + 1
        rows = np.r_[eu[keep], ev[keep], np.full(np.sum(lab == 0), src), np.flatnonzero(lab == 1)]
        cols = np.r_[ev[keep], eu[keep], np.flatnonzero(lab == 0), np.full(np.sum(lab == 1), dst)]
        g = csr_matrix((np.ones(rows.size), (rows, cols)), shape=(self.nv + 2, self.nv + 2))
        _, pred = breadth_first_order(g, src, directed=True, return_predecessors=True)
        if pred[dst] < 0:
            raise NumericalError(f"no relative cycle at level {level}")
        path = []
        v = pred[dst]
        while v != src:
            path.append(v)
            v = pred[v]
        return self._coords(np.array(path[::-1]))


def _grid_for(S, n_q=None, n_xi=N_XI, value_step=VALUE_STEP):
    if n_q is not None:
        return FiltrationComplex(S, n_q, n_xi)
    n = 64
    while True:
        # value step along q from a probe of the |ξ| ≤ R/2 rows
        grid = FiltrationComplex(S, n, n_xi)
        step = grid.value_step()
        if step <= value_step:
            return grid
        n_next = max(2 * n, 1 << int(np.ceil(np.log2(n * step / value_step))))
        if n_next > MAX_NQ:
            raise NumericalError(f"grid refinement beyond n_q = {MAX_NQ} needed")
        n = n_next


def c_minus(S, n_q=None, n_xi=N_XI, value_step=VALUE_STEP, method="auto", q0_index=0):
    """The critical value ``c₋(S)`` selected by the class of a point (κ = 0) or fibre (κ = 1).

    Without ``n_q`` the grid is doubled until ``S`` changes by at most
    ``value_step`` along every q-edge within ``|ξ| ≤ R/2``.
    """
    grid = _grid_for(S, n_q, n_xi, value_step)
    if S.kappa == 0:
        if method == "reduction":
            c, wit = _reduce_point(grid)
        else:
            c, wit = grid.oldest_class()
            method = "union-find"
    else:
        if method == "reduction":
            c, wit = grid.reduce_fibre(q0_index)
        else:
            c, wit = grid.band_merge()
            method = "band-merge"
    return CriticalValueResult(c, S.kappa, grid.n_q, grid.n_xi, grid.value_step(), wit, method, S)


def _reduce_point(grid):
    """Z/2 reduction of a vertex class against the edge boundaries."""
    order, rank = grid._vertex_rank()
    eu, ev = grid.edges()
    ru, rv = rank[eu], rank[ev]
    lo, hi = np.minimum(ru, rv), np.maximum(ru, rv)
    indptr = np.arange(0, 2 * eu.size + 1, 2, dtype=np.int64)
    indices = np.c_[lo, hi].ravel().astype(np.int64)
    target = np.array([rank[grid.vid(0, grid.n_xi // 2)]], dtype=np.int64)
    reduced = kernels.reduce_z2(indptr, indices, target)
    v = order[reduced.max()]
    return float(grid.values.ravel()[v]), grid._coords(np.array([v]))


# -- monotonicity ---------------------------------------------------------------

@dataclass
class HarnessResult:
    t: np.ndarray
    values: np.ndarray
    steps: np.ndarray
    nondecreasing: bool


def monotonicity_harness(family, steps=10, t=None, **kwargs):
    """Evaluate ``c₋(S_t)`` along a family and test that it never decreases.

    A drop is tolerated up to twice the larger grid value-step of the two
    members involved.
    """
    t = np.linspace(0.0, 1.0, steps + 1) if t is None else np.asarray(t, dtype=float)
    res = [c_minus(family(s), **kwargs) for s in t]
    vals = np.array([r.c_minus for r in res])
    st = np.array([r.value_step for r in res])
    tol = 2 * np.maximum(st[1:], st[:-1])
    ok = bool(np.all(np.diff(vals) >= -tol))
    return HarnessResult(t, vals, st, ok)
