"""Lorentz metrics on coordinate charts, causal classification, geodesic flow.

Every supported spacetime is a product ``(N, gbar) x (R, -dt^2)`` written in a
chart whose last coordinate is the time ``t``; the signature is (+,...,+,-).
``∂t`` is the future time orientation, so a non-spacelike vector is future
pointing iff its ``dt`` component is positive.

The round sphere is carried in its unit embedding in R^{m+1}; see
:class:`SphereBase` for what ``matrix`` and ``christoffel`` mean there.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from . import _fallback
from ._backend import CONFORMAL, FLAT, SPHERE
from .errors import DomainError, IntegrationError

NULL_BAND = 1e-10


# -- base (spatial) metrics ---------------------------------------------------

class BaseMetric:
    """Riemannian metric on the spatial chart of a product spacetime."""

    dim = 2              # number of chart coordinates
    manifold_dim = 2     # m, the dimension of the Cauchy surface
    kernel_kind = FLAT

    @property
    def kernel_params(self):
        return np.zeros(2 + self.dim)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return x.shape == (self.dim,) and bool(np.all(np.isfinite(x)))

    def check(self, x):
        if not self.contains(x):
            raise DomainError(f"point {np.asarray(x).tolist()} outside chart domain of {self!r}")

    def matrix(self, x):
        raise NotImplementedError

    def christoffel(self, x):
        raise NotImplementedError

    def accel(self, x, v):
        """``-Γ(v, v)`` at ``x``."""
        return -np.einsum("ijk,j,k->i", self.christoffel(x), v, v)

    def norm(self, x, v):
        v = np.asarray(v, dtype=float)
        return float(np.sqrt(v @ self.matrix(x) @ v))

    def frame(self, x):
        """Orthonormal basis (rows) of the tangent space at ``x``."""
        raise NotImplementedError

    def project(self, x, v):
        return x, v


class FlatBase(BaseMetric):
    """Euclidean R^m."""

    def __init__(self, m=2):
        if m < 2:
            raise ValueError("spatial dimension must be at least 2")
        self.dim = self.manifold_dim = m

    def __repr__(self):
        return f"FlatBase({self.dim})"

    def matrix(self, x):
        self.check(x)
        return np.eye(self.dim)

    def christoffel(self, x):
        self.check(x)
        return np.zeros((self.dim,) * 3)

    def accel(self, x, v):
        return np.zeros(self.dim)

    def frame(self, x):
        return np.eye(self.dim)


class ConformalBase(BaseMetric):
    """``gbar = exp(2λ) δ`` with a Gaussian bump ``λ = A exp(-|x - c|² / w²)``.

    ``radius`` bounds the open chart domain ``U = {|x - c| < radius}``.
    """

    kernel_kind = CONFORMAL

    def __init__(self, amplitude=0.2, width=1.0, center=(0.0, 0.0), radius=1e3):
        self.amplitude = float(amplitude)
        self.width = float(width)
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.dim = self.manifold_dim = len(self.center)
        if self.width <= 0:
            raise ValueError("width must be positive")

    def __repr__(self):
        return (f"ConformalBase(amplitude={self.amplitude}, width={self.width}, "
                f"center={self.center.tolist()})")

    @property
    def kernel_params(self):
        return np.r_[self.amplitude, self.width, self.center]

    def contains(self, x):
        return super().contains(x) and np.linalg.norm(np.asarray(x) - self.center) < self.radius

    def lam(self, x):
        dx = np.asarray(x, dtype=float) - self.center
        return self.amplitude * np.exp(-np.dot(dx, dx) / self.width**2)

    def grad_lam(self, x):
        dx = np.asarray(x, dtype=float) - self.center
        return -2.0 * self.lam(x) / self.width**2 * dx

    def matrix(self, x):
        self.check(x)
        return np.exp(2.0 * self.lam(x)) * np.eye(self.dim)

    def christoffel(self, x):
        self.check(x)
        g = self.grad_lam(x)
        eye = np.eye(self.dim)
        # Γ^i_jk = δ_ij ∂_k λ + δ_ik ∂_j λ - δ_jk ∂_i λ
        return (np.einsum("ij,k->ijk", eye, g) + np.einsum("ik,j->ijk", eye, g)
                - np.einsum("jk,i->ijk", eye, g))

    def accel(self, x, v):
        g = self.grad_lam(x)
        return -(2.0 * v * np.dot(g, v) - np.dot(v, v) * g)

    def frame(self, x):
        return np.exp(-self.lam(x)) * np.eye(self.dim)


class SphereBase(BaseMetric):
    """Unit round sphere S^m in its embedding chart R^{m+1}.

    ``matrix`` returns the ambient identity, whose restriction to the tangent
    space ``x^⊥`` is the round metric. ``christoffel`` returns the symbols
    ``Γ^i_jk = x^i δ_jk`` of the embedded geodesic equation ``x'' = -|x'|² x``;
    they agree with the Levi-Civita connection on tangent vectors only.
    """

    kernel_kind = SPHERE

    def __init__(self, m=2):
        self.manifold_dim = m
        self.dim = m + 1

    def __repr__(self):
        return f"SphereBase({self.manifold_dim})"

    def contains(self, x):
        return super().contains(x) and abs(np.linalg.norm(x) - 1.0) < 1e-9

    def matrix(self, x):
        self.check(x)
        return np.eye(self.dim)

    def christoffel(self, x):
        self.check(x)
        return np.einsum("i,jk->ijk", np.asarray(x, dtype=float), np.eye(self.dim))

    def accel(self, x, v):
        return -np.dot(v, v) * x

    def frame(self, x):
        x = np.asarray(x, dtype=float)
        basis = []
        for e in np.eye(self.dim)[np.argsort(np.abs(x))]:
            w = e - np.dot(e, x) * x
            for b in basis:
                w -= np.dot(w, b) * b
            if np.linalg.norm(w) > 1e-6:
                basis.append(w / np.linalg.norm(w))
            if len(basis) == self.manifold_dim:
                break
        if self.manifold_dim == 2:
            basis[1] = np.cross(x, basis[0])
        return np.array(basis)

    def project(self, x, v):
        x = x / np.linalg.norm(x)
        return x, v - np.dot(v, x) * x

    def tangent_basis(self, x):
        return self.frame(x)


# -- spacetimes ---------------------------------------------------------------

class SpacetimeMetric:
    """``gbar ⊕ (-dt²)`` on the chart ``(spatial chart) x R``; time is the last index."""

    kind = "product"

    def __init__(self, base):
        self.base = base
        self.dim_space = base.manifold_dim
        self.time_index = base.dim
        self.chart_dim = base.dim + 1

    def __repr__(self):
        return f"{type(self).__name__}({self.base!r})"

    def spatial(self, x):
        return np.asarray(x, dtype=float)[: self.time_index]

    def check_event(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.chart_dim,) or not np.isfinite(x[-1]):
            raise DomainError(f"event {x.tolist()} is not a point of the {self.chart_dim}-dim chart")
        self.base.check(x[:-1])
        return x

    def matrix(self, x):
        x = self.check_event(x)
        g = np.zeros((self.chart_dim, self.chart_dim))
        g[:-1, :-1] = self.base.matrix(x[:-1])
        g[-1, -1] = -1.0
        return g

    def christoffel(self, x):
        x = self.check_event(x)
        gam = np.zeros((self.chart_dim,) * 3)
        gam[:-1, :-1, :-1] = self.base.christoffel(x[:-1])
        return gam

    def acceleration(self, x, v):
        a = np.zeros(self.chart_dim)
        a[:-1] = self.base.accel(x[:-1], v[:-1])
        return a

    def inner(self, x, v, w):
        return float(np.asarray(v) @ self.matrix(x) @ np.asarray(w))

    def tangent_basis(self, x):
        """Orthonormal basis of the tangent space at ``x`` (spatial rows, then ∂t)."""
        x = self.check_event(x)
        rows = [np.r_[e, 0.0] for e in self.base.frame(x[:-1])]
        rows.append(np.r_[np.zeros(self.base.dim), 1.0])
        return np.array(rows)


class Minkowski(SpacetimeMetric):
    kind = "minkowski"

    def __init__(self, m=2):
        super().__init__(FlatBase(m))

    def __repr__(self):
        return f"Minkowski({self.dim_space})"


class ProductRiemannian(SpacetimeMetric):
    kind = "conformal"


class RoundSphereProduct(SpacetimeMetric):
    kind = "round_sphere"

    def __init__(self, m=2):
        super().__init__(SphereBase(m))

    def __repr__(self):
        return f"RoundSphereProduct({self.dim_space})"


def conformal_bump(amplitude=0.2, width=1.0, center=(0.0, 0.0)):
    """Product spacetime over ``exp(2λ)δ`` with ``λ = amplitude·exp(-|x - c|²/width²)``."""
    return ProductRiemannian(ConformalBase(amplitude, width, center))


def metric_eval(metric, x):
    """Component matrix ``g_{μν}(x)``."""
    return metric.matrix(x)


def christoffel(metric, x):
    """Array ``Γ[λ, μ, ν]`` of connection symbols at ``x``."""
    return metric.christoffel(x)


def signature(metric, x):
    """``(n_positive, n_negative)`` eigenvalue counts on the tangent space at ``x``."""
    basis = metric.tangent_basis(x)
    gram = basis @ metric.matrix(x) @ basis.T
    ev = np.linalg.eigvalsh(gram)
    return int(np.sum(ev > 0)), int(np.sum(ev < 0))


# -- causal classification ----------------------------------------------------

class Causality(Enum):
    TIMELIKE = "timelike"
    NULL = "null"
    SPACELIKE = "spacelike"


@dataclass(frozen=True)
class CausalClass:
    kind: Causality
    future: bool | None = None

    def __post_init__(self):
        if (self.future is None) != (self.kind is Causality.SPACELIKE):
            raise ValueError("time orientation is recorded iff the vector is non-spacelike")

    @property
    def past(self):
        return self.future is False


def classify_vector(metric, x, v, band=NULL_BAND):
    """Causal character of the tangent vector ``v`` at ``x``.

    ``|g(v,v)| < band·|v|²`` counts as null (Euclidean ``|v|`` in the chart).
    """
    v = np.asarray(v, dtype=float)
    nv = float(np.dot(v, v))
    if nv <= 1e-28:
        raise ValueError("cannot classify the zero vector")
    q = metric.inner(x, v, v)
    if q > band * nv:
        return CausalClass(Causality.SPACELIKE)
    kind = Causality.NULL if abs(q) <= band * nv else Causality.TIMELIKE
    return CausalClass(kind, future=bool(v[metric.time_index] > 0))


def null_future_direction(metric, x, q, rtol=1e-10):
    """Future null vector at ``x`` with spatial part ``q`` and ``dt = 1``.

    ``q`` must be a unit vector for the spatial metric (and tangent to the
    sphere for round-sphere products).
    """
    x = metric.check_event(x)
    q = np.asarray(q, dtype=float)
    xs = x[:-1]
    if isinstance(metric.base, SphereBase) and abs(np.dot(q, xs)) > rtol:
        raise ValueError("spatial direction is not tangent to the sphere")
    nq = metric.base.norm(xs, q)
    if abs(nq - 1.0) > rtol:
        raise ValueError(f"spatial direction has norm {nq}, expected 1")
    return np.r_[q, 1.0]


# -- geodesics ----------------------------------------------------------------

@dataclass
class GeodesicPath:
    """Accepted steps of a geodesic with cubic Hermite dense output.

    ``s`` is the affine parameter (monotone, possibly decreasing for backward
    integration); ``x``/``v`` hold chart positions and velocities.
    """

    metric: SpacetimeMetric
    s: np.ndarray
    x: np.ndarray
    v: np.ndarray
    tol: float

    def _spline(self):
        order = np.argsort(self.s)
        return CubicHermiteSpline(self.s[order], self.x[order], self.v[order], axis=0)

    def __call__(self, s):
        """Position and velocity at affine parameter(s) ``s`` by Hermite interpolation."""
        sp = self._spline()
        return sp(s), sp.derivative()(s)

    @property
    def endpoint(self):
        return self.x[-1], self.v[-1]

    def locate(self, func, target=0.0, xtol=1e-14):
        """First parameter where ``func(x) == target`` along the path, or ``None``."""
        vals = np.array([func(p) for p in self.x]) - target
        if vals[0] == 0.0:
            return self.s[0]
        hits = np.flatnonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))
        if hits.size == 0:
            return None
        k = hits[0]
        sp = self._spline()
        return brentq(lambda s: func(sp(s)) - target, self.s[k], self.s[k + 1],
                      xtol=xtol, rtol=4 * np.finfo(float).eps)

    def norm_residual(self):
        """max |g(γ', γ')| over output nodes."""
        return max(abs(self.metric.inner(x, v, v)) for x, v in zip(self.x, self.v))

    def equation_residual(self):
        """Sup-norm mismatch between finite-difference acceleration and ``-Γ(γ',γ')``.

        Acceleration is the derivative of the degree-4 Lagrange interpolant of
        the velocity through five consecutive nodes (interior nodes only).
        """
        worst = 0.0
        for k in range(2, len(self.s) - 2):
            ss = self.s[k - 2:k + 3] - self.s[k]
            w = _lagrange_derivative_weights(ss)
            fd = w @ self.v[k - 2:k + 3]
            exact = self.metric.acceleration(self.x[k], self.v[k])
            worst = max(worst, float(np.max(np.abs(fd - exact))))
        return worst


def _lagrange_derivative_weights(nodes):
    """Weights ``w`` with ``p'(0) = Σ w_j f(nodes_j)`` for the interpolating polynomial."""
    n = len(nodes)
    vander = np.vander(nodes, n, increasing=True)
    # p(s) = Σ c_i s^i, p'(0) = c_1 = e_1 · V^{-1} f
    return np.linalg.solve(vander.T, np.eye(n)[1])


def _dopri_single(rhs, y, h, tol):
    """One scalar-path Dormand-Prince attempt, same tableau as the kernels."""
    ks = []
    for i in range(7):
        yi = y.copy()
        for j, a in enumerate(_fallback._A[i]):
            if a != 0.0:
                yi += h * a * ks[j]
        ks.append(rhs(yi))
    ynew = y.copy()
    for j, a in enumerate(_fallback._A[6]):
        if a != 0.0:
            ynew += h * a * ks[j]
    errv = h * sum(e * k for e, k in zip(_fallback._E, ks) if e != 0.0)
    sc = tol + tol * np.maximum(np.abs(y), np.abs(ynew))
    return ynew, float(np.sqrt(np.mean((errv / sc) ** 2)))


def geodesic_flow(metric, x, v, s_max, tol=1e-10, h_max=0.05, max_steps=200000):
    """Integrate ``γ'' = -Γ(γ', γ')`` from ``(x, v)`` over affine length ``s_max``.

    Adaptive Dormand-Prince 5(4) with local error ``tol``; ``s_max`` may be
    negative. Accepted steps are at most ``h_max`` long so that the output
    nodes resolve the path finely enough for the dense output and for the
    finite-difference equation residual. Raises :class:`IntegrationError`
    carrying the partial path on step underflow or when the path leaves the
    chart domain.
    """
    x = metric.check_event(x)
    v = np.asarray(v, dtype=float)
    n = metric.chart_dim
    base = metric.base

    def rhs(y):
        return np.r_[y[n:], metric.acceleration(y[:n], y[n:])]

    def fix(y):
        xs, vs = base.project(y[:n - 1], y[n:2 * n - 1])
        return np.r_[xs, y[n - 1], vs, y[-1]]

    y = fix(np.r_[x, v])
    ss, ys = [0.0], [y]
    sgn = -1.0 if s_max < 0 else 1.0
    h = sgn * min(abs(s_max), _fallback.H_INIT)
    s = 0.0
    steps = 0

    def partial():
        arr = np.array(ys)
        return GeodesicPath(metric, np.array(ss), arr[:, :n], arr[:, n:], tol)

    while sgn * (s_max - s) > 0:
        rem = s_max - s
        hs = min(abs(h), h_max or np.inf)
        if abs(rem) <= hs * (1 + 1e-12):
            hs = abs(rem)
        elif abs(rem) < 2 * hs:
            hs = 0.5 * abs(rem)     # split the tail evenly, no sliver steps
        hs *= sgn
        ynew, err = _dopri_single(rhs, y, hs, tol)
        steps += 1
        fac = float(_fallback._factor(np.array([err]))[0])
        if err <= 1.0:
            ynew = fix(ynew)
            if not base.contains(ynew[:n - 1]):
                raise IntegrationError("geodesic left the chart domain", partial())
            y = ynew
            s = s_max if abs(hs) >= abs(rem) else s + hs
            ss.append(s)
            ys.append(y)
            h = hs * fac
            if s == s_max:
                break
        else:
            h = hs * min(fac, 1.0)
        if abs(h) < 1e-13 * max(1.0, abs(s)):
            raise IntegrationError("step size underflow", partial())
        if steps >= max_steps:
            raise IntegrationError("step budget exhausted", partial())
    return partial()
