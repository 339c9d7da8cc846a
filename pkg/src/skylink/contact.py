"""Hodograph transform, fronts in the annulus, and classical Legendrian invariants.

Conventions
-----------
The 1-jet space ``J¹(S¹)`` carries coordinates ``(φ, p, u)`` and contact form
``du - p dφ``. Fronts are drawn in the ``(φ, u)`` annulus. Components are
oriented by their sample order.

* Over/under: at a front crossing the strand with the larger ``p`` is over.
* Crossing sign: ``sign(s_o · s_u · (p_o - p_u))`` where ``s`` is the
  direction of travel in ``φ`` of each strand. Two φ-increasing graph strands
  therefore always cross positively, and a Reidemeister-I swallowtail adds a
  positive crossing so that ``tb`` is unchanged by it.
* Cusps: a cusp is *down* when the front is traversed downward through it.
* ``rotation = (D - U) / 2``, ``tb = writhe - (#cusps) / 2``, winding is the
  degree of ``φ`` over ``S¹``, all with the blackboard framing of the annulus.
"""
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import (CapabilityError, DomainError, IntegrityError, NonGenericFrontError,
                     UnsupportedTopologyError)
from .geometry import ConformalBase, FlatBase
from .skies import SkyFamily, SkySample, STStarPoint

TWO_PI = 2 * np.pi
TANGENCY_BAND = 1e-8
CROSSING_XTOL = 1e-9
RESIDUAL_LIMIT = 1e-4


# -- hodograph ----------------------------------------------------------------

def hodograph(point):
    """Image ``(φ, p, u)`` of a unit cotangent point of ``ST*R²``.

    ``φ`` is the angle of the codirection, ``u = <x, q>`` and ``p = <x, q'>``
    with ``q' = (-sin φ, cos φ)``.
    """
    x = np.asarray(point.base, dtype=float)
    q = np.asarray(point.q, dtype=float)
    if x.shape != (2,) or q.shape != (2,):
        raise ValueError("hodograph is implemented on ST*R² only")
    if abs(np.linalg.norm(q) - 1.0) > 1e-10:
        raise ValueError(f"codirection has norm {np.linalg.norm(q)}, expected 1")
    phi = float(np.arctan2(q[1], q[0]) % TWO_PI)
    p, u = hodograph_arrays(x[None, :], np.array([phi]))
    return phi, float(p[0]), float(u[0])


def hodograph_arrays(x, phi):
    """Vectorized hodograph: base points ``x`` (rows) and angles ``phi`` to ``(p, u)``."""
    x = np.asarray(x, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    return -x[:, 0] * s + x[:, 1] * c, x[:, 0] * c + x[:, 1] * s


def inverse_hodograph(phi, p, u):
    """Unit cotangent point with hodograph image ``(φ, p, u)``."""
    c, s = np.cos(phi), np.sin(phi)
    return STStarPoint(np.array([u * c - p * s, u * s + p * c]), np.array([c, s]))


def inverse_hodograph_arrays(phi, p, u):
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([u * c - p * s, u * s + p * c], axis=-1)


# -- Legendrian curves --------------------------------------------------------

# cubic Lagrange on parameter nodes -1, 0, 1, 2 evaluated at 3-point Gauss nodes in [0, 1]
_GAUSS_T, _GAUSS_W = np.polynomial.legendre.leggauss(3)
_GAUSS_T = 0.5 * (_GAUSS_T + 1.0)
_GAUSS_W = 0.5 * _GAUSS_W
_NODES = np.array([-1.0, 0.0, 1.0, 2.0])


def _lagrange_tables():
    vals = np.zeros((3, 4))
    ders = np.zeros((3, 4))
    for j in range(4):
        others = np.delete(_NODES, j)
        poly = np.poly1d(others, r=True) / np.prod(_NODES[j] - others)
        vals[:, j] = poly(_GAUSS_T)
        ders[:, j] = poly.deriv()(_GAUSS_T)
    return vals, ders


_LVAL, _LDER = _lagrange_tables()


@dataclass
class LegendrianCurve:
    """Closed curve in ``J¹(S¹)`` sampled at a uniform parameter.

    ``phi`` is stored as a continuous lift; the sample after the last one is
    the first sample with ``φ`` advanced by ``2π·winding``.
    """

    phi: np.ndarray
    p: np.ndarray
    u: np.ndarray
    component: int = 0

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if not (self.phi.shape == self.p.shape == self.u.shape) or self.phi.ndim != 1:
            raise ValueError("phi, p and u must be 1-d arrays of equal length")
        self.phi = np.unwrap(self.phi)

    def __len__(self):
        return len(self.phi)

    @property
    def winding(self):
        """Degree of the projection to ``S¹``."""
        step = (self.phi[0] - self.phi[-1] + np.pi) % TWO_PI - np.pi
        return int(round((self.phi[-1] + step - self.phi[0]) / TWO_PI))

    def closed(self):
        """Arrays with the closing sample appended."""
        return (np.r_[self.phi, self.phi[0] + TWO_PI * self.winding],
                np.r_[self.p, self.p[0]], np.r_[self.u, self.u[0]])

    def points(self):
        """Rows ``(φ mod 2π, p, u)``."""
        return np.c_[self.phi % TWO_PI, self.p, self.u]

    def base_points(self):
        """Inverse hodograph of every sample."""
        return inverse_hodograph_arrays(self.phi, self.p, self.u)


def legendrian_residual(curve):
    """Largest per-interval defect of ``du = p dφ``, relative to ``max(|Δφ|, 2π/n)``.

    ``∫ p dφ`` over each interval is integrated with cubic interpolants of
    ``φ`` and ``p`` through four consecutive samples (fourth-order accurate).
    """
    phi, p, u = curve.closed()
    n = len(curve)
    idx = (np.arange(n)[:, None] + np.arange(-1, 3)[None, :])
    ph = _lifted(curve, idx)
    pp = curve.p[idx % n]
    integral = np.einsum("g,kg,kg->k", _GAUSS_W, pp @ _LVAL.T, ph @ _LDER.T)
    du = np.diff(u)
    dphi = np.diff(phi)
    return float(np.max(np.abs(du - integral) / np.maximum(np.abs(dphi), TWO_PI / n)))


def sky_to_legendrian(sky, component=0, check=True):
    """Hodograph image of a sky over a planar slice.

    The angle coordinate is that of the slice covector ``ḡ q`` (its Euclidean
    direction); samples keep the sky's launch order so that families stay
    matched sample by sample.
    """
    base = sky.metric.base
    if not isinstance(base, (FlatBase, ConformalBase)) or base.dim != 2:
        raise CapabilityError(f"hodograph needs a planar slice; {base!r} is not covered by R²")
    cov = sky.covector
    phi = np.unwrap(np.arctan2(cov[:, 1], cov[:, 0]))
    p, u = hodograph_arrays(sky.base, phi)
    curve = LegendrianCurve(phi, p, u, component)
    if check:
        res = legendrian_residual(curve)
        if res > RESIDUAL_LIMIT:
            raise IntegrityError(f"Legendrian residual {res:.3g} exceeds {RESIDUAL_LIMIT}")
    return curve


def jet_graph(f, df, n=720, component=0):
    """Graph of the 1-jet of ``f`` with derivative ``df`` sampled at ``n`` angles."""
    phi = TWO_PI * np.arange(n) / n
    return LegendrianCurve(phi, df(phi), f(phi), component)


def fibre_curve(x, n=720, component=0):
    """Hodograph image of the fibre of ``ST*R²`` over ``x``."""
    x = np.asarray(x, dtype=float)
    phi = TWO_PI * np.arange(n) / n
    p, u = hodograph_arrays(np.broadcast_to(x, (n, 2)), phi)
    return LegendrianCurve(phi, p, u, component)


def is_fibre(curve, tol=1e-8):
    """Whether every sample's inverse hodograph has the same base point."""
    pts = curve.base_points()
    return bool(np.max(np.linalg.norm(pts - pts.mean(axis=0), axis=1)) < tol)


# -- front diagrams -----------------------------------------------------------

@dataclass
class Branch:
    component: int
    direction: int
    phi: np.ndarray
    p: np.ndarray
    u: np.ndarray
    period: int = 0     # winding of a periodic (cusp-free) branch, else 0

    def __post_init__(self):
        order = np.argsort(self.phi)
        self.spline = CubicHermiteSpline(self.phi[order], self.u[order], self.p[order])
        self.slope = self.spline.derivative()

    @property
    def lo(self):
        return float(min(self.phi[0], self.phi[-1]))

    @property
    def hi(self):
        return float(max(self.phi[0], self.phi[-1]))


@dataclass(frozen=True)
class Crossing:
    phi: float
    over: int
    under: int
    sign: int
    u: float = 0.0


@dataclass(frozen=True)
class Cusp:
    phi: float
    u: float
    component: int
    down: bool
    right: bool


@dataclass
class FrontDiagram:
    curves: list
    crossings: list = field(default_factory=list)
    cusps: list = field(default_factory=list)
    tangencies: list = field(default_factory=list)

    def inter_crossings(self):
        return [c for c in self.crossings if c.over != c.under]

    def self_crossings(self, component):
        return [c for c in self.crossings if c.over == c.under == component]

    def component_cusps(self, component):
        return [c for c in self.cusps if c.component == component]


def _split(curve):
    """Monotone-φ branches and cusps of one component."""
    phi, p, u = curve.closed()
    n = len(curve)
    dphi = np.diff(phi)
    sg = np.sign(dphi)
    if np.any(sg == 0):
        raise NonGenericFrontError("stationary φ between samples", phi=float(phi[np.argmin(np.abs(dphi))] % TWO_PI))
    turns = np.flatnonzero(sg != np.roll(sg, 1))   # sample k is a φ-extremum
    if turns.size == 0:
        # cusp-free: one periodic branch, continued half a turn on each side
        idx = np.arange(-(n // 2), n + n // 2 + 1)
        return [Branch(curve.component, int(sg[0]), _lifted(curve, idx), curve.p[idx % n],
                       curve.u[idx % n], period=abs(curve.winding))], []
    cusps = []
    for k in turns:
        a, b, c = _lifted(curve, np.arange(k - 1, k + 2))
        # parabola through three consecutive samples locates the extremum
        denom = a - 2 * b + c
        t = float(np.clip(0.5 * (a - c) / denom, -1, 1)) if denom != 0 else 0.0
        phi_star = b + 0.5 * (c - a) * t + 0.5 * denom * t * t
        right = sg[k - 1] > 0
        dp = curve.p[(k + 1) % n] - curve.p[k - 1]
        down = bool(dp * (1 if right else -1) > 0)
        cusps.append(Cusp(float(phi_star % TWO_PI), float(curve.u[k]), curve.component, down, bool(right)))
    branches = []
    m = len(turns)
    for i in range(m):
        start, stop = turns[i], turns[(i + 1) % m]
        if stop <= start:
            stop += n
        idx = np.arange(start, stop + 1)
        branches.append(Branch(curve.component, int(sg[start]), _lifted(curve, idx),
                               curve.p[idx % n], curve.u[idx % n]))
    return branches, cusps


def _lifted(curve, idx):
    """``φ`` at cyclic sample indices, continued across the closing interval."""
    n = len(curve)
    return curve.phi[idx % n] + np.floor_divide(idx, n) * TWO_PI * curve.winding


def _ends(branch):
    """(φ, u, adjacent step) at both ends of a cusp-bounded branch."""
    if branch.period:
        return []
    return [(branch.phi[0], branch.u[0], abs(branch.phi[1] - branch.phi[0])),
            (branch.phi[-1], branch.u[-1], abs(branch.phi[-1] - branch.phi[-2]))]


def _cusp_margin(a, b, shift, at):
    """One sample step when ``a`` and shifted ``b`` meet at a shared cusp near ``at``."""
    margin = 0.0
    for pa, ua, ha in _ends(a):
        if abs(pa - at) > 1e-12:
            continue
        for pb, ub, hb in _ends(b):
            if abs(pb + shift - pa) < 1e-12 and abs(ub - ua) < 1e-12:
                margin = max(margin, ha, hb)
    return margin


def _branch_crossings(a, b, same, eps=1e-12):
    """Crossings of branch ``a`` with (lifts of) branch ``b``."""
    found = []
    kmin = int(np.ceil((a.lo - b.hi) / TWO_PI - 1e-12))
    kmax = int(np.floor((a.hi - b.lo) / TWO_PI + 1e-12))
    for k in range(kmin, kmax + 1):
        if same and (k <= 0 or (a.period and k % a.period == 0)):
            continue
        shift = TWO_PI * k
        lo = max(a.lo, b.lo + shift)
        hi = min(a.hi, b.hi + shift)
        span = hi - lo
        if span <= 1e-10:
            continue
        lo = lo + max(eps * max(1.0, span), _cusp_margin(a, b, shift, lo))
        hi = hi - max(eps * max(1.0, span), _cusp_margin(a, b, shift, hi))
        if hi <= lo:
            continue
        nodes = np.concatenate([a.phi, b.phi + shift])
        nodes = np.unique(np.r_[lo, hi, nodes[(nodes > lo) & (nodes < hi)]])

        def diff(t):
            return a.spline(t) - b.spline(t - shift)

        d = diff(nodes)
        if np.max(np.abs(d)) < 1e-12:
            raise DomainError("front components coincide; Legendrian components must be disjoint")
        for i in np.flatnonzero(np.sign(d[1:]) * np.sign(d[:-1]) < 0):
            root = brentq(diff, nodes[i], nodes[i + 1], xtol=CROSSING_XTOL * 1e-3)
            found.append((root, k, float(a.slope(root)), float(b.slope(root - shift)),
                          float(a.spline(root))))
        for i in np.flatnonzero(d == 0.0):
            if 0 < i < len(d) - 1:
                t = nodes[i]
                found.append((t, k, float(a.slope(t)), float(b.slope(t - shift)), float(a.spline(t))))
    return found


def front_diagram(*curves, band=TANGENCY_BAND):
    """Crossings, cusps and tangencies of the fronts of one or two components.

    Crossings are sign changes of front-height differences between monotone
    branches, refined by bracketed root finding. Candidates with
    ``|p_1 - p_2| < band`` are recorded as tangencies instead of crossings.
    """
    if not 1 <= len(curves) <= 2:
        raise ValueError("front diagrams are built for one or two components")
    curves = [LegendrianCurve(c.phi, c.p, c.u, i) for i, c in enumerate(curves)]
    branches, cusps = [], []
    for c in curves:
        b, cu = _split(c)
        branches += b
        cusps += cu
    diagram = FrontDiagram(curves, cusps=cusps)
    seen = []
    for i, a in enumerate(branches):
        for j in range(i, len(branches)):
            b = branches[j]
            for phi, k, pa, pb, u in _branch_crossings(a, b, same=(i == j)):
                key = (i, j, phi % TWO_PI)
                if any(s[0] == i and s[1] == j and abs((s[2] - key[2] + np.pi) % TWO_PI - np.pi) < 1e-7
                       for s in seen):
                    continue
                seen.append(key)
                if abs(pa - pb) < band:
                    diagram.tangencies.append(float(phi % TWO_PI))
                    continue
                over, under = (a, b) if pa > pb else (b, a)
                sign = int(np.sign(over.direction * under.direction))
                diagram.crossings.append(Crossing(float(phi % TWO_PI), over.component,
                                                  under.component, sign, u))
    diagram.crossings.sort(key=lambda c: (c.phi, c.over, c.under))
    diagram.cusps.sort(key=lambda c: (c.component, c.phi))
    return diagram


# -- invariants ---------------------------------------------------------------

@dataclass(frozen=True)
class Invariants:
    rotation: int
    tb: int
    winding: int


def _invariants(diagram, component):
    bad = [t for t in diagram.tangencies]
    if bad:
        raise NonGenericFrontError(f"front tangency at φ = {bad[0]:.9g}", phi=bad[0])
    cusps = diagram.component_cusps(component)
    if len(cusps) % 2:
        raise IntegrityError("odd number of cusps on a closed front")
    down = sum(c.down for c in cusps)
    up = len(cusps) - down
    writhe = sum(c.sign for c in diagram.self_crossings(component))
    return Invariants((down - up) // 2, writhe - len(cusps) // 2,
                      diagram.curves[component].winding)


def classical_invariants(curve):
    """``(rotation, tb, winding)`` of a single Legendrian component."""
    return _invariants(front_diagram(curve), 0)


@dataclass(frozen=True)
class LinkSignature:
    """Classical invariants of two components plus their front interaction.

    ``vertical_order`` is the sign of ``u_0 - u_1`` when the fronts do not
    cross, else 0.
    """

    components: tuple
    crossings: int
    vertical_order: int

    def as_row(self):
        a, b = self.components
        return {"rot0": a.rotation, "tb0": a.tb, "wind0": a.winding,
                "rot1": b.rotation, "tb1": b.tb, "wind1": b.winding,
                "crossings": self.crossings, "vertical_order": self.vertical_order}


def link_signature(curve_a, curve_b, diagram=None):
    """Signature of the two-component link ``(curve_a, curve_b)``."""
    diagram = diagram or front_diagram(curve_a, curve_b)
    comps = (_invariants(diagram, 0), _invariants(diagram, 1))
    n = len(diagram.inter_crossings())
    order = 0
    if n == 0:
        order = _vertical_order(*diagram.curves)
    return LinkSignature(comps, n, order)


def _vertical_order(c0, c1):
    """Sign of ``u_0 - u_1`` at an angle covered by branches of both fronts."""
    for a in _split(c0)[0]:
        for b in _split(c1)[0]:
            for k in range(-2, 3):
                lo, hi = max(a.lo, b.lo + TWO_PI * k), min(a.hi, b.hi + TWO_PI * k)
                if hi > lo:
                    t = 0.5 * (lo + hi)
                    return int(np.sign(a.spline(t) - b.spline(t - TWO_PI * k)))
    raise IntegrityError("fronts share no common angle")


REFERENCE_INVARIANTS = Invariants(0, 0, 1)


def trivial_link_reference(x, y, n=720):
    """Hodograph images of the fibres over two distinct points of ``R²``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.linalg.norm(x - y) == 0.0:
        raise ValueError("reference fibres need distinct base points")
    return fibre_curve(x, n, 0), fibre_curve(y, n, 1)


def reference_signature():
    """Signature shared by every pair of distinct fibres."""
    return LinkSignature((REFERENCE_INVARIANTS, REFERENCE_INVARIANTS), 2, 0)


class LinkVerdict(Enum):
    TRIVIAL = "TrivialClassSignature"
    LINKED = "LinkedSignature"


def unlink_verdict(sig):
    """Compare a two-component signature with the fibre-pair reference.

    This is a discriminator for the supported scenarios, not a
    classification: two winding-one components with the reference classical
    invariants and two front crossings are reported as being in the trivial
    class. The Legendrian classification of such cable links is what makes
    the comparison sound there; it is used as an oracle statement and is not
    implemented.
    """
    if any(c.winding != 1 for c in sig.components):
        raise UnsupportedTopologyError("link signatures need components of winding degree 1")
    ref = reference_signature()
    if sig.components == ref.components and sig.crossings == ref.crossings:
        return LinkVerdict.TRIVIAL
    return LinkVerdict.LINKED


# -- non-negative isotopies ---------------------------------------------------

@dataclass
class IsotopyCheck:
    min_alpha: float
    passed: bool
    alpha: np.ndarray


def nonneg_isotopy_check(family, times=None, tol=1e-8):
    """Discrete ``α(∂F/∂t)`` for a family of matched Legendrian curves.

    For consecutive curves, sample ``j`` of one is matched with sample ``j``
    of the next and ``[(u' - u) - p (φ' - φ)] / Δt`` is evaluated with the
    angle difference wrapped to ``(-π, π]``. The family passes when the
    minimum is at least ``-tol``.
    """
    if isinstance(family, SkyFamily):
        times = family.t
        curves = [sky_to_legendrian(s, check=False) for s in family.skies]
    else:
        curves = list(family)
        if curves and isinstance(curves[0], SkySample):
            curves = [sky_to_legendrian(s, check=False) for s in curves]
    if len(curves) < 2:
        raise ValueError("a family needs at least two curves")
    times = np.linspace(0.0, 1.0, len(curves)) if times is None else np.asarray(times, float)
    if len(times) != len(curves):
        raise ValueError("one time value per curve is required")
    n = len(curves[0])
    if any(len(c) != n for c in curves):
        raise ValueError("family curves must be matched sample by sample")
    alpha = np.empty((len(curves) - 1, n))
    for k in range(len(curves) - 1):
        a, b = curves[k], curves[k + 1]
        dphi = (b.phi - a.phi + np.pi) % TWO_PI - np.pi
        alpha[k] = ((b.u - a.u) - a.p * dphi) / (times[k + 1] - times[k])
    m = float(alpha.min())
    return IsotopyCheck(m, m >= -tol, alpha)


@dataclass
class RigidityRecord:
    passed_check: bool
    starts_fibre: bool
    ends_fibre: bool
    endpoints_equal: bool
    max_deviation: float

    @property
    def holds(self):
        """False only for a non-negative family between fibres that is not constant."""
        if not (self.passed_check and self.starts_fibre and self.ends_fibre):
            return True
        return self.endpoints_equal and self.max_deviation < 1e-8


def fibre_rigidity(family, times=None, tol=1e-8):
    """Check that non-negative families between fibres are constant."""
    check = nonneg_isotopy_check(family, times, tol)
    if isinstance(family, SkyFamily):
        curves = [sky_to_legendrian(s, check=False) for s in family.skies]
    else:
        curves = list(family)
    first, last = curves[0], curves[-1]
    dev = max(float(np.max(np.abs(np.c_[c.phi - first.phi, c.p - first.p, c.u - first.u])))
              for c in curves)
    ends = float(np.max(np.abs(np.c_[last.p - first.p, last.u - first.u])))
    return RigidityRecord(check.passed, is_fibre(first), is_fibre(last), ends < 1e-8, dev)
