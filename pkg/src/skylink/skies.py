"""Skies of events as sampled sets of unit cotangent points on a Cauchy slice.

A sky is the set of null geodesics through an event. Each geodesic is
identified with the point where it meets the slice ``{t = t0}`` together with
the co-oriented hyperplane ``ker g(γ', ·)``, represented by the ḡ-unit vector
``q`` dual to that covector.
"""
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import (DomainError, IntegrationError, IntegrityError, NumericalError,
                     RangeError)
from .geometry import (Causality, ConformalBase, SphereBase, classify_vector,
                       geodesic_flow)

SKY_TOL = 1e-12
MIN_SAMPLES = 64
DEFAULT_SAMPLES = 720
MAX_SAMPLES = 5760


@dataclass(frozen=True)
class CauchySlice:
    """The level set ``{t = level}`` of a product chart."""

    level: float = 0.0


@dataclass(frozen=True)
class STStarPoint:
    """Point of the unit cotangent bundle: base point and ḡ-unit direction ``q``."""

    base: np.ndarray
    q: np.ndarray


@dataclass
class SkySample:
    """Sky of ``event`` sampled at ``n`` uniformly spaced launch angles.

    Row ``k`` of ``base``/``q`` belongs to the null geodesic launched at
    angle ``phi[k]`` in the orthonormal frame of the event's spatial metric.
    """

    metric: object
    slice: CauchySlice
    event: np.ndarray
    phi: np.ndarray
    base: np.ndarray
    q: np.ndarray

    @property
    def n(self):
        return len(self.phi)

    def __len__(self):
        return self.n

    def __getitem__(self, k):
        return STStarPoint(self.base[k], self.q[k])

    @property
    def covector(self):
        """Covectors ``ḡ q`` at the base points (rows)."""
        base = self.metric.base
        if isinstance(base, ConformalBase):
            dx = self.base - base.center
            lam = base.amplitude * np.exp(-np.sum(dx * dx, axis=1) / base.width**2)
            return np.exp(2 * lam)[:, None] * self.q
        return self.q.copy()


@dataclass
class SkyFamily:
    """Skies along a sampled curve; ``classes[k]`` classifies segment ``k``."""

    t: np.ndarray
    events: np.ndarray
    skies: list
    classes: list = field(default_factory=list)

    def __len__(self):
        return len(self.skies)


# -- slice crossings ----------------------------------------------------------

def cauchy_intersection(metric, path, slice, s_budget=100.0):
    """Point and velocity where ``path`` meets ``{t = slice.level}``.

    The crossing is bracketed on the accepted steps and refined on the dense
    output. When the path stops short of the slice it is extended, up to an
    affine budget ``s_budget``, before :class:`RangeError` is raised.
    """
    t0 = slice.level
    ti = metric.time_index

    def tcoord(x):
        return x[ti]

    s = path.locate(tcoord, t0)
    if s is None:
        x_end, v_end = path.endpoint
        if abs(v_end[ti]) < 1e-14:
            raise RangeError("path never reaches the slice: dt/ds vanishes")
        direction = np.sign((t0 - x_end[ti]) * v_end[ti])
        ext = geodesic_flow(metric, x_end, v_end, direction * s_budget, tol=path.tol)
        s = ext.locate(tcoord, t0)
        if s is None:
            raise RangeError(f"no crossing of t = {t0} within affine budget {s_budget}")
        x, v = ext(s)
        return _snap(metric, x, t0), v
    x, v = path(s)
    return _snap(metric, x, t0), v


def _snap(metric, x, t0):
    x = np.array(x, dtype=float)
    if abs(x[-1] - t0) >= 1e-10:
        raise IntegrityError(f"slice crossing missed by {abs(x[-1] - t0):.3g}")
    if isinstance(metric.base, SphereBase):
        x[:-1] /= np.linalg.norm(x[:-1])
    return x


def rho_M(metric, slice, crossing):
    """Unit cotangent point of a future null geodesic crossing the slice.

    The covector ``g(γ', ·)`` restricted to the slice is ``ḡ v̄``; its ḡ-dual
    direction is ``v̄`` itself, normalized to unit length.
    """
    x, v = crossing
    x = metric.check_event(x)
    v = np.asarray(v, dtype=float)
    if abs(x[-1] - slice.level) > 1e-10:
        raise DomainError("crossing event is not on the slice")
    cls = classify_vector(metric, x, v, band=1e-8)
    if cls.kind is not Causality.NULL or not cls.future:
        raise DomainError(f"crossing velocity is {cls.kind.value}, expected future null")
    xs, vs = metric.base.project(x[:-1], v[:-1])
    norm = metric.base.norm(xs, vs)
    if norm < 1e-12:
        raise IntegrityError("degenerate covector restriction on the slice")
    return STStarPoint(xs, vs / norm)


# -- sky construction ---------------------------------------------------------

def launch_directions(metric, event, phi):
    """Spatial ḡ-unit launch vectors at ``event`` for the angles ``phi``."""
    frame = metric.base.frame(np.asarray(event, dtype=float)[:-1])
    return np.cos(phi)[:, None] * frame[0] + np.sin(phi)[:, None] * frame[1]


def _shoot(metric, event, phi, s_end, tol=SKY_TOL):
    base = metric.base
    dirs = launch_directions(metric, event, phi)
    x0 = np.broadcast_to(event[:-1], dirs.shape)
    if s_end == 0.0:
        return np.array(x0, dtype=float), dirs
    xs, vs, status, _ = kernels.propagate(base.kernel_kind, base.kernel_params,
                                          x0, dirs, s_end, tol)
    bad = np.flatnonzero(status != 0)
    if bad.size:
        raise IntegrationError(f"null geodesic at launch angle φ = {phi[bad[0]]:.6g} "
                               f"failed (status {int(status[bad[0]])})")
    for k, p in enumerate(xs):
        if not base.contains(p):
            raise DomainError(f"null geodesic at launch angle φ = {phi[k]:.6g} leaves the chart")
    return xs, vs


def build_sky(metric, slice, x, n=DEFAULT_SAMPLES, tol=SKY_TOL):
    """Sample the sky of event ``x`` on ``slice`` at ``n`` launch angles.

    Since ``dt/ds = 1`` along the future null lifts, every geodesic meets the
    slice at affine parameter ``t0 - t_x`` (backward when the event lies to
    the future of the slice).
    """
    if n < MIN_SAMPLES:
        raise ValueError(f"at least {MIN_SAMPLES} sky samples are required, got {n}")
    if metric.base.manifold_dim != 2:
        raise DomainError("skies are sampled for 2-dimensional Cauchy slices only")
    x = metric.check_event(x)
    phi = 2 * np.pi * np.arange(n) / n
    xs, vs = _shoot(metric, x, phi, slice.level - x[-1], tol)
    norms = np.sqrt(np.einsum("ij,ij->i", vs, vs))
    if isinstance(metric.base, ConformalBase):
        dx = xs - metric.base.center
        norms = norms * np.exp(metric.base.amplitude * np.exp(-np.sum(dx * dx, axis=1)
                                                              / metric.base.width**2))
    if np.any(norms < 1e-12):
        raise IntegrityError("degenerate covector restriction on the slice")
    return SkySample(metric, slice, x, phi, xs, vs / norms[:, None])


def refine_sky(sky):
    """Same sky with twice as many samples (old angles are retained)."""
    if 2 * sky.n > MAX_SAMPLES:
        raise NumericalError(f"sky refinement beyond {MAX_SAMPLES} samples requested")
    return build_sky(sky.metric, sky.slice, sky.event, 2 * sky.n)


def reconstruct_base(sky, k, tol=SKY_TOL):
    """Re-shoot sample ``k`` from the event and return its slice base point."""
    xs, _ = _shoot(sky.metric, sky.event, sky.phi[k:k + 1], sky.slice.level - sky.event[-1], tol)
    return xs[0]


def sky_family_along_curve(metric, slice, curve, n=DEFAULT_SAMPLES, steps=None,
                           continuity=None):
    """Skies of the events of a timelike curve.

    Parameters
    ----------
    curve : callable or array_like
        Either ``γ(t)`` for ``t ∈ [0, 1]`` (sampled at ``steps + 1`` points)
        or an array of events, one per row.
    steps : int, optional
        Number of segments for a callable curve; at least 8.
    continuity : float, optional
        Largest allowed base-point jump between consecutive skies; defaults to
        ``10 * |Δevent| + 1e-9`` per step.

    Each segment must be timelike (either time orientation) or degenerate
    (a constant curve); anything else raises :class:`DomainError` naming the
    segment.
    """
    if callable(curve):
        steps = 16 if steps is None else steps
        if steps < 8:
            raise ValueError("a sky family needs at least 8 steps")
        t = np.linspace(0.0, 1.0, steps + 1)
        events = np.array([curve(s) for s in t], dtype=float)
    else:
        events = np.asarray(curve, dtype=float)
        if len(events) < 9:
            raise ValueError("a sky family needs at least 8 steps")
        t = np.linspace(0.0, 1.0, len(events))
    classes = []
    for k in range(len(events) - 1):
        d = events[k + 1] - events[k]
        if np.dot(d, d) <= 1e-28:
            classes.append(None)
            continue
        cls = classify_vector(metric, events[k], d)
        if cls.kind is not Causality.TIMELIKE:
            raise DomainError(f"curve segment {k} is {cls.kind.value}, expected timelike")
        classes.append(cls)
    skies = [build_sky(metric, slice, e, n) for e in events]
    for k in range(len(skies) - 1):
        jump = float(np.max(np.linalg.norm(skies[k + 1].base - skies[k].base, axis=1)))
        bound = continuity if continuity is not None else \
            10 * float(np.linalg.norm(events[k + 1] - events[k])) + 1e-9
        if jump > bound:
            raise IntegrityError(f"sky fan tears between steps {k} and {k + 1} (jump {jump:.3g})")
    return SkyFamily(t, events, skies, classes)
