import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fronts import figure_eight, swallowtail, two_up_two_down, zigzag
from skylink.contact import (Invariants, LegendrianCurve, LinkVerdict, classical_invariants,
                             fibre_curve, fibre_rigidity, front_diagram, hodograph,
                             hodograph_arrays, inverse_hodograph, inverse_hodograph_arrays,
                             is_fibre, jet_graph, legendrian_residual, link_signature,
                             nonneg_isotopy_check, sky_to_legendrian, trivial_link_reference,
                             unlink_verdict)
from skylink.errors import (CapabilityError, DomainError, IntegrityError, NonGenericFrontError,
                            UnsupportedTopologyError)
from skylink.skies import CauchySlice, STStarPoint, build_sky

T0 = CauchySlice(0.0)
N = 720
PHI = 2 * np.pi * np.arange(N) / N
point = st.tuples(st.floats(-5, 5), st.floats(-5, 5)).map(np.array)


def sky_curve(metric, event, comp=0, n=N):
    return sky_to_legendrian(build_sky(metric, T0, event, n), comp)


# -- hodograph -------------------------------------------------------------------

def test_hodograph_momentum_example():
    np.testing.assert_allclose(hodograph(STStarPoint(np.array([1.0, 0.0]), np.array([1.0, 0.0]))),
                               [0, 0, 1], atol=1e-15)


def test_fibre_over_origin_is_zero_section():
    for phi in np.linspace(0, 2 * np.pi, 7, endpoint=False):
        out = hodograph(STStarPoint(np.zeros(2), np.array([np.cos(phi), np.sin(phi)])))
        np.testing.assert_allclose(out, [phi, 0, 0], atol=1e-15)


def test_hodograph_is_one_jet_graph():
    a, b = 0.7, -1.3
    p, u = hodograph_arrays(np.broadcast_to([a, b], (N, 2)), PHI)
    np.testing.assert_allclose(u, a * np.cos(PHI) + b * np.sin(PHI), atol=1e-14)
    np.testing.assert_allclose(p, -a * np.sin(PHI) + b * np.cos(PHI), atol=1e-14)


def test_inverse_hodograph_examples():
    pt = inverse_hodograph(0.0, 0.0, 1.0)
    np.testing.assert_allclose(pt.base, [1, 0], atol=1e-15)
    np.testing.assert_allclose(pt.q, [1, 0], atol=1e-15)
    pt = inverse_hodograph(1.2, 0.0, 0.0)
    np.testing.assert_allclose(pt.base, [0, 0], atol=1e-15)
    np.testing.assert_allclose(pt.q, [np.cos(1.2), np.sin(1.2)], atol=1e-15)


def test_hodograph_round_trip(rng):
    x = rng.uniform(-10, 10, (10_000, 2))
    phi = rng.uniform(0, 2 * np.pi, 10_000)
    p, u = hodograph_arrays(x, phi)
    back = inverse_hodograph_arrays(phi, p, u)
    assert np.max(np.abs(back - x)) < 1e-12
    p2, u2 = hodograph_arrays(back, phi)
    assert max(np.max(np.abs(p2 - p)), np.max(np.abs(u2 - u))) < 1e-12


def test_hodograph_rejects_non_unit():
    with pytest.raises(ValueError):
        hodograph(STStarPoint(np.zeros(2), np.array([2.0, 0.0])))


def test_fibre_image_derivative(rng):
    for x in rng.uniform(-3, 3, (5, 2)):
        c = fibre_curve(x, 4096)
        # spectral derivative of u along φ
        k = np.fft.rfftfreq(4096, 1 / 4096)
        du = np.fft.irfft(1j * k * np.fft.rfft(c.u), 4096)
        assert np.max(np.abs(du - c.p)) < 1e-10
        assert is_fibre(c)


# -- skies as Legendrians ----------------------------------------------------------

def test_minkowski_sky_front_closed_form(flat):
    c = sky_curve(flat, [1, 2, 3])
    q = np.c_[np.cos(c.phi), np.sin(c.phi)]
    np.testing.assert_allclose(c.u, q @ [1, 2] - 3, atol=1e-9)
    np.testing.assert_allclose(c.p, -np.sin(c.phi) + 2 * np.cos(c.phi), atol=1e-9)


def test_on_slice_sky_is_fibre_graph(flat):
    c = sky_curve(flat, [0.5, -1.0, 0.0])
    np.testing.assert_allclose(c.u, 0.5 * np.cos(c.phi) - np.sin(c.phi), atol=1e-12)
    z = sky_curve(flat, [0.0, 0.0, 0.0])
    assert np.max(np.abs(z.u)) < 1e-15 and np.max(np.abs(z.p)) < 1e-15


@pytest.mark.parametrize("name, event", [("flat", [1.0, 2.0, 3.0]), ("flat", [-2, 1, -4]),
                                         ("bump", [0.5, -0.4, 1.8]), ("bump", [-1, 1, -2])])
def test_legendrian_residual_small(name, event, request):
    c = sky_curve(request.getfixturevalue(name), event)
    assert legendrian_residual(c) < 1e-6


def test_sky_to_legendrian_needs_planar_slice(sphere):
    sky = build_sky(sphere, T0, [0, 0, 1, 1.0], 64)
    with pytest.raises(CapabilityError):
        sky_to_legendrian(sky)


def test_corrupt_sky_rejected(flat):
    sky = build_sky(flat, T0, [0, 0, 1.0], 256)
    sky.base[10] += 0.1
    with pytest.raises(IntegrityError):
        sky_to_legendrian(sky)


def test_non_legendrian_curve_has_large_residual():
    c = LegendrianCurve(PHI, np.zeros(N), np.cos(PHI))
    assert legendrian_residual(c) > 0.5


# -- fronts and crossings ---------------------------------------------------------

def test_zero_section_vs_two_cos():
    d = front_diagram(jet_graph(np.zeros_like, np.zeros_like, N, 0),
                      jet_graph(lambda f: 2 * np.cos(f), lambda f: -2 * np.sin(f), N, 1))
    phis = sorted(c.phi % (2 * np.pi) for c in d.inter_crossings())
    np.testing.assert_allclose(phis, [np.pi / 2, 3 * np.pi / 2], atol=1e-9)


def test_zero_section_vs_constant():
    a = jet_graph(np.zeros_like, np.zeros_like, N, 0)
    b = jet_graph(lambda f: -np.ones_like(f), np.zeros_like, N, 1)
    sig = link_signature(a, b)
    assert sig.crossings == 0 and sig.vertical_order == 1


def test_minkowski_sky_crossings(flat):
    a = sky_curve(flat, [1, 0, 0.5], 0)
    b = sky_curve(flat, [0, 0, 0], 1)
    d = front_diagram(a, b)
    phis = sorted(c.phi % (2 * np.pi) for c in d.inter_crossings())
    np.testing.assert_allclose(phis, [np.pi / 3, 5 * np.pi / 3], atol=1e-7)
    for c in d.inter_crossings():
        # the over strand has the larger slope p = du/dφ
        pa = -np.sin(c.phi)
        over_is_a = pa > 0
        assert (c.over == 0) == over_is_a


def test_crossing_strands_are_transverse(flat, rng):
    for _ in range(10):
        x, y = rng.uniform(-3, 3, (2, 3))
        d = front_diagram(sky_curve(flat, x, 0), sky_curve(flat, y, 1))
        assert len(d.inter_crossings()) % 2 == 0


# -- classical invariants --------------------------------------------------------

def test_graph_invariants():
    c = jet_graph(lambda f: np.cos(f) + 0.3 * np.sin(2 * f), lambda f: -np.sin(f) + 0.6 * np.cos(2 * f))
    assert classical_invariants(c) == Invariants(0, 0, 1)


@pytest.mark.parametrize("event", [[1, 2, 3], [0, 0, 0], [-2, 1, -1]])
def test_minkowski_sky_invariants(flat, event):
    assert classical_invariants(sky_curve(flat, event)) == Invariants(0, 0, 1)


@pytest.mark.parametrize("n", [2000, 8000])
def test_two_up_two_down_fixture(n):
    c = two_up_two_down(n)
    d = front_diagram(c)
    assert sum(cu.down for cu in d.cusps) == 2 and len(d.cusps) == 4
    assert sum(x.sign for x in d.crossings) == -1
    inv = classical_invariants(c)
    assert (inv.rotation, inv.tb) == (0, -3)


def test_more_fixtures():
    assert classical_invariants(figure_eight()) == Invariants(-1, -2, 0)
    assert classical_invariants(swallowtail()) == Invariants(0, 0, 1)
    assert classical_invariants(zigzag()) == Invariants(1, -1, 1)


def test_cusp_count_even_and_legendrian_fixtures():
    for f in (two_up_two_down, figure_eight, swallowtail, zigzag):
        c = f()
        assert legendrian_residual(c) < 1e-6
        assert len(front_diagram(c).cusps) % 2 == 0


def test_tangency_is_reported_with_angle():
    a = jet_graph(np.zeros_like, np.zeros_like, N, 0)
    b = LegendrianCurve(PHI, 0.5 * np.sin(PHI), 0.5 * (1 - np.cos(PHI)), 1)
    with pytest.raises(NonGenericFrontError) as info:
        link_signature(a, b)
    assert info.value.phi == pytest.approx(0.0, abs=1e-6)


# -- link signatures -------------------------------------------------------------

def test_reference_pair_examples():
    a, b = trivial_link_reference((0, 0), (1, 0))
    assert np.max(np.abs(a.u)) == 0.0
    np.testing.assert_allclose(b.u, np.cos(b.phi), atol=1e-15)
    sig = link_signature(a, b)
    assert sig.crossings == 2
    assert unlink_verdict(sig) is LinkVerdict.TRIVIAL


def test_reference_pair_close_points():
    sig = link_signature(*trivial_link_reference((0, 0), (0, 1e-3)))
    assert sig.crossings == 2 and unlink_verdict(sig) is LinkVerdict.TRIVIAL


@settings(max_examples=50, deadline=None)
@given(point, point)
def test_reference_signature_independent_of_points(x, y):
    if np.linalg.norm(x - y) < 1e-2:
        return
    sig = link_signature(*trivial_link_reference(x, y))
    assert sig.crossings == 2 and unlink_verdict(sig) is LinkVerdict.TRIVIAL


def test_reference_needs_distinct_points():
    with pytest.raises(ValueError):
        trivial_link_reference((1, 1), (1, 1))


def test_unrelated_minkowski_skies_trivial(flat):
    sig = link_signature(sky_curve(flat, [0, 0, 0], 0), sky_curve(flat, [2, 0, 1], 1))
    assert unlink_verdict(sig) is LinkVerdict.TRIVIAL


def test_chronological_minkowski_skies_linked(flat):
    a, b = sky_curve(flat, [0, 0, 0], 0), sky_curve(flat, [0.5, 0, 1], 1)
    sig = link_signature(a, b)
    assert unlink_verdict(sig) is LinkVerdict.LINKED
    assert sig.crossings == 0 and sig.vertical_order != 0
    # reordering the pair flips the vertical order
    swapped = link_signature(LegendrianCurve(b.phi, b.p, b.u, 0), LegendrianCurve(a.phi, a.p, a.u, 1))
    assert swapped.vertical_order == -sig.vertical_order


def test_same_curve_twice_rejected(flat):
    c = sky_curve(flat, [0, 0, 1], 0)
    with pytest.raises(DomainError):
        front_diagram(c, LegendrianCurve(c.phi + 2 * np.pi, c.p, c.u, 1))


def test_winding_two_unsupported():
    phi = 4 * np.pi * np.arange(N) / N
    doubled = LegendrianCurve(phi, -0.5 * np.sin(phi / 2), 3 + np.cos(phi / 2), 1)
    assert doubled.winding == 2
    sig = link_signature(fibre_curve((0, 0), N, 0), doubled)
    with pytest.raises(UnsupportedTopologyError):
        unlink_verdict(sig)


# -- non-negative isotopies --------------------------------------------------------

def _graph_family(us):
    return [LegendrianCurve(PHI, np.zeros(N), np.full(N, u)) for u in us]


def test_isotopy_examples():
    t = np.linspace(0, 1, 11)
    up = nonneg_isotopy_check(_graph_family(-(1 - t)), t)
    assert up.passed and up.min_alpha == pytest.approx(1.0)
    const = nonneg_isotopy_check(_graph_family(np.zeros(11)), t)
    assert const.passed and const.min_alpha == 0.0
    down = nonneg_isotopy_check(_graph_family(-t), t)
    assert not down.passed and down.min_alpha == pytest.approx(-1.0)


def test_isotopy_sample_mismatch():
    fam = _graph_family([0, 1])
    fam[1] = LegendrianCurve(PHI[:100], np.zeros(100), np.zeros(100))
    with pytest.raises(ValueError):
        nonneg_isotopy_check(fam)


def test_fibre_rigidity_constant_family():
    fam = [fibre_curve((0.3, 0.4)) for _ in range(5)]
    rec = fibre_rigidity(fam)
    assert rec.passed_check and rec.starts_fibre and rec.ends_fibre and rec.holds


def test_fibre_to_other_fibre_is_never_nonnegative(rng):
    for _ in range(10):
        x, y = rng.uniform(-2, 2, (2, 2))
        fam = [fibre_curve((1 - s) * x + s * y) for s in np.linspace(0, 1, 9)]
        rec = fibre_rigidity(fam)
        assert not rec.passed_check and rec.holds
