import numpy as np
import pytest

from skylink.errors import DomainError
from skylink.genfun import (FiltrationComplex, GenFamily, Perturbation, TrigPoly, c_minus,
                            critical_points, generated_legendrian, genfun_for_front,
                            monotonicity_harness)

COS = TrigPoly(0.0, [1.0])


def _min_f(f, n=200_000):
    return float(f(2 * np.pi * np.arange(n) / n).min())


def test_trig_poly_derivatives():
    f = TrigPoly(0.5, [1.0, -0.2], [0.3, 0.7])
    q = np.linspace(0, 6, 50)
    h = 1e-6
    np.testing.assert_allclose(f.deriv(q), (f(q + h) - f(q - h)) / (2 * h), atol=1e-8)
    np.testing.assert_allclose(f.deriv(q, 2), (f.deriv(q + h) - f.deriv(q - h)) / (2 * h), atol=1e-7)
    assert np.max(np.abs(f(q))) <= f.bound()


@pytest.mark.parametrize("sigma", [1, -1])
def test_cosine_critical_points(sigma):
    cps = critical_points(GenFamily(COS, sigma))
    got = sorted((round(c.q, 9), c.xi, c.value, c.index) for c in cps)
    idx0, idxpi = (1, 0) if sigma == 1 else (2, 1)
    assert got[0][:3] == (0.0, 0.0, 1.0) and got[0][3] == idx0
    assert got[1][0] == pytest.approx(np.pi) and got[1][2] == pytest.approx(-1.0)
    assert got[1][3] == idxpi


def test_zero_function_is_degenerate():
    assert critical_points(GenFamily(TrigPoly(), 1)).degenerate


def test_critical_values_match_dense_grid():
    f = TrigPoly(0.0, [1.0, 0.0], [0.0, 0.3])
    cps = critical_points(GenFamily(f, 1))
    assert len(cps) == f.sign_changes_of_derivative(10_000)
    for c in cps:
        assert abs(f.deriv(c.q)) < 1e-12 and c.value == pytest.approx(float(f(c.q)))


def test_perturbed_critical_points_by_newton():
    S = GenFamily(COS, 1, perturbation=Perturbation(TrigPoly(0.0, [0.0], [0.4]), 1.0))
    cps = critical_points(S)
    assert len(cps) >= 2
    for c in cps:
        assert np.max(np.abs(S.gradient(c.q, c.xi))) < 1e-10


def test_radius_too_small():
    with pytest.raises(DomainError):
        GenFamily(TrigPoly(3.0), 1, R=2.0)


def test_quadratic_outside_perturbation_support():
    pert = Perturbation(TrigPoly(0.1, [0.5]), 1.0)
    S = GenFamily(COS, -1, perturbation=pert)
    q = np.linspace(0, 2 * np.pi, 17)
    for xi in (1.0, 1.5, -2.0, S.R):
        np.testing.assert_array_equal(S(q, xi), COS(q) - xi * xi)
    assert S.kappa == 1 and GenFamily(COS, 1).kappa == 0


def test_perturbation_support_checked():
    with pytest.raises(DomainError):
        GenFamily(COS, 1, R=4.0, perturbation=Perturbation(TrigPoly(0.1), 3.0))


def test_c_minus_cosine():
    r = c_minus(GenFamily(COS, 1))
    assert abs(r.c_minus + 1) <= r.value_step
    assert r.kappa == 0


def test_c_minus_zero_section():
    r = c_minus(GenFamily(TrigPoly(), 1))
    assert abs(r.c_minus) <= max(r.value_step, 1e-15)


def test_c_minus_negative_quadratic():
    r = c_minus(GenFamily(COS, -1, R=4.0))
    assert abs(r.c_minus + 1) <= 2 * r.value_step
    assert r.kappa == 1 and r.method == "band-merge"


@pytest.mark.parametrize("sigma", [1, -1])
def test_reduction_agrees_with_union_find(sigma, rng):
    for _ in range(3):
        S = GenFamily(TrigPoly.random(rng, harmonics=3), sigma)
        a = c_minus(S, n_q=512)
        b = c_minus(S, n_q=512, method="reduction")
        assert a.c_minus == b.c_minus


def test_fibre_class_independent_of_base_column(rng):
    S = GenFamily(TrigPoly.random(rng, harmonics=3), -1)
    vals = {c_minus(S, n_q=256, method="reduction", q0_index=i).c_minus for i in (0, 85, 170)}
    assert len(vals) == 1


def test_graph_oracle_random_polys(rng):
    for _ in range(4):
        f = TrigPoly.random(rng)
        m = _min_f(f)
        for sigma in (1, -1):
            r = c_minus(GenFamily(f, sigma))
            assert abs(r.c_minus - m) <= 2 * r.value_step


def test_c_minus_near_a_critical_value(rng):
    for _ in range(3):
        f = TrigPoly.random(rng, harmonics=3)
        for sigma in (1, -1):
            S = GenFamily(f, sigma)
            r = c_minus(S)
            vals = critical_points(S).values
            assert np.min(np.abs(vals - r.c_minus)) <= r.value_step


def test_perturbed_c_minus_near_a_critical_value():
    S = GenFamily(COS, -1, perturbation=Perturbation(TrigPoly(0.0, [0.3], [0.2]), 1.0))
    r = c_minus(S, n_xi=64)
    vals = critical_points(S).values
    step = max(r.value_step, float(np.max(np.abs(np.diff(FiltrationComplex(S, r.n_q, 64).values, axis=1)))))
    assert np.min(np.abs(vals - r.c_minus)) <= step


def test_sublevel_sets_are_monotone():
    S = GenFamily(TrigPoly.random(np.random.default_rng(3)), -1)
    g = FiltrationComplex(S, 128)
    levels = np.linspace(g.values.min(), g.values.max(), 9)
    subs = [g.values <= c for c in levels]
    for a, b in zip(subs, subs[1:]):
        assert np.all(b[a])
    assert g.in_A().any()
    assert not FiltrationComplex(GenFamily(S.f, 1), 128).in_A().any()


def test_relative_cycle_lies_below_level():
    S = GenFamily(COS, -1)
    r = c_minus(S)
    path = r.relative_cycle()
    assert np.all(S(path[:, 0], path[:, 1]) <= r.c_minus + 1e-12)
    assert path[0, 1] < 0 < path[-1, 1]
    pt = c_minus(GenFamily(COS, 1)).relative_cycle()
    assert pt.shape == (1, 2)


def test_stabilization_consistency(rng):
    for _ in range(3):
        f = TrigPoly.random(rng, harmonics=3)
        a, b = c_minus(GenFamily(f, 1)), c_minus(GenFamily(f, -1))
        assert abs(a.c_minus - b.c_minus) <= 2 * max(a.value_step, b.value_step)


def test_harness_shift_family():
    res = monotonicity_harness(lambda t: GenFamily(COS + t, 1), steps=10)
    assert res.nondecreasing
    np.testing.assert_allclose(res.values, -1 + res.t, atol=2 * res.steps.max())


def test_harness_constant_family():
    res = monotonicity_harness(lambda t: GenFamily(COS, 1), steps=8)
    assert res.nondecreasing and np.ptp(res.values) == 0.0


def test_harness_decaying_cosine():
    res = monotonicity_harness(lambda t: GenFamily(COS.scale(1 - t), 1), steps=10)
    assert res.nondecreasing
    np.testing.assert_allclose(res.values, -(1 - res.t), atol=2 * res.steps.max() + 1e-12)


def test_harness_detects_decrease():
    res = monotonicity_harness(lambda t: GenFamily(COS - t, 1), steps=8)
    assert not res.nondecreasing


def test_nonnegative_path_from_zero_section(rng):
    g = TrigPoly.random(rng, harmonics=3, scale=1.0)
    g = g + (g.bound() - g.a0)
    res = monotonicity_harness(lambda t: GenFamily(g.scale(t), 1), steps=8)
    assert res.nondecreasing
    assert res.values[0] == pytest.approx(0.0, abs=res.steps[0] + 1e-15)
    # the endpoint of a non-negative path from the zero section has min f >= 0
    assert _min_f(g) >= -2 * res.steps[-1]


def test_zero_section_loop_is_constant():
    res = monotonicity_harness(lambda t: GenFamily(TrigPoly(), 1), steps=8)
    assert np.all(np.abs(res.values) <= res.steps + 1e-15)


def test_generated_legendrian_examples():
    pts = generated_legendrian(genfun_for_front(COS), 64)
    np.testing.assert_allclose(pts[:, 1], -np.sin(pts[:, 0]), atol=1e-15)
    np.testing.assert_allclose(pts[:, 2], np.cos(pts[:, 0]), atol=1e-15)
    zero = generated_legendrian(genfun_for_front(TrigPoly()), 64)
    assert not np.any(zero[:, 1:])


def test_minkowski_front_generating_function():
    xbar, T = np.array([0.6, -0.8]), 0.5
    f = TrigPoly(-T, [xbar[0]], [xbar[1]])
    r = c_minus(genfun_for_front(f))
    assert abs(r.c_minus - (-np.linalg.norm(xbar) - T)) <= 2 * r.value_step
