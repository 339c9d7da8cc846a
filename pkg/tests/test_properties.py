import numpy as np
from hypothesis import assume, given, settings, strategies as st

from skylink.causality import Relation, causal_oracle
from skylink.contact import (LinkVerdict, hodograph_arrays, inverse_hodograph_arrays, jet_graph,
                             legendrian_residual, link_signature, sky_to_legendrian, unlink_verdict)
from skylink.genfun import GenFamily, TrigPoly, c_minus
from skylink.geometry import Minkowski
from skylink.skies import CauchySlice, build_sky

coord = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
event = st.tuples(coord, coord, coord).map(np.array)
coef = st.floats(-2, 2, allow_nan=False)
M = Minkowski(2)
T0 = CauchySlice(0.0)


@settings(max_examples=60, deadline=None)
@given(event, event)
def test_flat_verdict_matches_oracle(x, y):
    v = causal_oracle(M, x, y)
    assume(abs(v.margin) > 1e-3)
    a = sky_to_legendrian(build_sky(M, T0, x, 360), 0)
    b = sky_to_legendrian(build_sky(M, T0, y, 360), 1)
    sig = link_signature(a, b)
    assert sig.crossings % 2 == 0
    if v.relation is Relation.CHRONOLOGICAL:
        assert unlink_verdict(sig) is LinkVerdict.LINKED and sig.crossings == 0
        # the later event's front lies below
        assert sig.vertical_order == (1 if x[-1] < y[-1] else -1)
    else:
        assert unlink_verdict(sig) is LinkVerdict.TRIVIAL and sig.crossings == 2


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(coord, coord, st.floats(0, 2 * np.pi)), min_size=1, max_size=50))
def test_hodograph_round_trip(rows):
    a = np.array(rows)
    p, u = hodograph_arrays(a[:, :2], a[:, 2])
    assert np.max(np.abs(inverse_hodograph_arrays(a[:, 2], p, u) - a[:, :2])) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.lists(coef, min_size=7, max_size=7))
def test_graph_fronts_are_legendrian(c):
    f = TrigPoly(c[0], c[1:4], c[4:7])
    curve = jet_graph(f, f.deriv, 720)
    assert legendrian_residual(curve) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.lists(coef, min_size=5, max_size=5), st.floats(-3, 3), st.sampled_from([1, -1]))
def test_c_minus_shift_equivariant(c, shift, sigma):
    f = TrigPoly(c[0], c[1:3], c[3:5])
    a = c_minus(GenFamily(f, sigma, R=8.0), n_q=512)
    b = c_minus(GenFamily(f + shift, sigma, R=8.0), n_q=512)
    assert abs(b.c_minus - a.c_minus - shift) < 1e-9
