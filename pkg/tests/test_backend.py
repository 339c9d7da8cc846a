import os
import subprocess
import sys

import numpy as np
import pytest

from skylink import _backend
from skylink.geometry import conformal_bump

needs_compiled = pytest.mark.skipif("cython" not in _backend.available(),
                                    reason="compiled kernels not built")


def test_fallback_always_available():
    assert "python" in _backend.available()
    assert _backend.get("python").NAME == "python"
    with pytest.raises(ValueError):
        _backend.get("fortran")


def _rays(n=64):
    base = conformal_bump(0.2, 1.0).base
    phi = 2 * np.pi * np.arange(n) / n
    x0 = np.tile([0.7, -0.4], (n, 1))
    dirs = np.c_[np.cos(phi), np.sin(phi)] * np.exp(-base.lam(np.array([0.7, -0.4])))
    return base, x0, dirs


@needs_compiled
def test_propagate_parity():
    base, x0, dirs = _rays()
    out = [_backend.get(k).propagate(base.kernel_kind, base.kernel_params, x0, dirs, -2.5, 1e-12)
           for k in ("cython", "python")]
    np.testing.assert_allclose(out[0][0], out[1][0], atol=1e-10)
    np.testing.assert_allclose(out[0][1], out[1][1], atol=1e-10)
    assert not out[0][2].any() and not out[1][2].any()


@needs_compiled
def test_sphere_propagate_parity():
    base = __import__("skylink.geometry", fromlist=["SphereBase"]).SphereBase(2)
    x0 = np.tile([0.0, 0.0, 1.0], (8, 1))
    phi = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    v0 = np.c_[np.cos(phi), np.sin(phi), np.zeros(8)]
    out = [_backend.get(k).propagate(base.kernel_kind, base.kernel_params, x0, v0, np.pi, 1e-12)[0]
           for k in ("cython", "python")]
    np.testing.assert_allclose(out[0], out[1], atol=1e-10)
    np.testing.assert_allclose(out[0], np.tile([0, 0, -1.0], (8, 1)), atol=1e-8)


@needs_compiled
def test_trace_parity():
    base, x0, dirs = _rays()
    out = [_backend.get(k).trace_approach(base.kernel_kind, base.kernel_params, x0, dirs,
                                          np.array([2.0, 1.0]), 8.0, 1e-10) for k in ("cython", "python")]
    np.testing.assert_array_equal(out[0][3], out[1][3])
    ok = out[0][3] == 0
    np.testing.assert_allclose(out[0][0][ok], out[1][0][ok], atol=1e-9)
    np.testing.assert_allclose(out[0][1][ok], out[1][1][ok], atol=1e-9)


@needs_compiled
def test_union_find_parity(rng):
    nv = 500
    eu, ev = rng.integers(0, nv, 800), rng.integers(0, nv, 800)
    a = _backend.get("cython").union_find(nv, eu, ev)
    b = _backend.get("python").union_find(nv, eu, ev)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


@needs_compiled
def test_reduce_parity(rng):
    cols = [np.sort(rng.choice(60, 3, replace=False)) for _ in range(80)]
    indptr = np.r_[0, np.cumsum([len(c) for c in cols])]
    indices = np.concatenate(cols)
    for _ in range(5):
        target = np.sort(rng.choice(60, 4, replace=False))
        np.testing.assert_array_equal(_backend.get("cython").reduce_z2(indptr, indices, target),
                                      _backend.get("python").reduce_z2(indptr, indices, target))


def test_reduce_against_brute_force(rng):
    k = _backend.get("python")
    cols = [np.sort(rng.choice(12, 2, replace=False)) for _ in range(6)]
    indptr = np.r_[0, np.cumsum([len(c) for c in cols])]
    target = np.array([3, 7, 11])
    red = set(k.reduce_z2(indptr, np.concatenate(cols), target).tolist())
    span = []
    for mask in range(64):
        v = set(target.tolist())
        for j in range(6):
            if mask >> j & 1:
                v ^= set(cols[j].tolist())
        span.append(v)
    # the result lies in target + span and has the smallest possible pivot
    assert red in span
    assert max(red, default=-1) == min(max(v, default=-1) for v in span)


def test_pure_python_selection_by_environment():
    env = dict(os.environ, SKYLINK_PURE_PYTHON="1")
    code = ("import numpy as np, skylink; from skylink.geometry import Minkowski;"
            "from skylink.skies import build_sky, CauchySlice;"
            "s = build_sky(Minkowski(2), CauchySlice(0.0), [1, 2, 3], 64);"
            "q = np.c_[np.cos(s.phi), np.sin(s.phi)];"
            "print(skylink.BACKEND, float(np.abs(s.base - (np.array([1, 2]) - 3 * q)).max()))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out[0] == "python" and float(out[1]) < 1e-9
