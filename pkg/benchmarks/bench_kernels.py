"""Compare the compiled and pure-Python kernel backends.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``.
Each workload is timed with both backends (best of ``N`` runs) and the
results are checked to agree before the timings are reported.
"""
import argparse
import time

import numpy as np

from skylink import _backend
from skylink.geometry import conformal_bump


def _best(fn, repeat):
    out, best = None, np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def workloads():
    base = conformal_bump(0.2, 1.0).base
    n = 720
    phi = 2 * np.pi * np.arange(n) / n
    x0 = np.tile([0.7, -0.4], (n, 1))
    dirs = np.c_[np.cos(phi), np.sin(phi)] * np.exp(-base.lam(np.array([0.7, -0.4])))
    rng = np.random.default_rng(0)
    nv = 200_000
    eu = rng.integers(0, nv, 3 * nv)
    ev = rng.integers(0, nv, 3 * nv)
    cols = [np.sort(rng.choice(4000, 3, replace=False)) for _ in range(4000)]
    indptr = np.r_[0, np.cumsum([len(c) for c in cols])]
    indices = np.concatenate(cols)
    target = np.sort(rng.choice(4000, 5, replace=False))
    return {
        "propagate (720 conformal rays, s = 3)":
            lambda k: k.propagate(base.kernel_kind, base.kernel_params, x0, dirs, -3.0, 1e-12)[0],
        "trace_approach (720 rays)":
            lambda k: k.trace_approach(base.kernel_kind, base.kernel_params, x0, dirs,
                                       np.array([2.0, 1.0]), 8.0, 1e-10)[1],
        "union_find (200k vertices, 600k edges)":
            lambda k: k.union_find(nv, eu, ev)[0],
        "reduce_z2 (4000 columns)":
            lambda k: k.reduce_z2(indptr, indices, target),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    names = _backend.available()
    print(f"backends: {', '.join(names)}")
    print(f"{'workload':42s}" + "".join(f"{n:>12s}" for n in names) + "     speedup")
    for label, fn in workloads().items():
        times, outs = [], []
        for name in names:
            t, out = _best(lambda: fn(_backend.get(name)), args.repeat)
            times.append(t)
            outs.append(np.asarray(out))
        if len(outs) == 2:
            agree = outs[0].shape == outs[1].shape and np.allclose(outs[0], outs[1], atol=1e-9)
            if not agree:
                raise SystemExit(f"backends disagree on {label}")
        speed = f"{times[-1] / times[0]:10.1f}x" if len(times) == 2 else ""
        print(f"{label:42s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
