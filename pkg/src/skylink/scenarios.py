"""Scenario configuration and experiment runners.

A scenario is one JSON document with the top-level keys ``metric``,
``slice``, ``pairs`` or ``generator``, ``fan``, ``tolerances`` and
``experiment``; unknown keys anywhere are rejected. Every run writes
``results.csv``, ``summary.txt`` and ``fronts/*.svg`` into the output
directory. Work items are processed in index order on a single worker, so
outputs depend only on the configuration and seed.
"""
import json
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import contact, export, genfun
from .causality import Relation, causal_oracle, grid_graph_distance
from .contact import (LinkVerdict, fibre_rigidity, front_diagram, link_signature,
                      nonneg_isotopy_check, sky_to_legendrian, unlink_verdict)
from .errors import ConfigError, NonGenericFrontError, SkylinkError
from .geometry import ConformalBase, Minkowski, RoundSphereProduct, conformal_bump
from .skies import MAX_SAMPLES, CauchySlice, build_sky, sky_family_along_curve

EXPERIMENTS = ("link-verdict", "isotopy-check", "c-minus-sweep", "refocus-demo")
TOP_KEYS = {"metric", "slice", "pairs", "generator", "fan", "tolerances", "experiment"}
DEFAULT_TOLERANCES = {
    "band": 1e-6,                 # causal oracle null band
    "marginal": 1e-3,             # |margin| below this is excluded from statistics
    "distance_agreement": 0.02,   # shooting vs grid-graph distance
    "nonneg": 1e-8,               # non-negativity threshold
    "reversed": 1e-3,             # reversed families must dip below -reversed
    "rigidity": 1e-8,
    "refocus": 1e-4,
    "value_step": 1e-3,
}
METRIC_KEYS = {
    "minkowski": {"kind", "m"},
    "conformal": {"kind", "amplitude", "width", "center"},
    "round_sphere": {"kind", "m"},
}
EXPERIMENT_KEYS = {
    "link-verdict": {"kind", "svg", "cross_check"},
    "isotopy-check": {"kind", "steps", "speed", "duration"},
    "c-minus-sweep": {"kind", "family", "steps", "sigma", "count"},
    "refocus-demo": {"kind", "points"},
}
GENERATOR_KEYS = {"count", "seed", "space", "time"}


@dataclass
class Scenario:
    name: str
    metric_spec: dict
    slice_level: float
    experiment: dict
    fan: int = 720
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    pairs: list = None
    generator: dict = None

    @property
    def seed(self):
        return int(self.generator.get("seed", 0)) if self.generator else 0

    @property
    def kind(self):
        return self.experiment["kind"]

    def metric(self):
        spec = self.metric_spec
        kind = spec["kind"]
        if kind == "minkowski":
            return Minkowski(spec.get("m", 2))
        if kind == "conformal":
            return conformal_bump(spec.get("amplitude", 0.2), spec.get("width", 1.0),
                                  tuple(spec.get("center", (0.0, 0.0))))
        return RoundSphereProduct(spec.get("m", 2))


# -- parsing ------------------------------------------------------------------

def _fail(msg, where):
    raise ConfigError(f"{where}: {msg}")


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        _fail("expected an object", where)
    extra = sorted(set(obj) - set(allowed))
    if extra:
        _fail(f"unknown key(s) {', '.join(extra)}", where)


def _number(v, where, positive=False, integer=False):
    ok = isinstance(v, int) if integer else isinstance(v, (int, float))
    if isinstance(v, bool) or not ok or (positive and v <= 0):
        _fail(f"expected a {'positive ' if positive else ''}{'integer' if integer else 'number'}, got {v!r}", where)
    return v


def _interval(v, where):
    if not (isinstance(v, list) and len(v) == 2 and v[0] < v[1]):
        _fail("expected [low, high] with low < high", where)
    return [float(_number(v[0], where)), float(_number(v[1], where))]


def parse_scenario(text, name="scenario"):
    """Validate a JSON scenario document and return a :class:`Scenario`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{name}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    _check_keys(doc, TOP_KEYS, name)
    for key in ("metric", "slice", "experiment"):
        if key not in doc:
            _fail(f"missing required key '{key}'", name)
    if "pairs" in doc and "generator" in doc:
        _fail("give either 'pairs' or 'generator', not both", name)

    metric = doc["metric"]
    if not isinstance(metric, dict) or metric.get("kind") not in METRIC_KEYS:
        _fail(f"kind must be one of {sorted(METRIC_KEYS)}", "metric")
    _check_keys(metric, METRIC_KEYS[metric["kind"]], "metric")
    if "m" in metric and _number(metric["m"], "metric.m", integer=True) != 2:
        _fail("only m = 2 is supported by the experiments", "metric.m")
    for key in ("amplitude", "width"):
        if key in metric:
            _number(metric[key], f"metric.{key}", positive=(key == "width"))
    if "center" in metric and not (isinstance(metric["center"], list) and len(metric["center"]) == 2):
        _fail("expected two coordinates", "metric.center")

    _check_keys(doc["slice"], {"level"}, "slice")
    level = float(_number(doc["slice"].get("level", 0.0), "slice.level"))

    exp = doc["experiment"]
    if not isinstance(exp, dict) or exp.get("kind") not in EXPERIMENTS:
        _fail(f"kind must be one of {list(EXPERIMENTS)}", "experiment")
    _check_keys(exp, EXPERIMENT_KEYS[exp["kind"]], "experiment")

    fan = _number(doc.get("fan", 720), "fan", positive=True, integer=True)
    if fan < 64:
        _fail("fan must be at least 64", "fan")

    tol = dict(DEFAULT_TOLERANCES)
    if "tolerances" in doc:
        _check_keys(doc["tolerances"], DEFAULT_TOLERANCES, "tolerances")
        for k, v in doc["tolerances"].items():
            tol[k] = float(_number(v, f"tolerances.{k}", positive=True))

    pairs = generator = None
    if "pairs" in doc:
        pairs = doc["pairs"]
        if not isinstance(pairs, list) or not pairs:
            _fail("expected a non-empty list of [event, event]", "pairs")
        for i, pr in enumerate(pairs):
            if not (isinstance(pr, list) and len(pr) == 2 and all(isinstance(e, list) for e in pr)):
                _fail("expected [event, event]", f"pairs[{i}]")
            for e in pr:
                for c in e:
                    _number(c, f"pairs[{i}]")
    if "generator" in doc:
        generator = doc["generator"]
        _check_keys(generator, GENERATOR_KEYS, "generator")
        _number(generator.get("count", 1), "generator.count", positive=True, integer=True)
        seed = generator.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            _fail("seed must be an unsigned 64-bit integer", "generator.seed")
        for key in ("space", "time"):
            if key in generator:
                generator[key] = _interval(generator[key], f"generator.{key}")
    if exp["kind"] == "link-verdict" and pairs is None and generator is None:
        _fail("link-verdict needs 'pairs' or 'generator'", name)
    return Scenario(name, metric, level, exp, fan, tol, pairs, generator)


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text, os.path.basename(path))


def shipped_scenarios():
    """``(name, text)`` of the reference scenarios bundled with the package."""
    root = resources.files("skylink") / "data" / "scenarios"
    return [(p.name, p.read_text(encoding="utf-8"))
            for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".json")]


# -- running ------------------------------------------------------------------

@dataclass
class RunResult:
    scenario: Scenario
    rows: list
    fields: list
    passed: int
    failed: int
    excluded: int
    notes: list

    @property
    def ok(self):
        return self.failed == 0


def _events(sc, rng, count):
    dim = 2
    space = sc.generator.get("space", [-5.0, 5.0])
    time = sc.generator.get("time", space)
    out = np.empty((count, 2, dim + 1))
    for i in range(count):
        for j in range(2):
            out[i, j, :dim] = rng.uniform(*space, dim)
            out[i, j, dim] = rng.uniform(*time)
    return out


def _fmt_event(e):
    return " ".join(f"{c:.12g}" for c in e)


def _signature_with_refinement(metric, slc, x, y, fan):
    n = fan
    while True:
        a = sky_to_legendrian(build_sky(metric, slc, x, n), 0)
        b = sky_to_legendrian(build_sky(metric, slc, y, n), 1)
        try:
            diagram = front_diagram(a, b)
            return link_signature(a, b, diagram), diagram, n
        except NonGenericFrontError:
            if 2 * n > MAX_SAMPLES:
                raise
            n *= 2


def run_link_verdict(sc, out_dir):
    metric = sc.metric()
    slc = CauchySlice(sc.slice_level)
    tol = sc.tolerances
    if sc.pairs is not None:
        pairs = np.array(sc.pairs, dtype=float)
    else:
        rng = np.random.default_rng(sc.seed)
        pairs = _events(sc, rng, int(sc.generator.get("count", 1)))
    cross = sc.experiment.get("cross_check", isinstance(metric.base, ConformalBase))
    n_svg = int(sc.experiment.get("svg", 4))
    rows, passed, failed, excluded, notes = [], 0, 0, 0, []
    for i, (x, y) in enumerate(pairs):
        row = {"index": i, "x": _fmt_event(x), "y": _fmt_event(y)}
        try:
            v = causal_oracle(metric, x, y, band=tol["band"])
        except SkylinkError as exc:
            raise type(exc)(f"{sc.name}, pair {i}: {exc}") from exc
        marginal = v.relation is Relation.MARGINAL or abs(v.margin) <= tol["marginal"]
        row.update(relation=v.relation.value, order=v.order.value if v.order else "",
                   margin=v.margin, distance=v.distance, marginal=marginal)
        if cross and v.distance > 0:
            g = grid_graph_distance(metric.base, x[:-1], y[:-1])
            rel = (g - v.distance) / v.distance
            row.update(distance_graph=g, distance_rel_diff=rel)
            if abs(rel) > tol["distance_agreement"]:
                notes.append(f"pair {i}: distance methods differ by {rel:.4f}")
                row["agree"] = False
        try:
            sig, diagram, n_used = _signature_with_refinement(metric, slc, x, y, sc.fan)
        except NonGenericFrontError as exc:
            row.update(verdict="tangent", agree=False)
            if marginal:
                excluded += 1
            else:
                failed += 1
                notes.append(f"pair {i}: unresolved front tangency at φ = {exc.phi}")
            rows.append(row)
            continue
        except SkylinkError as exc:
            raise type(exc)(f"{sc.name}, pair {i}: {exc}") from exc
        verdict = unlink_verdict(sig)
        row.update(sig.as_row())
        row.update(fan=n_used, verdict=verdict.value)
        if v.relation.causal:
            agree = verdict is LinkVerdict.LINKED and sig.crossings == 0
        else:
            agree = verdict is LinkVerdict.TRIVIAL and sig.crossings == 2
        agree = agree and row.get("agree", True)
        row["agree"] = agree
        if marginal:
            excluded += 1
        elif agree:
            passed += 1
        else:
            failed += 1
            notes.append(f"pair {i}: oracle {v.relation.value} but {verdict.value} "
                         f"with {sig.crossings} crossings")
        if i < n_svg and out_dir is not None:
            export.emit_front_svg(diagram, os.path.join(out_dir, "fronts", f"pair-{i:04d}.svg"),
                                  title=f"pair {i}: {v.relation.value}")
        rows.append(row)
    fields = ["index", "x", "y", "relation", "order", "margin", "distance", "marginal",
              "distance_graph", "distance_rel_diff", *export.SIGNATURE_FIELDS, "fan",
              "verdict", "agree"]
    return RunResult(sc, rows, fields, passed, failed, excluded, notes)


def random_timelike_curve(rng, metric, space, duration, speed):
    """Past-directed timelike curve ``s ↦ (x0 + a s + b s², t0 - duration·s)``.

    The spatial speed stays below ``speed`` times the local light speed of
    the spatial metric.
    """
    x0 = rng.uniform(*space, 2)
    t0 = rng.uniform(0.0, duration)
    base = metric.base
    c = float(np.exp(-base.amplitude)) if isinstance(base, ConformalBase) and base.amplitude > 0 else 1.0
    vmax = speed * c * duration
    d1 = rng.normal(size=2)
    d2 = rng.normal(size=2)
    a = d1 / np.linalg.norm(d1) * rng.uniform(0, 0.5) * vmax
    b = d2 / np.linalg.norm(d2) * rng.uniform(0, 0.25) * vmax

    def gamma(s):
        return np.r_[x0 + a * s + b * s * s, t0 - duration * s]

    return gamma


def run_isotopy_check(sc, out_dir):
    metric = sc.metric()
    slc = CauchySlice(sc.slice_level)
    tol = sc.tolerances
    gen = sc.generator or {}
    rng = np.random.default_rng(sc.seed)
    count = int(gen.get("count", 10))
    space = gen.get("space", [-2.0, 2.0])
    steps = int(sc.experiment.get("steps", 16))
    duration = float(sc.experiment.get("duration", 1.5))
    speed = float(sc.experiment.get("speed", 0.9))
    rows, passed, failed, notes = [], 0, 0, []
    families = []
    for i in range(count):
        gamma = random_timelike_curve(rng, metric, space, duration, speed)
        families.append(("curve", gamma))
    # fibre-to-fibre families: constant curves at points on the slice
    for i in range(2):
        p = np.r_[rng.uniform(*space, 2), sc.slice_level]
        families.append(("fibre", lambda s, p=p: p))
    for i, (kind, gamma) in enumerate(families):
        fam = sky_family_along_curve(metric, slc, gamma, sc.fan, steps)
        fwd = nonneg_isotopy_check(fam, tol=tol["nonneg"])
        rev_events = fam.events[::-1]
        rev = sky_family_along_curve(metric, slc, rev_events, sc.fan)
        back = nonneg_isotopy_check(rev, tol=tol["nonneg"])
        first = sky_to_legendrian(fam.skies[0], check=False)
        last = sky_to_legendrian(fam.skies[-1], check=False)
        differ = float(np.max(np.abs(np.r_[first.u - last.u, first.p - last.p]))) > tol["rigidity"]
        rig = fibre_rigidity(fam, tol=tol["nonneg"])
        ok = fwd.passed and rig.holds
        if differ:
            ok = ok and back.min_alpha <= -tol["reversed"]
        rows.append({"index": i, "kind": kind, "start": _fmt_event(fam.events[0]),
                     "end": _fmt_event(fam.events[-1]), "min_alpha": fwd.min_alpha,
                     "passed": fwd.passed, "reversed_min_alpha": back.min_alpha,
                     "endpoints_differ": differ, "starts_fibre": rig.starts_fibre,
                     "ends_fibre": rig.ends_fibre, "rigidity": rig.holds, "ok": ok})
        if ok:
            passed += 1
        else:
            failed += 1
            notes.append(f"family {i}: forward min {fwd.min_alpha:.3g}, reversed min {back.min_alpha:.3g}")
        if i < 2 and out_dir is not None:
            d = front_diagram(first, last)
            export.emit_front_svg(d, os.path.join(out_dir, "fronts", f"family-{i:04d}.svg"),
                                  title=f"family {i}: first and last fronts")
    fields = ["index", "kind", "start", "end", "min_alpha", "passed", "reversed_min_alpha",
              "endpoints_differ", "starts_fibre", "ends_fibre", "rigidity", "ok"]
    return RunResult(sc, rows, fields, passed, failed, 0, notes)


def sweep_families(kind, rng, count=10, sigma=1):
    """Named families ``t ↦ GenFamily`` whose t-derivative is non-negative."""
    cos = genfun.TrigPoly(0.0, [1.0])
    if kind == "shift":
        return [("shift", lambda t: genfun.GenFamily(cos + t, sigma))]
    if kind == "cos-decay":
        return [("cos-decay", lambda t: genfun.GenFamily(cos.scale(1.0 - t), sigma))]
    if kind == "zero-section":
        return [("zero-section", lambda t: genfun.GenFamily(genfun.TrigPoly(), sigma))]
    if kind == "random":
        fams = []
        for i in range(count):
            f = genfun.TrigPoly.random(rng)
            g = genfun.TrigPoly.random(rng, harmonics=3, scale=1.0)
            g = g + (g.bound() - g.a0)    # g ≥ 0 everywhere
            fams.append((f"random-{i}", lambda t, f=f, g=g: genfun.GenFamily(f + g.scale(t), sigma)))
        return fams
    raise ConfigError(f"experiment.family: unknown family {kind!r}")


def run_c_minus_sweep(sc, out_dir):
    rng = np.random.default_rng(sc.seed)
    kind = sc.experiment.get("family", "shift")
    steps = int(sc.experiment.get("steps", 10))
    sigma = int(sc.experiment.get("sigma", 1))
    if sigma not in (1, -1):
        raise ConfigError("experiment.sigma: expected 1 or -1")
    count = int(sc.experiment.get("count", 10))
    rows, passed, failed, notes = [], 0, 0, []
    for name, fam in sweep_families(kind, rng, count, sigma):
        res = genfun.monotonicity_harness(fam, steps=steps, value_step=sc.tolerances["value_step"])
        for t, c, st in zip(res.t, res.values, res.steps):
            rows.append({"family": name, "t": t, "c_minus": c, "value_step": st,
                         "nondecreasing": res.nondecreasing})
        if res.nondecreasing:
            passed += 1
        else:
            failed += 1
            notes.append(f"family {name}: c_minus decreased")
    fields = ["family", "t", "c_minus", "value_step", "nondecreasing"]
    return RunResult(sc, rows, fields, passed, failed, 0, notes)


def run_refocus_demo(sc, out_dir):
    metric = sc.metric()
    if not isinstance(metric, RoundSphereProduct):
        raise ConfigError("refocus-demo needs metric kind 'round_sphere'")
    slc = CauchySlice(sc.slice_level)
    pts = sc.experiment.get("points")
    if pts is None:
        rng = np.random.default_rng(sc.seed)
        count = int((sc.generator or {}).get("count", 4))
        pts = rng.normal(size=(count, 3))
    rows, passed, failed, notes = [], 0, 0, []
    for i, p in enumerate(np.asarray(pts, dtype=float)):
        p = p / np.linalg.norm(p)
        sky = build_sky(metric, slc, np.r_[p, sc.slice_level + np.pi], sc.fan)
        dev = float(np.max(np.linalg.norm(sky.base + p, axis=1)))
        ok = dev < sc.tolerances["refocus"]
        rows.append({"index": i, "point": _fmt_event(p), "max_deviation": dev, "ok": ok})
        passed += ok
        failed += not ok
        if not ok:
            notes.append(f"point {i}: deviation {dev:.3g}")
    return RunResult(sc, rows, ["index", "point", "max_deviation", "ok"], passed, failed, 0, notes)


RUNNERS = {
    "link-verdict": run_link_verdict,
    "isotopy-check": run_isotopy_check,
    "c-minus-sweep": run_c_minus_sweep,
    "refocus-demo": run_refocus_demo,
}


def run_scenario(sc, out_dir, seed=None, fan=None):
    """Run a parsed scenario, writing results into ``out_dir``."""
    if seed is not None:
        sc.generator = dict(sc.generator or {}, seed=int(seed))
    if fan is not None:
        if fan < 64:
            raise ConfigError("fan must be at least 64")
        sc.fan = int(fan)
    if out_dir is not None:
        os.makedirs(os.path.join(out_dir, "fronts"), exist_ok=True)
    res = RUNNERS[sc.kind](sc, out_dir)
    if out_dir is not None:
        meta = {"scenario": sc.name, "experiment": sc.kind, "seed": sc.seed, "fan": sc.fan}
        export.write_csv(os.path.join(out_dir, "results.csv"), res.rows, res.fields, "results", meta)
        with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write(summary_text(res))
    return res


def summary_text(res):
    sc = res.scenario
    lines = [f"scenario: {sc.name}", f"experiment: {sc.kind}", f"metric: {sc.metric_spec['kind']}",
             f"seed: {sc.seed}", f"fan: {sc.fan}", f"passed: {res.passed}",
             f"failed: {res.failed}", f"excluded: {res.excluded}",
             f"status: {'PASS' if res.ok else 'FAIL'}"]
    lines += [f"note: {n}" for n in res.notes]
    return "\n".join(lines) + "\n"
