import json
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from skylink import cli, export
from skylink.contact import fibre_curve, front_diagram, sky_to_legendrian, trivial_link_reference
from skylink.errors import CapabilityError, ConfigError
from skylink.scenarios import parse_scenario, run_scenario, shipped_scenarios
from skylink.skies import CauchySlice, build_sky

NS = "{http://www.w3.org/2000/svg}"


def _classes(svg, tag):
    root = ET.fromstring(svg)
    return [el.get("class", "") for el in root.iter(NS + tag)]


def test_svg_reference_pair():
    svg = export.front_svg(front_diagram(*trivial_link_reference((0, 0), (1, 0))))
    circles = _classes(svg, "circle")
    assert circles.count("crossing") == 2
    paths = _classes(svg, "path")
    assert any("component-0" in c for c in paths) and any("component-1" in c for c in paths)


def test_svg_chronological_pair(flat):
    s = CauchySlice(0.0)
    a = sky_to_legendrian(build_sky(flat, s, [0, 0, 0], 256), 0)
    b = sky_to_legendrian(build_sky(flat, s, [0.3, 0, 1], 256), 1)
    svg = export.front_svg(front_diagram(a, b))
    assert "crossing" not in _classes(svg, "circle")


def test_svg_single_fibre(tmp_path):
    path = export.emit_front_svg(front_diagram(fibre_curve((1.0, 0.5))), tmp_path / "f.svg")
    svg = open(path).read()
    assert _classes(svg, "circle") == []
    assert len(_classes(svg, "path")) == 1


def test_csv_roundtrip(tmp_path):
    rows = [{"a": 1, "b": 0.1, "c": True}, {"a": 2, "b": np.float64(1e-17), "c": False}]
    path = export.write_csv(tmp_path / "t.csv", rows, ["a", "b", "c"], "demo", {"seed": 7})
    text = open(path).read()
    assert text.splitlines()[0] == "# skylink demo v1 seed=7"
    back = export.read_csv(path)
    assert back[1] == {"a": "2", "b": "1e-17", "c": "0"}
    assert float(back[0]["b"]) == 0.1


def _config(**over):
    doc = {
        "metric": {"kind": "minkowski", "m": 2},
        "slice": {"level": 0.0},
        "generator": {"count": 20, "seed": 11, "space": [-5, 5], "time": [-5, 5]},
        "fan": 256,
        "tolerances": {"marginal": 1e-3},
        "experiment": {"kind": "link-verdict", "svg": 2},
    }
    doc.update(over)
    return json.dumps(doc, indent=1)


@pytest.mark.parametrize("change, field", [
    ({"colour": 1}, "colour"),
    ({"metric": {"kind": "minkowski", "m": 2, "mass": 1}}, "metric"),
    ({"tolerances": {"bnad": 1e-6}}, "tolerances"),
    ({"experiment": {"kind": "link-verdict", "svgs": 1}}, "experiment"),
    ({"generator": {"count": 3, "sed": 1}}, "generator"),
])
def test_unknown_keys_rejected(change, field):
    with pytest.raises(ConfigError, match=field):
        parse_scenario(_config(**change))


@pytest.mark.parametrize("change, where", [
    ({"metric": {"kind": "hyperbolic"}}, "metric"),
    ({"fan": 10}, "fan"),
    ({"fan": 100.5}, "fan"),
    ({"generator": {"seed": -1}}, "generator.seed"),
    ({"generator": {"space": [1, 0]}}, "generator.space"),
    ({"experiment": {"kind": "dance"}}, "experiment"),
    ({"tolerances": {"band": -1}}, "tolerances.band"),
])
def test_bad_values_rejected(change, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        parse_scenario(_config(**change))


def test_syntax_error_reports_line():
    text = _config().replace('"fan": 256', '"fan": 256,,')
    with pytest.raises(ConfigError, match="line"):
        parse_scenario(text, "broken.json")


def test_missing_pairs_and_generator():
    doc = json.loads(_config())
    del doc["generator"]
    with pytest.raises(ConfigError, match="pairs"):
        parse_scenario(json.dumps(doc))


def test_run_is_byte_identical(tmp_path):
    a = run_scenario(parse_scenario(_config(), "s.json"), str(tmp_path / "a"))
    b = run_scenario(parse_scenario(_config(), "s.json"), str(tmp_path / "b"))
    assert a.ok and a.passed + a.excluded == 20
    for name in ("results.csv", "summary.txt"):
        assert open(tmp_path / "a" / name, "rb").read() == open(tmp_path / "b" / name, "rb").read()
    assert "seed=11" in open(tmp_path / "a" / "results.csv").readline()
    assert "seed: 11" in open(tmp_path / "a" / "summary.txt").read()
    assert sorted(os.listdir(tmp_path / "a" / "fronts")) == ["pair-0000.svg", "pair-0001.svg"]


def test_seed_override_changes_pairs(tmp_path):
    run_scenario(parse_scenario(_config()), str(tmp_path / "a"))
    run_scenario(parse_scenario(_config()), str(tmp_path / "b"), seed=12)
    ra, rb = export.read_csv(tmp_path / "a" / "results.csv"), export.read_csv(tmp_path / "b" / "results.csv")
    assert ra[0]["x"] != rb[0]["x"]
    assert "seed=12" in open(tmp_path / "b" / "results.csv").readline()


def test_explicit_pairs(tmp_path):
    doc = json.loads(_config())
    del doc["generator"]
    doc["pairs"] = [[[0, 0, 0], [0, 0, 1]], [[0, 0, 0], [2, 0, 1]], [[0, 0, 0], [1, 0, 1]]]
    res = run_scenario(parse_scenario(json.dumps(doc)), str(tmp_path))
    rows = export.read_csv(tmp_path / "results.csv")
    assert [r["verdict"] for r in rows[:2]] == ["LinkedSignature", "TrivialClassSignature"]
    assert rows[2]["marginal"] == "1"
    assert res.passed == 2 and res.excluded == 1 and res.ok


def test_capability_error_has_context(tmp_path):
    doc = json.loads(_config(metric={"kind": "round_sphere"}))
    del doc["generator"]
    doc["pairs"] = [[[0, 0, 1, 0], [1, 0, 0, 1]]]
    with pytest.raises(CapabilityError, match="pair 0"):
        run_scenario(parse_scenario(json.dumps(doc), "sphere.json"), str(tmp_path))


def test_refocus_needs_sphere(tmp_path):
    with pytest.raises(ConfigError):
        run_scenario(parse_scenario(_config(experiment={"kind": "refocus-demo"})), str(tmp_path))


def test_shipped_scenarios_parse():
    names = [n for n, _ in shipped_scenarios()]
    assert len(names) >= 5
    kinds = {parse_scenario(t, n).kind for n, t in shipped_scenarios()}
    assert kinds == {"link-verdict", "isotopy-check", "c-minus-sweep", "refocus-demo"}


def test_cli_run(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(_config())
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--seed", "5", "--fan", "128"]) == 0
    assert "seed=5 fan=128" in open(out / "results.csv").readline()
    assert "failed" in capsys.readouterr().out
    assert "status: PASS" in open(out / "summary.txt").read()


def test_cli_bad_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(_config(extra=1))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "extra" in capsys.readouterr().err


def test_cli_rejects_bad_seed(tmp_path):
    with pytest.raises(SystemExit):
        cli.main(["run", "--config", "x", "--out", "y", "--seed", str(2**64)])


@pytest.mark.slow
def test_cli_verify(tmp_path, capsys):
    assert cli.main(["verify", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    for name, _ in shipped_scenarios():
        summary = open(tmp_path / name[:-5] / "summary.txt").read()
        assert "failed: 0" in summary
