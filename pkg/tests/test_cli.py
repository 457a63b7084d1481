import json
from pathlib import Path

import pytest
from click.testing import CliRunner
from hypothesis import given, strategies as st

from chaincalc.cli import Scenario, SchemaError, main

ROOT = Path(__file__).resolve().parents[1]
SCEN = ROOT / "scenarios"


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def test_verify_list():
    res = run("verify", "--list")
    assert res.exit_code == 0
    assert "stokes" in res.output and "flow" in res.output


def test_verify_stokes_grade_specific():
    res = run("verify", "stokes", "--n", 3, "--grade", 2)
    assert res.exit_code == 0, res.output
    assert "PASS [stokes] n=3 grade=2" in res.output


def test_verify_is_deterministic():
    a, b = run("verify", "algebra"), run("verify", "algebra")
    strip = lambda s: [l.split(") ")[0] for l in s.splitlines() if l.startswith(("PASS", "FAIL"))]
    assert strip(a.output) == strip(b.output)


def test_verify_unknown_suite():
    assert run("verify", "nope").exit_code == 2


def test_cantor_scenario_reports_one():
    res = run("integrate", "--scenario", SCEN / "cantor_boundary.json")
    assert res.exit_code == 0, res.output
    report = json.loads(res.output[res.output.index("{"):])
    assert abs(report["value"] - 1.0) <= 1e-12


def test_cube_volume_scenario():
    res = run("integrate", "--scenario", SCEN / "cube_volume.json")
    assert res.exit_code == 0, res.output
    assert json.loads(res.output[res.output.index("{"):])["value"] == 3.0


def test_divergence_scenario_two_sided():
    res = run("integrate", "--scenario", SCEN / "divergence_square.json")
    assert res.exit_code == 0, res.output
    rep = json.loads(res.output[res.output.index("{"):])
    assert rep["residual"] <= rep["tol"]


def test_failing_check_exits_one(tmp_path):
    obj = json.loads((SCEN / "cube_volume.json").read_text())
    obj["check"]["expected"] = 4.0
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(obj))
    res = run("integrate", "--scenario", p)
    assert res.exit_code == 1
    assert "residual" in res.output


@pytest.mark.parametrize("mutate", [
    lambda o: o.update(colour="red"),
    lambda o: o["check"].update(tolerance=1),
    lambda o: o.update(depth="deep"),
    lambda o: o.update(domain={"kind": "torus"}),
    lambda o: o.update(ops=["nope"]),
])
def test_schema_violations_exit_two(tmp_path, mutate):
    obj = json.loads((SCEN / "cube_volume.json").read_text())
    mutate(obj)
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(obj))
    assert run("integrate", "--scenario", p).exit_code == 2


def test_malformed_json_exits_two(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run("integrate", "--scenario", p).exit_code == 2


def test_csv_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("integrate", "--scenario", SCEN / "divergence_square.json", "--out", tmp_path / d).exit_code == 0
    assert (tmp_path / "a" / "table.csv").read_bytes() == (tmp_path / "b" / "table.csv").read_bytes()


def test_flow_scenarios(tmp_path):
    for name in ("flow_rotation_segment.json", "reynolds_dilation.json"):
        res = run("flow", "--scenario", SCEN / name, "--out", tmp_path / name)
        assert res.exit_code == 0, res.output
        rows = (tmp_path / name / "table.csv").read_text().splitlines()
        assert rows[0] == "depth_time,residual,ratio" and len(rows) >= 2


def test_norm_command(tmp_path):
    res = run("norm", "--chain", SCEN / "chains" / "dipole.json", "--r", 1)
    assert res.exit_code == 0
    out = json.loads(res.output)
    assert out["lower"] <= out["upper"] and abs(out["upper"] - 0.1) < 1e-12


def test_demo_cantor():
    res = run("demo", "cantor", "--depth", 6)
    assert res.exit_code == 0, res.output


def test_signs():
    res = run("signs", "--n", 2)
    assert res.exit_code == 0 and "e12" in res.output


scenario_keys = st.fixed_dictionaries({}, optional={
    "name": st.text(max_size=8),
    "seed": st.integers(0, 2**31),
    "depth": st.integers(0, 12),
    "r": st.integers(0, 3),
    "domain": st.just({"kind": "cube", "lo": [0, 0], "hi": [1, 1]}),
    "ops": st.lists(st.sampled_from(["boundary", "perp"]), max_size=2),
    "check": st.just({"kind": "value", "expected": 1.0, "tol": 1e-6}),
    "output": st.just({"csv": "t.csv"}),
})


@given(scenario_keys)
def test_scenario_roundtrip(obj):
    sc = Scenario.from_json(obj)
    assert Scenario.from_json(json.loads(json.dumps(sc.to_json()))) == sc
    assert sc.to_json() == obj


@given(st.text(min_size=1, max_size=6).filter(lambda k: k not in Scenario.__dataclass_fields__))
def test_scenario_rejects_unknown_keys(key):
    with pytest.raises(SchemaError):
        Scenario.from_json({key: 1})
