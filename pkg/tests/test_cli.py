import json
import subprocess
import sys
from pathlib import Path

import pytest

from emx.cli import main
from emx.scenario import (Model, ScenarioError, parse_scenario, run_scenario, scenario_from_dict)

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = sorted((ROOT / "scenarios").glob("*.json"))
GOLDEN = ROOT / "tests" / "golden"
COMMAND = {"trajectory": "simulate", "spectrum": "stability",
           "equilibrium": "equilibrium", "dispatch": "dispatch"}

MINIMAL = {
    "name": "mini", "model": "continuous",
    "params": {"a": [10], "b": [1], "c": [50], "d": [1], "alpha": [1], "beta": [1],
               "k_price": 1, "h_gain": 1, "lambda0": 30},
    "stepper": {"method": "rk4", "dt": 0.1, "t_end": 1},
    "outputs": ["trajectory"],
}


def _write(tmp_path, obj, name="sc.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return path


def test_minimal_scenario(tmp_path):
    sc = parse_scenario(_write(tmp_path, MINIMAL))
    assert sc.model is Model.CONTINUOUS
    assert sc.params.m == sc.params.n == 1
    assert sc.initial == "equilibrium"


def test_json_error_has_position(tmp_path):
    path = _write(tmp_path, '{\n  "name": "x",\n  "model": oops\n}')
    with pytest.raises(ScenarioError, match=r"sc\.json:3:\d+: invalid JSON"):
        parse_scenario(path)


def test_missing_fractional_section(tmp_path):
    raw = dict(MINIMAL, model="fractional", initial={"S": [0], "D": [0], "lambda": 1})
    with pytest.raises(ScenarioError, match="requires a 'fractional' section"):
        parse_scenario(_write(tmp_path, raw))


@pytest.mark.parametrize("field", ["name", "model"])
def test_missing_top_level(tmp_path, field):
    raw = {k: v for k, v in MINIMAL.items() if k != field}
    with pytest.raises(ScenarioError, match=field):
        parse_scenario(_write(tmp_path, raw))


def test_missing_param_field_named(tmp_path):
    raw = json.loads(json.dumps(MINIMAL))
    del raw["params"]["alpha"]
    with pytest.raises(ScenarioError, match="'params' is missing field 'alpha'"):
        parse_scenario(_write(tmp_path, raw))


def test_model_core_validation_applies(tmp_path):
    raw = json.loads(json.dumps(MINIMAL))
    raw["params"]["alpha"] = [-1]
    with pytest.raises(ScenarioError, match="alpha"):
        parse_scenario(_write(tmp_path, raw))


def test_equilibrium_start_requires_unique(tmp_path):
    raw = json.loads(json.dumps(MINIMAL))
    raw.update(model="balanced_dae", initial="equilibrium")
    raw["params"].update(b=[0], d=[0])
    with pytest.raises(ScenarioError, match="Inconsistent"):
        parse_scenario(_write(tmp_path, raw))


def test_unknown_model_and_output(tmp_path):
    with pytest.raises(ScenarioError, match="unknown model"):
        parse_scenario(_write(tmp_path, dict(MINIMAL, model="quantum")))
    with pytest.raises(ScenarioError, match="unknown outputs"):
        parse_scenario(_write(tmp_path, dict(MINIMAL, outputs=["plot"])))


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_round_trip(path):
    sc = parse_scenario(path)
    again = scenario_from_dict(json.loads(sc.dumps()))
    assert again == sc
    assert again.dumps() == sc.dumps()


def test_trajectory_csv_header(tmp_path):
    written = run_scenario(parse_scenario(_write(tmp_path, MINIMAL)), tmp_path / "out")
    lines = written[0].read_text().splitlines()
    assert lines[0] == "t,S_1,D_1,E,lambda"
    assert len(lines) == 12
    assert lines[1] == "0,20,20,0,30"


def test_spectrum_output_balanced(tmp_path):
    code = main(["stability", "--scenario", str(ROOT / "scenarios" / "balanced_dae.json"),
                 "--out", str(tmp_path)])
    assert code == 0
    rep = json.loads((tmp_path / "balanced_dae.spectrum.json").read_text())
    assert (rep["p"], rep["q"], rep["verdict"]) == (1, 2, "Marginal")


def test_stability_variant_flag(tmp_path):
    code = main(["stability", "--variant", "full_constant", "--scenario",
                 str(ROOT / "scenarios" / "balanced_dae.json"), "--out", str(tmp_path)])
    assert code == 0
    rep = json.loads((tmp_path / "balanced_dae.spectrum.json").read_text())
    assert rep["p"] == 4 and rep["verdict"] == "Unstable"


def test_dispatch_output(tmp_path):
    assert main(["dispatch", "--scenario", str(ROOT / "scenarios" / "dispatch.json"),
                 "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "dispatch.dispatch.json").read_text())["objective"] == 165


def test_exit_code_scenario_error(tmp_path, capsys):
    assert main(["simulate", "--scenario", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    assert "cannot read scenario" in capsys.readouterr().err


def test_exit_code_blow_up(tmp_path, capsys):
    raw = json.loads(json.dumps(MINIMAL))
    raw["params"].update(b=[0], d=[0])
    raw.update(initial={"S": [0], "D": [0], "E": 1, "lambda": 30},
               stepper={"method": "euler", "dt": 1.0, "t_end": 5000})
    assert main(["simulate", "--scenario", str(_write(tmp_path, raw)), "--out", str(tmp_path)]) == 3
    assert "non-finite state at step" in capsys.readouterr().err


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("EMX_OUT_DIR", str(tmp_path / "env"))
    assert main(["equilibrium", "--scenario", str(ROOT / "scenarios" / "continuous.json")]) == 0
    assert (tmp_path / "env" / "continuous.equilibrium.json").exists()


def test_parallel_batch_matches_serial(tmp_path):
    paths = [str(p) for p in SCENARIOS]
    assert main(["run", "--jobs", "4", "--scenario", *paths, "--out", str(tmp_path / "a")]) == 0
    assert main(["run", "--scenario", *paths, "--out", str(tmp_path / "b")]) == 0
    a = sorted((tmp_path / "a").iterdir())
    assert [p.name for p in a] == sorted(p.name for p in (tmp_path / "b").iterdir())
    for p in a:
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def _produce(out: Path):
    for path in SCENARIOS:
        for artifact in json.loads(path.read_text())["outputs"]:
            assert main([COMMAND[artifact], "--scenario", str(path), "--out", str(out)]) == 0


def test_outputs_match_golden(tmp_path):
    _produce(tmp_path)
    produced = sorted(p.name for p in tmp_path.iterdir())
    assert produced == sorted(p.name for p in GOLDEN.iterdir())
    for name in produced:
        assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "emx.cli", "dispatch", "--scenario",
                           str(ROOT / "scenarios" / "min_cost.json"), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads((tmp_path / "min_cost.dispatch.json").read_text())["objective"] == 90
