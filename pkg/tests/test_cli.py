import json
import os

import pytest

from cyclical_mcmc.cli import EXIT_CONFIG, EXIT_OK, main, resolve, validate

WALL_CLOCK = {"started", "finished", "wall_time_s", "runtime_s", "timing"}


def _strip_clock(obj):
    if isinstance(obj, dict):
        return {k: _strip_clock(v) for k, v in obj.items() if k not in WALL_CLOCK}
    if isinstance(obj, list):
        return [_strip_clock(v) for v in obj]
    return obj


def _report(out):
    with open(out / "report.json") as fh:
        return json.load(fh)


def test_unknown_preset_exit_2(tmp_path, capsys):
    assert main(["run", "--preset", "nope", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "preset" in capsys.readouterr().err
    assert not (tmp_path / "report.json").exists()


def test_bad_json_reports_line(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "mode": "run",\n  "K": 3,\n}\n')
    assert main(["--config", str(cfg)]) == EXIT_CONFIG
    assert "line 4" in capsys.readouterr().err


def test_schema_error_reports_line(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "mode": "run",\n  "preset": "toy1d-equal",\n  "K": -3\n}\n')
    assert main(["--config", str(cfg)]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "line 4" in err and "K" in err


def test_unknown_key_rejected():
    with pytest.raises(ValueError):
        validate({"mode": "run", "cycles": 3})


def test_reproduce_needs_name(tmp_path):
    assert main(["reproduce", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_resolve_fills_defaults():
    cfg = resolve({"mode": "run", "preset": "grid2d-equal"})
    assert cfg["seed"] == 0 and cfg["K"] == 5000
    assert cfg["schedule"]["L"] == 2000
    assert cfg["proposal"] == {"family": "gaussian-isotropic", "base_variance": 0.01, "q": 0.5}
    assert cfg["init"]["kind"] == "uniform"
    paper = resolve({"mode": "run", "preset": "toy1d-equal", "paper_scale": True})
    assert (paper["K"], paper["schedule"]["L"]) == (1000, 5000)


def test_reproduce_toy_equal(tmp_path):
    assert main(["reproduce", "toy1d-equal", "--out", str(tmp_path)]) == EXIT_OK
    rep = _report(tmp_path)
    w = rep["results"]["run"]["weights"]["weights"][0]
    assert 0.45 <= w <= 0.55
    md = rep["metadata"]
    assert md["seed"] == 0 and "PCG64" in md["rng_algorithm"]
    assert set(md["files"]) == {"samples.csv", "weights.csv", "curve_mode0.csv", "curve_mode1.csv"}
    lines = (tmp_path / "samples.csv").read_text().splitlines()
    assert lines[0] == "cycle,dim_0" and len(lines) == 501
    assert "wall_time_s" in rep["timing"]


def test_run_custom_target_with_trace(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "mode": "run", "K": 4, "thinning": 50, "schedule": {"L": 100},
        "target": {"weights": [0.3, 0.7], "means": [[-2.0], [2.0]], "variances": [0.5, 0.5]},
    }))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "5"]) == EXIT_OK
    rep = _report(tmp_path / "o")
    assert rep["config"]["seed"] == 5
    assert (tmp_path / "o" / "trace.csv").read_text().count("\n") == 1 + 4 * 2


def test_replicas_use_split_seeds(tmp_path):
    assert main(["run", "--preset", "toy1d-equal", "--replicas", "2", "--seed", "6",
                 "--out", str(tmp_path)]) == EXIT_OK
    reps = _report(tmp_path)["results"]["replicas"]
    assert [r["seed"] for r in reps] == [6, 7]
    assert (tmp_path / "samples_r1.csv").exists()


def test_spectral_report_fields(tmp_path):
    assert main(["spectral", "--out", str(tmp_path)]) == EXIT_OK
    res = _report(tmp_path)["results"]
    th = res["theorem1"]
    assert len(th["alpha"]) == 64 and len(th["lambda"]) == 64
    assert th["capital_lambda"] > 0
    assert th["recursion_ok"] is True
    assert (tmp_path / "chain" / "kernel_64.csv").exists()
    assert (tmp_path / "trajectory.csv").read_text().startswith("step,tv,var,bound\n")


def test_theorem2_and_lyapunov_modes(tmp_path):
    assert main(["theorem2", "--out", str(tmp_path / "t2")]) == EXIT_OK
    res = _report(tmp_path / "t2")["results"]
    assert res["theorem2"]["holds"] is True
    assert "escape_monte_carlo" not in res
    cfg = tmp_path / "l.json"
    cfg.write_text(json.dumps({"mode": "lyapunov", "lyapunov": {"s": [1.0], "c": [1.0], "theta_step": 0.05}}))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "ly")]) == EXIT_OK
    res = _report(tmp_path / "ly")["results"]
    assert set(res) >= {"max_violation", "holds", "cases"}


@pytest.mark.parametrize("argv", [
    ["reproduce", "toy1d-unequal"],
    ["spectral"],
    ["theorem2", "--replicas", "200"],
])
def test_reruns_identical_modulo_clock(tmp_path, argv):
    outs = [tmp_path / "a", tmp_path / "b"]
    for o in outs:
        assert main(argv + ["--out", str(o), "--seed", "3"]) == EXIT_OK
    a, b = (_report(o) for o in outs)
    assert _strip_clock(a) == _strip_clock(b)
    for name in a["metadata"]["files"]:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_output_leaves_no_temporaries(tmp_path):
    assert main(["reproduce", "toy1d-unequal", "--out", str(tmp_path)]) == EXIT_OK
    assert not [f for f in os.listdir(tmp_path) if f.endswith(".tmp")]
