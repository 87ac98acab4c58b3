import json
import subprocess
import sys

import numpy as np
import pytest

from pmcw_codesign.cli import RunConfig, main, sweep_configs
from pmcw_codesign.codesign import random_pair
from pmcw_codesign.radarsim import paper_scenario


def write_config(tmp_path, **raw):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(raw))
    return str(path)


SMALL = {"grid": {"K": 16, "L": 15, "P": 2, "v_max": 70.0},
         "scenario": paper_scenario(K=16).to_dict(), "seed": 1}


def test_design_smoke(tmp_path, capsys):
    out = tmp_path / "d"
    assert main(["--mode", "design", "--config", write_config(tmp_path, **SMALL), "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {"x.code", "y.code", "trace.csv", "summary.json", "manifest.json"}
    rows = (out / "trace.csv").read_text().splitlines()
    assert rows[0] == "outer_iter,J,inner_iters_x,inner_iters_y"
    J = np.array([float(r.split(",")[1]) for r in rows[1:]])
    assert np.all(np.diff(J) <= 1e-9 * J[0])
    summary = json.loads((out / "summary.json").read_text())
    assert summary["final_objective"] < summary["initial_objective"]
    assert "design K=16" in capsys.readouterr().out


def test_design_is_deterministic(tmp_path):
    cfg = write_config(tmp_path, **SMALL)
    for name in ("a", "b"):
        assert main(["--mode", "design", "--config", cfg, "--out", str(tmp_path / name)]) == 0
    for f in ("x.code", "y.code", "trace.csv", "manifest.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_bad_epsilon_names_field(tmp_path, capsys):
    raw = dict(SMALL, solver={"epsilon": 0.0})
    out = tmp_path / "never"
    assert main(["--mode", "design", "--config", write_config(tmp_path, **raw), "--out", str(out)]) != 0
    assert "epsilon" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize("raw, field", [
    ({"grid": {"K": 16, "L": 16}}, "L"),
    ({"grid": {"K": 16, "Q": 1}}, "grid"),
    ({"threshold_db": 3}, "threshold_db"),
    ({"solver": {"max_outer": 0}}, "max_outer"),
    ({"bogus": 1}, "bogus"),
])
def test_validation_messages(tmp_path, capsys, raw, field):
    assert main(["--mode", "design", "--config", write_config(tmp_path, **raw), "--out", str(tmp_path / "o")]) != 0
    assert field in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
    assert "nope.json" in capsys.readouterr().err


def save_pair(tmp_path, K, seed=0):
    x, y = random_pair(K, seed)
    x.save(tmp_path / "x.code")
    y.save(tmp_path / "y.code")
    return {"x": "x.code", "y": "y.code"}


def test_simulate_random_codes_false_alarm(tmp_path, capsys):
    cfg = write_config(tmp_path, codes=save_pair(tmp_path, 50))
    out = tmp_path / "s"
    assert main(["--mode", "simulate", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "detections.json").read_text())
    truth = tuple(report["ground_truth"])
    others = [d for d in report["detections"] if (d["range_bin"], d["doppler_bin"]) != truth]
    assert others
    assert (out / "rd_map.pgm").read_bytes().startswith(b"P5")
    header = (out / "rd_map.csv").read_text().splitlines()[0]
    assert header.startswith("range_m,") and len(header.split(",")) == 141
    assert "detection" in capsys.readouterr().out


def test_simulate_empty_scene(tmp_path):
    scenario = paper_scenario().replace(targets=(), interferer=None, noise_variance=0.0)
    cfg = write_config(tmp_path, codes=save_pair(tmp_path, 50), scenario=scenario.to_dict())
    assert main(["--mode", "simulate", "--config", cfg, "--out", str(tmp_path / "s")]) == 0
    report = json.loads((tmp_path / "s" / "detections.json").read_text())
    assert report["detections"] == []


def test_simulate_missing_code_names_path(tmp_path, capsys):
    cfg = write_config(tmp_path, codes={"x": "gone.code", "y": "gone.code"})
    assert main(["--mode", "simulate", "--config", cfg, "--out", str(tmp_path / "s")]) != 0
    assert "gone.code" in capsys.readouterr().err
    assert not (tmp_path / "s").exists()


def test_simulate_malformed_code_names_path(tmp_path, capsys):
    (tmp_path / "bad.code").write_text("# pmcw-code K=3\n0.1\nnot-a-number\n0.2\n")
    cfg = write_config(tmp_path, codes={"x": "bad.code", "y": "bad.code"})
    assert main(["--mode", "simulate", "--config", cfg, "--out", str(tmp_path / "s")]) != 0
    assert "bad.code" in capsys.readouterr().err


def test_simulate_dimension_mismatch(tmp_path, capsys):
    cfg = write_config(tmp_path, codes=save_pair(tmp_path, 16))
    assert main(["--mode", "simulate", "--config", cfg, "--out", str(tmp_path / "s")]) != 0
    assert "dimension" in capsys.readouterr().err


def test_evaluate(tmp_path):
    cfg = write_config(tmp_path, codes=save_pair(tmp_path, 50))
    assert main(["--mode", "evaluate", "--config", cfg, "--out", str(tmp_path / "e")]) == 0
    result = json.loads((tmp_path / "e" / "evaluation.json").read_text())
    assert set(result) == {"objective", "interference_power_db", "peak_sidelobe_db_x", "peak_sidelobe_db_y"}


def test_reproduce_paper_small_k(tmp_path):
    out = tmp_path / "r"
    assert main(["--mode", "reproduce-paper", "--config", write_config(tmp_path, grid={"K": 8}),
                 "--out", str(out)]) == 0
    comparison = json.loads((out / "comparison.json").read_text())
    assert comparison["designed"]["objective"] < comparison["random"]["objective"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["grid"]["L"] == 7 and manifest["grid"]["P"] == 4
    assert manifest["scenario"]["timing"]["K"] == 8
    header = (out / "rd_random.csv").read_text().splitlines()
    assert len(header) == 9  # header plus K range rows


def test_reproduce_paper_default(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["--mode", "reproduce-paper", "--out", str(out), "--seed", "4"]) == 0
    comparison = json.loads((outs[0] / "comparison.json").read_text())
    assert comparison["designed"]["interference_ridge_peak_db"] < comparison["random"]["interference_ridge_peak_db"]
    for f in outs[0].iterdir():
        assert f.read_bytes() == (outs[1] / f.name).read_bytes(), f.name


def test_sweep_partitions_outputs():
    cfg = RunConfig(mode="design", out="/tmp/sweep", seed=5, noise_seed=2, sweep=3)
    members = sweep_configs(cfg)
    assert [m.seed for m in members] == [5, 6, 7]
    assert [m.noise_seed for m in members] == [2, 3, 4]
    assert len({m.out for m in members}) == 3


def test_sweep_runs_in_pool(tmp_path):
    cfg = write_config(tmp_path, **SMALL)
    assert main(["--mode", "design", "--config", cfg, "--out", str(tmp_path / "w"), "--sweep", "2"]) == 0
    runs = sorted(p.name for p in (tmp_path / "w").iterdir())
    assert runs == ["run_000", "run_001"]
    seeds = [json.loads((tmp_path / "w" / r / "manifest.json").read_text())["seed"] for r in runs]
    assert seeds == [1, 2]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pmcw_codesign", "--mode", "design",
                           "--config", write_config(tmp_path, **dict(SMALL, solver={"epsilon": -1})),
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "epsilon" in proc.stderr
