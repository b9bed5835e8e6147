import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthdim.cli import main
from synthdim.config import load_config, parse_config, serialize_config, sweep_grid
from synthdim.exceptions import ConfigError
from synthdim.io import read_csv, read_json
from synthdim.sweep import cell_params, phase_plane_sweep, run_all

GOE_TEXT = """
N: 21
p: 2
g: 1.5
K1: 1.0
K2: 1.25
K3: 1.25
delta: 0.0
phi2: 0.0
phi3: 0.0
ensemble: {W: 0.3, realizations: 20, seed: 7}
"""

SMALL = """
N: 5
p: 2
g: 1.0
K1: 1.0
K2: 0.3
K3: 0.3
ensemble: {W: 0.3, realizations: 3}
sff: {t_min: 0.1, t_max: 10, points: 8}
dynamics: {t_max: 4, samples: 21, initial: {sigma: 0.5, center: 3}}
sweep:
  theta: 0.7853981633974483
  axes: [{path: radial, min: 0.5, max: 2.0, steps: 3}, {path: delta, min: 0, max: 2, steps: 2}]
tasks: [rstat, sff, evolve, entangle, sweep]
seed: 3
"""


def test_minimal_config_defaults():
    cfg = parse_config("N: 21\np: 2\n")
    assert cfg.model.n_modes == 21 and cfg.model.n_photons == 2
    assert cfg.model.hop_strengths[0] == 1.0
    assert cfg.rstat.window == 0.8
    assert cfg.dynamics.t_max == 40 and cfg.dynamics.samples == 400
    assert cfg.schedule() is None


@pytest.mark.parametrize(
    "text",
    [
        "N: 21\np: 2\nK2: -1\n",
        "N: 21\np: 2\nbogus: 1\n",
        "N: 21\np: 2\nrstat: {windw: 0.5}\n",
        "N: 21\np: 2\ninteraction_mode: nope\n",
        "N: 21\np: 2\nsweep: {axes: [{path: radial, min: 0, max: 1, steps: 2}]}\n",
        "N: 21\np: 2\ntasks: [dance]\n",
        "N: [\n",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


@pytest.mark.property
def test_goe_config_round_trip():
    cfg = parse_config(GOE_TEXT)
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


@pytest.mark.property
@settings(max_examples=25)
@given(
    n=st.integers(3, 25), g=st.floats(-5, 5), k=st.floats(0, 3), phi=st.floats(-3.2, 3.2),
    seed=st.integers(0, 2**31), sigma=st.one_of(st.just(float("inf")), st.floats(0.01, 5)),
    trigger=st.booleans(),
)
def test_config_round_trip_property(n, g, k, phi, seed, sigma, trigger):
    text = (
        f"N: {n}\np: 2\ng: {g!r}\nK2: {k!r}\nphi2: {phi!r}\nseed: {seed}\n"
        f"dynamics: {{initial: {{sigma: {'.inf' if np.isinf(sigma) else repr(sigma)}}}, "
        f"quench_trigger: {'dbar_peak' if trigger else 'null'}}}\n"
    )
    cfg = parse_config(text)
    assert parse_config(serialize_config(cfg)) == cfg


def test_sweep_grid_and_cells():
    cfg = parse_config(SMALL)
    grid = sweep_grid(cfg)
    assert len(grid) == 6
    p = cell_params(cfg, grid[0])
    assert p.interaction == pytest.approx(0.5 * np.cos(np.pi / 4))
    assert p.hop_strengths[1] == pytest.approx(0.5 * np.sin(np.pi / 4))
    edge = parse_config(SMALL.replace("0.7853981633974483", "1.5707963267948966"))
    assert cell_params(edge, grid[0]).interaction == 0.0


@pytest.mark.property
def test_sweep_rows_and_determinism(tmp_path):
    cfg = parse_config(SMALL)
    a = phase_plane_sweep(cfg, str(tmp_path / "a.csv"), workers=1)
    b = phase_plane_sweep(cfg, str(tmp_path / "b.csv"), workers=3)
    assert len(a) == 6 and all(r["status"] == "ok" for r in a)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    cols = read_csv(tmp_path / "a.csv")
    assert list(cols) == ["g", "K23", "delta", "theta", "mean_r", "stderr", "classification", "status"]


def test_sweep_resume_uses_cache(tmp_path):
    cfg = parse_config(SMALL)
    out = str(tmp_path / "s.csv")
    phase_plane_sweep(cfg, out, workers=1)
    cell = os.path.join(out + ".cells", "cell_000000.json")
    stamp = os.stat(cell).st_mtime_ns
    phase_plane_sweep(cfg, out, workers=1, resume=True)
    assert os.stat(cell).st_mtime_ns == stamp
    assert read_json(cell)["status"] == "ok"


def test_run_all_and_resume(tmp_path):
    cfg = parse_config(SMALL)
    m = run_all(cfg, str(tmp_path), workers=1)
    assert all(e["status"] == "ok" for e in m["tasks"].values())
    for name in ("rstat.csv", "sff.csv", "traj.csv", "metrics.csv", "sweep.csv", "manifest.json", "config.yaml"):
        assert (tmp_path / name).exists()
    assert load_config(tmp_path / "config.yaml") == cfg
    stamp = os.stat(tmp_path / "sff.csv").st_mtime_ns
    m2 = run_all(cfg, str(tmp_path), resume=True, workers=1)
    assert all(e.get("skipped") for e in m2["tasks"].values())
    assert os.stat(tmp_path / "sff.csv").st_mtime_ns == stamp
    traj = read_csv(tmp_path / "traj.csv")
    assert {"t", "norm", "imbalance", "P_1_1", "P_5_5", "D", "Dbar", "S_ph"} <= set(traj)


def test_run_all_records_failure(tmp_path):
    cfg = parse_config(SMALL.replace("tasks: [rstat, sff, evolve, entangle, sweep]", "tasks: [rstat]").replace(
        "realizations: 3", "realizations: 3}\nrstat: {window: 0.0000001"))
    m = run_all(cfg, str(tmp_path), workers=1)
    assert m["tasks"]["rstat"]["status"] == "failed"
    assert read_json(tmp_path / "manifest.json")["tasks"]["rstat"]["status"] == "failed"


def test_cli_in_process(tmp_path, capsys):
    assert main(["basis", "--modes", "3", "--photons", "2", "--out", str(tmp_path)]) == 0
    assert "D = 6" in capsys.readouterr().out
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL)
    out = tmp_path / "r.csv"
    assert main(["rstat", "--config", str(cfg), "--out", str(out), "--realizations", "2"]) == 0
    assert set(read_csv(out)) >= {"mean_r", "stderr", "dropped", "classification"}
    assert main(["sff", "--config", str(cfg), "--out", str(tmp_path / "k.csv"), "--points", "5"]) == 0
    assert list(read_csv(tmp_path / "k.csv"))[:4] == ["t", "K_exact", "K_goe_theory", "K_gue_theory"]
    assert main(["sff-protocol", "--config", str(cfg), "--out", str(tmp_path / "p.csv"), "--points", "3"]) == 0
    cols = read_csv(tmp_path / "p.csv")
    np.testing.assert_allclose(cols["K_reconstructed"], cols["K_exact"], atol=1e-8)
    assert main(["rstat"]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("N: 21\np: 2\nK2: -1\n")
    assert main(["rstat", "--config", str(bad)]) == 1


def test_cli_evolve_then_entangle(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL)
    traj = tmp_path / "traj.csv"
    assert main(["evolve", "--config", str(cfg), "--out", str(traj)]) == 0
    assert main(["entangle", "--traj", str(traj), "--out", str(tmp_path / "m.csv")]) == 0
    assert (tmp_path / "m.csv").exists()


def test_cli_subprocess_run(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(SMALL.replace("tasks: [rstat, sff, evolve, entangle, sweep]", "tasks: [rstat]"))
    out = tmp_path / "o"
    res = subprocess.run(
        [sys.executable, "-m", "synthdim.cli", "run", "--config", str(cfg), "--out", str(out), "--workers", "1"],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    assert "rstat: ok" in res.stdout
    assert sorted(os.listdir(out)) == ["config.yaml", "manifest.json", "rstat.csv"]


CONFIGS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")


@pytest.mark.parametrize("name", ["goe", "gue", "integrable", "smbl"])
def test_phase_configs_write_sff_curves(tmp_path, name):
    cfg = load_config(os.path.join(CONFIGS, f"{name}.yaml"))
    m = run_all(cfg, str(tmp_path), workers=2)
    assert m["tasks"]["sff"]["status"] == "ok"
    cols = read_csv(tmp_path / "sff.csv")
    assert cols["t"].size == 200
    assert np.all((cols["K_exact"] > 0) & (cols["K_exact"] <= 1))


@pytest.mark.parametrize("name", ["dynamics", "phase_plane"])
def test_other_configs_parse(name):
    cfg = load_config(os.path.join(CONFIGS, f"{name}.yaml"))
    assert cfg.tasks
