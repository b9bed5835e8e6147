"""Phase-plane sweeps and batch runs with a resumable manifest."""

from __future__ import annotations

import dataclasses
import json
import os
import time
from typing import Dict, List, Optional

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .basis import enumerate_basis
from .config import (
    HOP_KEYS,
    MODEL_KEYS,
    PHASE_KEYS,
    RunConfig,
    _parse_model,
    config_to_dict,
    serialize_config,
    sweep_grid,
)
from .dynamics import evolve, fock_state, initial_gaussian_pair
from .entanglement import stable_value, three_photon_correlation
from .hamiltonian import build_hamiltonian
from .io import pair_columns, read_csv, read_json, write_csv, write_json
from .protocol import sample_and_reconstruct_sff
from .spectral import (
    DisorderEnsemble,
    ensemble_spectra,
    heisenberg_time,
    r_statistic_ensemble,
    sff_exact,
    sff_theory,
)

SWEEP_HEADER = ("g", "K23", "delta", "theta", "mean_r", "stderr", "classification", "status")


def cell_seed(master: int, index: int) -> int:
    """Per-cell seed that depends only on the master seed and the cell index."""
    return int(np.random.SeedSequence([int(master), int(index)]).generate_state(1)[0])


def cell_params(cfg: RunConfig, point: Dict[str, float]):
    """Model for one sweep cell; ``radial`` moves along ``theta`` in the (g, K23) plane."""
    doc = {k: v for k, v in config_to_dict(cfg).items() if k in MODEL_KEYS or k in HOP_KEYS + PHASE_KEYS}
    for path, value in point.items():
        if path == "radial":
            doc["g"] = value * np.cos(cfg.sweep.theta)
            doc["K2"] = doc["K3"] = value * np.sin(cfg.sweep.theta)
        elif path == "K23":
            doc["K2"] = doc["K3"] = value
        elif path in ("N", "p"):
            doc[path] = int(round(value))
        else:
            doc[path] = value
    # clip round-off from cos(pi/2) so K23 = 0 stays exactly zero
    for key in ("g", "K2", "K3"):
        if abs(doc[key]) < 1e-14:
            doc[key] = 0.0
    return _parse_model(doc)


def _run_cell(cfg: RunConfig, index: int, point: Dict[str, float]) -> Dict:
    row = {"index": index, "g": np.nan, "K23": np.nan, "delta": np.nan, "theta": cfg.sweep.theta}
    try:
        params = cell_params(cfg, point)
        row.update(g=params.interaction, K23=params.hop_strengths[1] if params.max_hop_range > 1 else 0.0, delta=params.tilt)
        ens = DisorderEnsemble(cfg.ensemble.W, cfg.ensemble.realizations, cell_seed(cfg.seed, index))
        res = r_statistic_ensemble(params, ens, cfg.rstat.window, cfg.rstat.degeneracy_tol, n_jobs=1)
        row.update(mean_r=res.mean_r, stderr=res.stderr, classification=res.classification, status="ok")
    except Exception as exc:  # recorded per cell, the sweep continues
        row.update(mean_r=np.nan, stderr=np.nan, classification="", status=f"error: {type(exc).__name__}: {exc}")
    return row


def phase_plane_sweep(
    cfg: RunConfig,
    out_path: Optional[str] = None,
    workers: Optional[int] = None,
    resume: bool = False,
) -> List[Dict]:
    """Mean gap ratio on every cell of the configured grid.

    Cells are cached as JSON under ``<out_path>.cells/`` so an interrupted
    sweep restarts where it stopped when ``resume`` is set. Rows come back
    in grid order whatever the worker count.
    """
    grid = sweep_grid(cfg)
    cache = None if out_path is None else out_path + ".cells"
    done: Dict[int, Dict] = {}
    if cache and resume and os.path.isdir(cache):
        for name in os.listdir(cache):
            if name.endswith(".json"):
                row = read_json(os.path.join(cache, name))
                done[row["index"]] = row

    def task(i, point):
        row = _run_cell(cfg, i, point)
        if cache:
            write_json(os.path.join(cache, f"cell_{i:06d}.json"), _jsonable(row))
        return row

    todo = [(i, p) for i, p in enumerate(grid) if i not in done]
    fresh = Parallel(n_jobs=workers or -1, prefer="threads")(delayed(task)(i, p) for i, p in todo)
    for row in fresh:
        done[row["index"]] = row
    rows = [done[i] for i in range(len(grid))]
    if out_path is not None:
        write_csv(out_path, SWEEP_HEADER, ([r[k] for k in SWEEP_HEADER] for r in rows))
    return rows


def _jsonable(row: Dict) -> Dict:
    return {k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in row.items()}


# -- individual tasks -----------------------------------------------------------


def sff_times(cfg: RunConfig, t_h: float) -> np.ndarray:
    s = cfg.sff
    grid = np.geomspace(s.t_min, s.t_max, s.points) if s.log else np.linspace(s.t_min, s.t_max, s.points)
    return grid * t_h if s.scale == "heisenberg" else grid


def task_basis(cfg: RunConfig, path: str, **_) -> List[str]:
    b = enumerate_basis(cfg.model.n_modes, cfg.model.n_photons)
    header = ["index"] + [f"occ_{k}" for k in range(1, b.n_modes + 1)]
    return [write_csv(path, header, ([i, *row] for i, row in enumerate(b.states)))]


def task_hamiltonian(cfg: RunConfig, path: str, **_) -> List[str]:
    h = build_hamiltonian(cfg.model)
    rows, cols = np.nonzero(h)
    return [write_csv(path, ["row", "col", "re", "im"], zip(rows, cols, h[rows, cols].real, h[rows, cols].imag))]


def task_spectrum(cfg: RunConfig, path: str, workers=None, **_) -> List[str]:
    spectra = ensemble_spectra(cfg.model, cfg.disorder(), n_jobs=workers)
    body = ((r, k, e) for r, eigs in enumerate(spectra) for k, e in enumerate(eigs))
    return [write_csv(path, ["realization", "index", "energy"], body)]


def task_rstat(cfg: RunConfig, path: str, workers=None, **_) -> List[str]:
    res = r_statistic_ensemble(cfg.model, cfg.disorder(), cfg.rstat.window, cfg.rstat.degeneracy_tol, n_jobs=workers)
    header = ["mean_r", "stderr", "dropped", "classification", "n_realizations", "n_spacings_used", "window"]
    row = [res.mean_r, res.stderr, res.n_degenerate_dropped, res.classification, res.n_realizations, res.n_spacings_used, cfg.rstat.window]
    return [write_csv(path, header, [row])]


def task_sff(cfg: RunConfig, path: str, workers=None, **_) -> List[str]:
    clean = np.linalg.eigvalsh(build_hamiltonian(cfg.model))
    t = sff_times(cfg, heisenberg_time(clean))
    curve = sff_exact(cfg.model, cfg.disorder(), t, n_jobs=workers)
    pos = t > 0
    goe = np.full(t.size, np.nan)
    gue = np.full(t.size, np.nan)
    goe[pos] = sff_theory("GOE", curve.dim, curve.heisenberg_time, t[pos]).values
    gue[pos] = sff_theory("GUE", curve.dim, curve.heisenberg_time, t[pos]).values
    body = zip(t, curve.values, goe, gue, t / curve.heisenberg_time)
    return [write_csv(path, ["t", "K_exact", "K_goe_theory", "K_gue_theory", "t_over_tH"], body)]


def task_sff_protocol(cfg: RunConfig, path: str, shots=None, **_) -> List[str]:
    clean = np.linalg.eigvalsh(build_hamiltonian(cfg.model))
    t = sff_times(cfg, heisenberg_time(clean))
    shots = cfg.sff.shots if shots is None else shots
    curve = sample_and_reconstruct_sff(cfg.model, t, shots, cfg.seed, n_bootstrap=cfg.sff.bootstrap)
    body = zip(t, curve.exact, curve.values, curve.stderr, curve.n_invalid_pairs)
    return [write_csv(path, ["t", "K_exact", "K_reconstructed", "stderr", "n_invalid_pairs"], body)]


def initial_state(cfg: RunConfig):
    m, init = cfg.model, cfg.dynamics.initial
    if init.occupation is not None:
        state = fock_state(enumerate_basis(m.n_modes, m.n_photons), init.occupation)
        if init.norm != 1.0:
            state = dataclasses.replace(state, amplitudes=state.amplitudes * init.norm)
        return state
    center = (m.n_modes + 1) // 2 if init.center is None else init.center
    return initial_gaussian_pair(m, init.sigma, center, init.norm)


def run_evolution(cfg: RunConfig):
    dyn = cfg.dynamics
    t = np.linspace(0.0, dyn.t_max, dyn.samples)
    return evolve(initial_state(cfg), cfg.model, cfg.schedule(), dyn.gamma, t, half_chain=dyn.half_chain)


def trajectory_rows(traj):
    n = traj.basis.n_modes
    iu = np.triu_indices(n)
    for k in range(traj.times.size):
        pairs = traj.P[k][iu] if traj.P is not None else []
        opt = lambda arr: np.nan if arr is None else arr[k]
        yield [traj.times[k], traj.norm[k], traj.imbalance[k], traj.imbalance_normalized[k], *pairs,
               opt(traj.di), opt(traj.dbar), opt(traj.s_ph), opt(traj.s_sp)]


def trajectory_header(n_modes: int, n_photons: int) -> List[str]:
    pairs = pair_columns(n_modes) if n_photons == 2 else []
    return ["t", "norm", "imbalance", "imbalance_normalized", *pairs, "D", "Dbar", "S_ph", "S_sp"]


def task_evolve(cfg: RunConfig, path: str, **_) -> List[str]:
    traj = run_evolution(cfg)
    out = [write_csv(path, trajectory_header(cfg.model.n_modes, cfg.model.n_photons), trajectory_rows(traj))]
    meta = {"quench_time": traj.quench_time}
    out.append(write_json(os.path.splitext(path)[0] + ".json", meta))
    return out


def entangle_from_trajectory(traj_path: str, path: str, window: float = 0.25) -> List[str]:
    """Per-time DI, weighted DI and entropies, plus trailing-window stable values."""
    cols = read_csv(traj_path)
    t = cols["t"]
    start = 0
    meta_path = os.path.splitext(traj_path)[0] + ".json"
    if os.path.exists(meta_path):
        qt = read_json(meta_path).get("quench_time")
        if qt is not None:
            start = int(np.searchsorted(t, qt))
    names = ("D", "Dbar", "S_ph", "S_sp")
    out = [write_csv(path, ["t", *names], zip(t, *(cols[n] for n in names)))]
    stable = []
    for n in names:
        series = cols[n][start:]
        if np.all(np.isnan(series)):
            continue
        mean, std = stable_value(series, window)
        stable.append([n, mean, std, window, t[start]])
    stable_path = os.path.splitext(path)[0] + "_stable.csv"
    out.append(write_csv(stable_path, ["metric", "mean", "std", "window", "t_from"], stable))
    return out


def task_entangle(cfg: RunConfig, path: str, traj=None, **_) -> List[str]:
    if cfg.model.n_photons == 3:
        result = run_evolution(cfg)
        P = three_photon_correlation(result.state(-1).normalized())
        n = cfg.model.n_modes
        body = ((a + 1, b + 1, c + 1, P[a, b, c]) for a in range(n) for b in range(n) for c in range(n))
        return [write_csv(path, ["n", "m", "k", "P"], body)]
    if traj is None:
        traj = os.path.splitext(path)[0] + "_traj.csv"
        task_evolve(cfg, traj)
    return entangle_from_trajectory(traj, path)


def task_sweep(cfg: RunConfig, path: str, workers=None, resume=False, **_) -> List[str]:
    rows = phase_plane_sweep(cfg, path, workers, resume)
    if any(r["status"] != "ok" for r in rows):
        raise RuntimeError(f"{sum(r['status'] != 'ok' for r in rows)} sweep cell(s) failed; see {path}")
    return [path]


TASK_FUNCS = {
    "basis": (task_basis, "basis.csv"),
    "hamiltonian": (task_hamiltonian, "hamiltonian.csv"),
    "spectrum": (task_spectrum, "spectrum.csv"),
    "rstat": (task_rstat, "rstat.csv"),
    "sff": (task_sff, "sff.csv"),
    "sff-protocol": (task_sff_protocol, "sff_protocol.csv"),
    "evolve": (task_evolve, "traj.csv"),
    "entangle": (task_entangle, "metrics.csv"),
    "sweep": (task_sweep, "sweep.csv"),
}


# -- batch ------------------------------------------------------------------------


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()) + f".{int(time.time() * 1e6) % 1000000:06d}Z"


def run_all(cfg: RunConfig, out_dir: Optional[str] = None, resume: bool = False, workers: Optional[int] = None) -> Dict:
    """Run every task in ``cfg.tasks`` and keep ``manifest.json`` up to date.

    The manifest is written before the first task and after each one. With
    ``resume``, tasks already marked ``ok`` for the same config digest are
    skipped when their outputs still exist. A failing task is recorded and
    the remaining tasks still run.
    """
    out_dir = cfg.output_dir if out_dir is None else out_dir
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.json")
    digest = cfg.digest()
    previous = {}
    if resume and os.path.exists(manifest_path):
        old = read_json(manifest_path)
        if old.get("config_hash") == digest:
            previous = old.get("tasks", {})
    manifest = {
        "config_hash": digest,
        "artifact_version": __version__,
        "started": _now(),
        "finished": None,
        "tasks": {name: previous.get(name, {"status": "pending"}) for name in cfg.tasks},
        "outputs": [],
    }
    with open(os.path.join(out_dir, "config.yaml"), "w", encoding="utf-8") as fh:
        fh.write(serialize_config(cfg))
    write_json(manifest_path, manifest)
    for name in cfg.tasks:
        entry = manifest["tasks"][name]
        if entry.get("status") == "ok" and all(os.path.exists(p) for p in entry.get("outputs", [])):
            entry["skipped"] = True
            continue
        func, filename = TASK_FUNCS[name]
        started = _now()
        try:
            outputs = func(cfg, os.path.join(out_dir, filename), workers=workers, resume=resume)
            entry = {"status": "ok", "outputs": outputs, "started": started, "finished": _now()}
        except Exception as exc:
            entry = {"status": "failed", "error": f"{type(exc).__name__}: {exc}", "outputs": [], "started": started, "finished": _now()}
        manifest["tasks"][name] = entry
        write_json(manifest_path, manifest)
    manifest["outputs"] = sorted({p for e in manifest["tasks"].values() for p in e.get("outputs", [])})
    manifest["finished"] = _now()
    write_json(manifest_path, manifest)
    return manifest


def manifest_ok(manifest: Dict) -> bool:
    return all(e.get("status") == "ok" for e in manifest["tasks"].values())


def dump_manifest(manifest: Dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True)
