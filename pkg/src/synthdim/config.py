"""Run configuration: YAML parsing, validation and serialization.

The grammar and the defaults table live in ``docs/config.md``. Unknown keys
are errors, never warnings, so a typo cannot silently fall back to a
default.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from .dynamics import DbarPeakTrigger, QuenchSchedule
from .exceptions import ConfigError, DomainError
from .hamiltonian import INTERACTION_MODES, WEIGHT_MODES, ModelParams
from .spectral import DisorderEnsemble

TASKS = ("spectrum", "rstat", "sff", "sff-protocol", "evolve", "entangle", "sweep")

# config key -> ModelParams field
MODEL_KEYS = {
    "N": "n_modes",
    "p": "n_photons",
    "delta": "tilt",
    "g": "interaction",
    "chi": "gvd_phase_scale",
    "interaction_mode": "interaction_mode",
    "weight_mode": "weight_mode",
    "center_frequency_ratio": "center_frequency_ratio",
}
HOP_KEYS = ("K1", "K2", "K3")
PHASE_KEYS = ("phi1", "phi2", "phi3")


@dataclass(frozen=True)
class EnsembleConfig:
    W: float = 0.3
    realizations: int = 50
    seed: Optional[int] = None


@dataclass(frozen=True)
class RstatConfig:
    window: float = 0.8
    degeneracy_tol: Optional[float] = None


@dataclass(frozen=True)
class SffConfig:
    t_min: float = 0.01
    t_max: float = 100.0
    points: int = 200
    log: bool = True
    scale: str = "heisenberg"
    shots: Optional[int] = None
    bootstrap: int = 50


@dataclass(frozen=True)
class InitialConfig:
    sigma: float = 0.01
    center: Optional[int] = None
    norm: float = 1.0
    occupation: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class DynamicsConfig:
    gamma: float = 0.05
    t_max: float = 40.0
    samples: int = 400
    initial: InitialConfig = field(default_factory=InitialConfig)
    quench: Tuple[Tuple[float, float], ...] = ()
    quench_trigger: Optional[str] = None
    trigger_delta: float = 10.0
    lookback: float = 1.0
    half_chain: bool = False


@dataclass(frozen=True)
class SweepAxis:
    path: str
    min: float
    max: float
    steps: int

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.steps)


@dataclass(frozen=True)
class SweepConfig:
    axes: Tuple[SweepAxis, ...] = ()
    theta: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    rstat: RstatConfig = field(default_factory=RstatConfig)
    sff: SffConfig = field(default_factory=SffConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    tasks: Tuple[str, ...] = ()
    output_dir: str = "out"
    seed: int = 0

    def disorder(self) -> DisorderEnsemble:
        seed = self.seed if self.ensemble.seed is None else self.ensemble.seed
        return DisorderEnsemble(self.ensemble.W, self.ensemble.realizations, seed)

    def schedule(self):
        dyn = self.dynamics
        if dyn.quench_trigger == "dbar_peak":
            return DbarPeakTrigger(dyn.trigger_delta, dyn.lookback)
        if dyn.quench:
            return QuenchSchedule(((0.0, self.model.tilt),) + tuple(dyn.quench))
        return None

    def digest(self) -> str:
        return hashlib.sha256(serialize_config(self).encode()).hexdigest()


# -- parsing ------------------------------------------------------------------


def _take(section: Dict[str, Any], allowed, where: str) -> Dict[str, Any]:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    return section


def _number(value, name, lo=None, hi=None, integer=False, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if not np.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise ConfigError(f"{name} = {value} outside [{lo}, {hi}]")
    return int(value) if integer else float(value)


def _section(cls, data, where, checks):
    data = _take(data or {}, [f.name for f in dataclasses.fields(cls)], where)
    out = {}
    for key, value in data.items():
        out[key] = checks[key](value, f"{where}.{key}") if key in checks else value
    return cls(**out)


def _bool(value, name):
    if not isinstance(value, bool):
        raise ConfigError(f"{name} must be true or false")
    return value


def _parse_model(doc) -> ModelParams:
    if "N" not in doc or "p" not in doc:
        raise ConfigError("N and p are required")
    kw = {}
    for key, target in MODEL_KEYS.items():
        if key not in doc:
            continue
        value = doc[key]
        if key in ("N",):
            value = _number(value, key, lo=1, integer=True)
        elif key == "p":
            value = _number(value, key, lo=0, integer=True)
        elif key in ("chi", "center_frequency_ratio"):
            value = _number(value, key, lo=0)
        elif key in ("g", "delta"):
            value = _number(value, key)
        elif key == "interaction_mode" and value not in INTERACTION_MODES:
            raise ConfigError(f"interaction_mode must be one of {INTERACTION_MODES}")
        elif key == "weight_mode" and value not in WEIGHT_MODES:
            raise ConfigError(f"weight_mode must be one of {WEIGHT_MODES}")
        kw[target] = value
    kw["hop_strengths"] = tuple(
        _number(doc.get(k, 1.0 if k == "K1" else 0.0), k, lo=0) for k in HOP_KEYS
    )
    kw["hop_phases"] = tuple(_number(doc.get(k, 0.0), k) for k in PHASE_KEYS)
    try:
        return ModelParams(**kw)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def _parse_dynamics(data) -> DynamicsConfig:
    names = [f.name for f in dataclasses.fields(DynamicsConfig)]
    data = dict(_take(data or {}, names, "dynamics"))
    if "initial" in data:
        init = _take(data["initial"] or {}, [f.name for f in dataclasses.fields(InitialConfig)], "dynamics.initial")
        init = dict(init)
        if "sigma" in init:
            sigma = init["sigma"]
            if sigma == "inf" or (isinstance(sigma, float) and sigma == float("inf")):
                init["sigma"] = float("inf")
            else:
                init["sigma"] = _number(sigma, "dynamics.initial.sigma", lo=0)
            if init["sigma"] <= 0:
                raise ConfigError("dynamics.initial.sigma must be positive")
        if init.get("center") is not None:
            init["center"] = _number(init["center"], "center", lo=1, integer=True)
        if "norm" in init:
            init["norm"] = _number(init["norm"], "norm", lo=0, hi=1)
        if init.get("occupation") is not None:
            init["occupation"] = tuple(_number(v, "occupation", lo=0, integer=True) for v in init["occupation"])
        data["initial"] = InitialConfig(**init)
    if "quench" in data:
        segs = []
        for item in data["quench"] or ():
            item = _take(item, ("t", "delta"), "dynamics.quench[]")
            segs.append((_number(item["t"], "quench.t", lo=0), _number(item["delta"], "quench.delta")))
        data["quench"] = tuple(segs)
    if data.get("quench_trigger") not in (None, "dbar_peak"):
        raise ConfigError("quench_trigger must be null or 'dbar_peak'")
    if data.get("quench") and data.get("quench_trigger"):
        raise ConfigError("give either quench or quench_trigger, not both")
    for key, lo in (("gamma", 0), ("t_max", 0), ("lookback", 0)):
        if key in data:
            data[key] = _number(data[key], f"dynamics.{key}", lo=lo)
    if "trigger_delta" in data:
        data["trigger_delta"] = _number(data["trigger_delta"], "dynamics.trigger_delta")
    if "samples" in data:
        data["samples"] = _number(data["samples"], "dynamics.samples", lo=2, integer=True)
    if "half_chain" in data:
        data["half_chain"] = _bool(data["half_chain"], "dynamics.half_chain")
    return DynamicsConfig(**data)


def _parse_sweep(data) -> SweepConfig:
    data = _take(data or {}, ("axes", "theta"), "sweep")
    axes = []
    for item in data.get("axes") or ():
        item = _take(item, ("path", "min", "max", "steps"), "sweep.axes[]")
        path = item.get("path")
        if path not in ("radial",) and path not in MODEL_KEYS and path not in HOP_KEYS + PHASE_KEYS + ("K23",):
            raise ConfigError(f"sweep axis path {path!r} is not a model parameter")
        lo, hi = _number(item["min"], "sweep.min"), _number(item["max"], "sweep.max")
        steps = _number(item["steps"], "sweep.steps", lo=1, integer=True)
        axes.append(SweepAxis(path, lo, hi, steps))
    theta = _number(data.get("theta"), "sweep.theta", allow_none=True)
    if any(a.path == "radial" for a in axes) and theta is None:
        raise ConfigError("a radial sweep axis needs sweep.theta")
    return SweepConfig(tuple(axes), theta)


TOP_KEYS = set(MODEL_KEYS) | set(HOP_KEYS) | set(PHASE_KEYS) | {
    "ensemble", "rstat", "sff", "dynamics", "sweep", "tasks", "output_dir", "seed",
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML run configuration.

    >>> cfg = parse_config("N: 21\\np: 2\\n")
    >>> cfg.model.gvd_phase_scale, cfg.ensemble.W, cfg.ensemble.realizations
    (50.0, 0.3, 50)
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    doc = _take(doc if doc is not None else {}, TOP_KEYS, "config")
    model = _parse_model(doc)
    ensemble = _section(
        EnsembleConfig, doc.get("ensemble"), "ensemble",
        {
            "W": lambda v, n: _number(v, n, lo=0),
            "realizations": lambda v, n: _number(v, n, lo=1, integer=True),
            "seed": lambda v, n: _number(v, n, lo=0, integer=True, allow_none=True),
        },
    )
    rstat = _section(
        RstatConfig, doc.get("rstat"), "rstat",
        {
            "window": lambda v, n: _number(v, n, lo=1e-12, hi=1),
            "degeneracy_tol": lambda v, n: _number(v, n, lo=0, allow_none=True),
        },
    )
    sff = _section(
        SffConfig, doc.get("sff"), "sff",
        {
            "t_min": lambda v, n: _number(v, n, lo=0),
            "t_max": lambda v, n: _number(v, n, lo=0),
            "points": lambda v, n: _number(v, n, lo=1, integer=True),
            "log": _bool,
            "shots": lambda v, n: _number(v, n, lo=1, integer=True, allow_none=True),
            "bootstrap": lambda v, n: _number(v, n, lo=1, integer=True),
        },
    )
    if sff.scale not in ("heisenberg", "absolute"):
        raise ConfigError("sff.scale must be 'heisenberg' or 'absolute'")
    if sff.t_max < sff.t_min or (sff.log and sff.t_min <= 0):
        raise ConfigError("sff needs 0 < t_min <= t_max (t_min may be 0 only on a linear grid)")
    tasks = tuple(doc.get("tasks") or ())
    bad = [t for t in tasks if t not in TASKS]
    if bad:
        raise ConfigError(f"unknown task(s): {bad}; choose from {TASKS}")
    return RunConfig(
        model=model,
        ensemble=ensemble,
        rstat=rstat,
        sff=sff,
        dynamics=_parse_dynamics(doc.get("dynamics")),
        sweep=_parse_sweep(doc.get("sweep")),
        tasks=tasks,
        output_dir=str(doc.get("output_dir", "out")),
        seed=_number(doc.get("seed", 0), "seed", lo=0, integer=True),
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- serialization ------------------------------------------------------------


def config_to_dict(cfg: RunConfig) -> Dict[str, Any]:
    m = cfg.model
    out: Dict[str, Any] = {}
    for key, target in MODEL_KEYS.items():
        out[key] = getattr(m, target)
    strengths = list(m.hop_strengths) + [0.0] * 3
    phases = list(m.hop_phases) + [0.0] * 3
    for k, key in enumerate(HOP_KEYS):
        out[key] = strengths[k]
    for k, key in enumerate(PHASE_KEYS):
        out[key] = phases[k]
    out["ensemble"] = dataclasses.asdict(cfg.ensemble)
    out["rstat"] = dataclasses.asdict(cfg.rstat)
    out["sff"] = dataclasses.asdict(cfg.sff)
    dyn = dataclasses.asdict(cfg.dynamics)
    dyn["quench"] = [{"t": t, "delta": d} for t, d in cfg.dynamics.quench]
    init = dyn["initial"]
    if init["occupation"] is not None:
        init["occupation"] = list(init["occupation"])
    if np.isinf(init["sigma"]):
        init["sigma"] = "inf"
    out["dynamics"] = dyn
    out["sweep"] = {
        "axes": [dataclasses.asdict(a) for a in cfg.sweep.axes],
        "theta": cfg.sweep.theta,
    }
    out["tasks"] = list(cfg.tasks)
    out["output_dir"] = cfg.output_dir
    out["seed"] = cfg.seed
    return out


def serialize_config(cfg: RunConfig) -> str:
    """YAML text that :func:`parse_config` maps back to ``cfg``."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def sweep_grid(cfg: RunConfig) -> List[Dict[str, float]]:
    """Cartesian product of the sweep axes, in row-major order."""
    axes = cfg.sweep.axes
    if not axes:
        raise ConfigError("no sweep axes configured")
    mesh = np.meshgrid(*[a.values() for a in axes], indexing="ij")
    return [
        {a.path: float(m.ravel()[i]) for a, m in zip(axes, mesh)}
        for i in range(mesh[0].size)
    ]
