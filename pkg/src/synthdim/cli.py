"""Command-line entry point: ``synthdim <command> --config FILE``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from typing import List, Optional

from .basis import sector_dimension
from .config import load_config, parse_config
from .exceptions import SynthDimError
from .sweep import TASK_FUNCS, dump_manifest, entangle_from_trajectory, manifest_ok, run_all

log = logging.getLogger("synthdim")

COMMANDS = ("basis", "hamiltonian", "rstat", "sff", "sff-protocol", "evolve", "entangle", "sweep", "run")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synthdim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--out", help="output directory, or a .csv file for single-output commands")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--resume", action="store_true", help="skip work already recorded as done")
        p.add_argument("--workers", type=int, help="parallel workers (default: all cores)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "basis":
            p.add_argument("--modes", type=int, help="N (overrides the config)")
            p.add_argument("--photons", type=int, help="p (overrides the config)")
        if name == "rstat":
            p.add_argument("--window", type=float, help="central fraction of the spectrum")
            p.add_argument("--realizations", type=int, help="disorder realizations")
        if name in ("sff", "sff-protocol"):
            p.add_argument("--tmin", type=float, help="first time (units set by sff.scale)")
            p.add_argument("--tmax", type=float, help="last time")
            p.add_argument("--points", type=int, help="number of times")
            p.add_argument("--log", action=argparse.BooleanOptionalAction, default=None, help="log-spaced times")
        if name == "sff-protocol":
            p.add_argument("--shots", type=int, help="detection events per setting (omit for exact)")
        if name == "entangle":
            p.add_argument("--traj", help="trajectory CSV written by 'evolve'")
            p.add_argument("--window", type=float, default=0.25, help="trailing fraction for stable values")
    return parser


def _output_path(args, cfg, default_name: str) -> str:
    out = args.out if args.out is not None else (cfg.output_dir if cfg is not None else ".")
    if out.endswith(".csv"):
        return out
    return os.path.join(out, default_name)


def _load(args):
    if args.config:
        cfg = load_config(args.config)
    elif args.command == "basis" and args.modes is not None and args.photons is not None:
        cfg = parse_config(f"N: {args.modes}\np: {args.photons}\n")
    else:
        return None
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.command == "basis" and (args.modes is not None or args.photons is not None):
        model = cfg.model.replace(
            n_modes=cfg.model.n_modes if args.modes is None else args.modes,
            n_photons=cfg.model.n_photons if args.photons is None else args.photons,
        )
        cfg = dataclasses.replace(cfg, model=model)
    if args.command == "rstat":
        if args.window is not None:
            cfg = dataclasses.replace(cfg, rstat=dataclasses.replace(cfg.rstat, window=args.window))
        if args.realizations is not None:
            ens = dataclasses.replace(cfg.ensemble, realizations=args.realizations)
            cfg = dataclasses.replace(cfg, ensemble=ens)
    if args.command in ("sff", "sff-protocol"):
        changes = {
            k: v
            for k, v in (("t_min", args.tmin), ("t_max", args.tmax), ("points", args.points), ("log", args.log))
            if v is not None
        }
        cfg = dataclasses.replace(cfg, sff=dataclasses.replace(cfg.sff, **changes))
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "entangle" and args.traj and not args.config:
            for path in entangle_from_trajectory(args.traj, _output_path(args, None, "metrics.csv"), args.window):
                print(path)
            return 0
        cfg = _load(args)
        if cfg is None:
            print("synthdim: --config is required", file=sys.stderr)
            return 2
        if args.command == "run":
            manifest = run_all(cfg, args.out, resume=args.resume, workers=args.workers)
            log.info(dump_manifest(manifest))
            for name, entry in manifest["tasks"].items():
                print(f"{name}: {entry['status']}" + (f" ({entry['error']})" if "error" in entry else ""))
            return 0 if manifest_ok(manifest) else 1
        func, default_name = TASK_FUNCS[args.command]
        extra = {}
        if args.command == "sff-protocol":
            extra["shots"] = args.shots
        if args.command == "entangle":
            extra["traj"] = args.traj
        outputs = func(cfg, _output_path(args, cfg, default_name), workers=args.workers, resume=args.resume, **extra)
        if args.command == "basis":
            print(f"D = {sector_dimension(cfg.model.n_modes, cfg.model.n_photons)}")
        for path in outputs:
            print(path)
        return 0
    except (SynthDimError, ValueError, RuntimeError, OSError) as exc:
        print(f"synthdim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
