"""Command line front-end.

Each subcommand runs one experiment from a YAML configuration or a named
preset and writes CSV/JSON results plus ``manifest.json`` into the output
directory.  Exit status is 0 on success, 2 for configuration errors and 3
for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

import yaml

from . import __version__
from .bridge import compare_scales
from .config import RunConfig, get_preset, list_presets, load_config
from .errors import ConfigError, DomainError, NumericalError
from .io import (
    equilibrium_json,
    write_comparison,
    write_equilibrium,
    write_macro,
    write_macro_diagnostics,
    write_micro,
    write_micro_diagnostics,
    write_shock,
)
from .macro import MacroTrajectory, simulate_macro
from .micro import simulate_micro
from .shock import equilibrium_interval, track_shock

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

SUBCOMMANDS = {
    "simulate-micro": "micro",
    "simulate-macro": "macro",
    "shock-track": "shock-track",
    "equilibrium": "equilibrium",
    "compare": "compare",
    "run": None,
}


def _subsample(traj: MacroTrajectory, every: int) -> MacroTrajectory:
    if every == 1:
        return traj
    keep = list(range(0, len(traj.states), every))
    if keep[-1] != len(traj.states) - 1:
        keep.append(len(traj.states) - 1)
    return MacroTrajectory([traj.states[k] for k in keep],
                           [traj.diagnostics[k] for k in keep], traj.dt, traj.n_steps)


def _run_micro(cfg: RunConfig, out: Path, resolved: dict, extra_times=()):
    law, field = cfg.build_law(), cfg.build_field()
    state0 = cfg.build_particles()
    times = sorted(set(cfg.sample_times) | set(extra_times))
    traj = simulate_micro(state0, cfg.T, law, field, dt=cfg.dt, fp_iters=cfg.fp_iters,
                          sample_every=cfg.sample_every, sample_times=times)
    resolved.update(micro_N=state0.N, micro_mass=state0.mass, micro_ds=state0.ds,
                    micro_dt=traj.dt, micro_steps=traj.n_steps, fp_iters=cfg.fp_iters,
                    law_lipschitz=law.lipschitz, velocity_gamma=field.gamma)
    write_micro(traj, out / "micro.csv")
    write_micro_diagnostics(traj, out / "micro_diagnostics.csv")
    return traj


def _run_macro(cfg: RunConfig, out: Path, resolved: dict, legacy: bool, extra_times=(),
               export=True):
    law, field, growth = cfg.build_law(), cfg.build_field(), cfg.build_growth()
    state0 = cfg.build_density()
    times = sorted(set(cfg.sample_times) | set(extra_times))
    traj = simulate_macro(state0, cfg.T, law, field, growth, cfl_ratio=cfg.cfl_ratio,
                          sample_every=cfg.sample_every, sample_times=times,
                          legacy_drift_sign=legacy, dt=cfg.dt)
    resolved.update(macro_cells=state0.M, macro_x_left=state0.x_left, macro_dx=state0.dx,
                    macro_dt=traj.dt, macro_steps=traj.n_steps, cfl_ratio=cfg.cfl_ratio,
                    legacy_drift_sign=legacy, law_lipschitz=law.lipschitz,
                    velocity_gamma=field.gamma,
                    growth=None if growth is None else [growth.alpha, growth.rho_star])
    if export:
        sub = _subsample(traj, cfg.export_every)
        write_macro(sub, out / "macro.csv")
        write_macro_diagnostics(traj, out / "macro_diagnostics.csv")
    return traj


def execute(cfg: RunConfig, out: str | Path, legacy_drift_sign: bool = False) -> dict:
    """Run one configuration, write its outputs and return the manifest."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    legacy = legacy_drift_sign or cfg.legacy_drift_sign
    resolved: dict = {}
    if cfg.scale == "micro":
        _run_micro(cfg, out, resolved)
    elif cfg.scale == "macro":
        _run_macro(cfg, out, resolved, legacy)
    elif cfg.scale == "shock-track":
        traj = _run_macro(cfg, out, resolved, legacy)
        path = track_shock(traj.states, cfg.build_law(), x0=cfg.shock_x0,
                           field=cfg.build_field(), side=cfg.shock_side, mode=cfg.shock_mode,
                           jump_threshold=cfg.jump_threshold, window=cfg.window,
                           on_dissolve=cfg.on_dissolve, legacy_drift_sign=legacy)
        resolved.update(shock_x0=float(path.positions[0]), shock_monotone=path.monotone,
                        shock_stopped=path.stopped)
        write_shock(path, out / "shock.csv")
    elif cfg.scale == "equilibrium":
        rho0 = cfg.build_density()
        result = equilibrium_interval(rho0, tuple(cfg.bracket), tol=cfg.tol)
        resolved.update(macro_cells=rho0.M, macro_dx=rho0.dx, iterations=result.iterations)
        write_equilibrium(result, out / "equilibrium.json")
        print(equilibrium_json(result))
    elif cfg.scale == "compare":
        micro = _run_micro(cfg, out, resolved, cfg.compare_times)
        macro = _run_macro(cfg, out, resolved, legacy, cfg.compare_times)
        records = compare_scales(micro, macro, cfg.compare_times)
        write_comparison(records, micro.states[0].N, macro.states[0].dx, out / "compare.csv")
    else:  # pragma: no cover - guarded by validation
        raise ConfigError(f"unknown scale {cfg.scale!r}")

    manifest = {
        "tool": "repchain",
        "version": __version__,
        "config": cfg.to_dict(),
        "resolved": resolved,
        "outputs": sorted(p.name for p in out.iterdir() if p.name != "manifest.json"),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _job(args):
    cfg_dict, out, legacy = args
    cfg = RunConfig.from_dict(cfg_dict)
    try:
        execute(cfg, out, legacy)
    except (ConfigError, DomainError) as err:
        return cfg.name, EXIT_CONFIG, str(err)
    except NumericalError as err:
        return cfg.name, EXIT_NUMERICAL, str(err)
    return cfg.name, EXIT_OK, ""


def _parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"--set expects KEY=VALUE, got {text!r}")
    key, value = text.split("=", 1)
    try:
        return key.strip(), yaml.safe_load(value)
    except yaml.YAMLError:
        raise ConfigError(f"cannot parse value in --set {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="repchain",
        description="Particle chains with finite-range repulsion and their density limit.",
    )
    parser.add_argument("--version", action="version", version=f"repchain {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("presets", help="list the built-in experiments")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help="run the configured scale" if name == "run"
                           else f"run a '{SUBCOMMANDS[name]}' experiment")
        p.add_argument("--config", action="append", default=[], metavar="PATH",
                       help="YAML configuration (repeat for several runs)")
        p.add_argument("--preset", action="append", default=[], metavar="NAME",
                       help="built-in configuration (repeat for several runs)")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration value")
        p.add_argument("--legacy-drift-sign", action="store_true",
                       help="discretise +d_x(v rho) instead of -d_x(v rho)")
        p.add_argument("--sweep", type=int, default=0, metavar="N",
                       help="run the given configurations on N worker processes")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _collect(args, scale) -> list[RunConfig]:
    cfgs = [load_config(p) for p in args.config] + [get_preset(n) for n in args.preset]
    if not cfgs:
        raise ConfigError("give at least one --config or --preset")
    overrides = dict(_parse_override(s) for s in args.set)
    if scale is not None:
        overrides["scale"] = scale
    if overrides:
        cfgs = [c.replace(**overrides) for c in cfgs]
    names = [c.name for c in cfgs]
    if len(set(names)) != len(names):
        raise ConfigError("runs in one invocation need distinct names")
    return cfgs


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "presets":
        for name, desc in list_presets():
            print(f"{name:22s} {desc}")
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfgs = _collect(args, SUBCOMMANDS[args.command])
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    def target(cfg):
        if len(cfgs) == 1:
            return Path(args.out or cfg.out or Path("runs") / cfg.name)
        return Path(args.out or "runs") / cfg.name

    jobs = [(c.to_dict(), str(target(c)), args.legacy_drift_sign) for c in cfgs]
    if args.sweep and args.sweep > 0:
        with ProcessPoolExecutor(max_workers=args.sweep) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    status = EXIT_OK
    for name, code, msg in results:
        if code != EXIT_OK:
            kind = "config error" if code == EXIT_CONFIG else "numerical error"
            print(f"{name}: {kind}: {msg}", file=sys.stderr)
            status = max(status, code)
        else:
            logger.info("%s: done", name)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
