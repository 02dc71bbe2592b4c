"""CSV and JSON export.

Floats are written with ``repr`` so that output is exact and identical
between runs.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError
from .macro import MacroState, MacroTrajectory
from .micro import MicroTrajectory
from .shock import EquilibriumInterval, ShockPath

__all__ = [
    "write_micro",
    "write_micro_diagnostics",
    "write_macro",
    "write_macro_diagnostics",
    "write_shock",
    "equilibrium_json",
    "write_equilibrium",
    "write_comparison",
    "read_density_csv",
]


def _num(v) -> str:
    return repr(float(v))


def _write(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_micro(traj: MicroTrajectory, path) -> Path:
    """Long format ``t,i,x,omega``; ``omega`` is empty for ``i = 0``."""
    def rows():
        for s in traj.states:
            om = s.omega
            t = _num(s.t)
            yield (t, "0", _num(s.x[0]), "")
            for i in range(1, s.x.size):
                yield (t, str(i), _num(s.x[i]), _num(om[i - 1]))
    return _write(path, ("t", "i", "x", "omega"), rows())


def write_micro_diagnostics(traj: MicroTrajectory, path) -> Path:
    names = ("t", "xbar", "variance", "spread", "tv_omega", "omega_min", "omega_max")
    return _write(path, names,
                  ([_num(getattr(d, n)) for n in names] for d in traj.diagnostics))


def write_macro(traj: MacroTrajectory, path) -> Path:
    """Long format ``t,x,rho`` at cell centres."""
    def rows():
        for s in traj.states:
            t = _num(s.t)
            for xc, r in zip(s.x, s.rho):
                yield (t, _num(xc), _num(r))
    return _write(path, ("t", "x", "rho"), rows())


def write_macro_diagnostics(traj: MacroTrajectory, path) -> Path:
    names = ("t", "mass", "center", "l2")
    return _write(path, names,
                  ([_num(getattr(d, n)) for n in names] for d in traj.diagnostics))


def write_shock(path_obj: ShockPath, path) -> Path:
    rows = zip(path_obj.times, path_obj.positions, path_obj.left_flux, path_obj.right_density)
    return _write(path, ("t", "x_star", "left_flux", "right_density"),
                  ([_num(v) for v in r] for r in rows))


def equilibrium_json(result: EquilibriumInterval) -> str:
    return json.dumps(result.as_dict(), indent=2)


def write_equilibrium(result: EquilibriumInterval, path) -> Path:
    path = Path(path)
    path.write_text(equilibrium_json(result) + "\n")
    return path


def write_comparison(records: Sequence[tuple[float, float]], N: int, dx: float, path) -> Path:
    return _write(path, ("t", "l1_error", "N", "dx"),
                  ((_num(t), _num(e), str(int(N)), _num(dx)) for t, e in records))


def read_density_csv(path, t: float = 0.0) -> MacroState:
    """Read a uniform-grid density from a CSV with header ``x,rho`` (cell centres)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [n.strip() for n in reader.fieldnames] != ["x", "rho"]:
            raise DomainError(f"{path}: expected header 'x,rho'")
        data = np.array([(float(r["x"]), float(r["rho"])) for r in reader])
    if data.shape[0] < 3:
        raise DomainError(f"{path}: need at least three cells")
    x, rho = data[:, 0], data[:, 1]
    d = np.diff(x)
    dx = float(np.mean(d))
    if not dx > 0 or np.max(np.abs(d - dx)) > 1e-9 * max(1.0, dx):
        raise DomainError(f"{path}: x must be uniformly spaced and increasing")
    return MacroState(t, float(x[0] - dx / 2), dx, rho)
