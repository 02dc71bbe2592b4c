"""Conversion between particle positions and grid densities.

Particles are placed at equal-mass quantiles of a grid density, so that the
scaled gaps satisfy ``omega ~ 1/rho``.  In the opposite direction the chain
defines the piecewise-constant density ``ds / (x_i - x_{i-1})`` on each
interval, which is cell-averaged onto a uniform grid through its cumulative
mass function.
"""
from __future__ import annotations

import logging
import warnings
from typing import Sequence

import numpy as np

from ._timeline import find_time
from .errors import DomainError, TimeAlignmentError, ZeroMassError
from .macro import MacroState, MacroTrajectory
from .micro import MicroState, MicroTrajectory

logger = logging.getLogger(__name__)

__all__ = [
    "RHO_CAP",
    "particles_from_density",
    "density_from_particles",
    "interval_densities",
    "l1_distance",
    "compare_scales",
]

#: Density assigned to the interval between coincident particles.
RHO_CAP = 1e6


def particles_from_density(rho0: MacroState, N: int, match_density: bool = False) -> MicroState:
    """Place ``N + 1`` particles at equal-mass quantiles of ``rho0``.

    The cumulative mass of the piecewise-constant grid density is inverted
    exactly, so each interval ``[x_{i-1}, x_i]`` carries ``1/N`` of the total
    mass.  Quantiles falling on a flat (vacuum) stretch go to its left end.

    Parameters
    ----------
    match_density:
        By default the chain carries unit Lagrangian mass (``ds = 1/N``) and
        ``omega = 1/(rho * total_mass)``.  With ``True`` the chain mass is the
        total mass of ``rho0`` so that ``omega = 1/rho``, which is what a
        micro run comparable with a macro run of the same data needs.
    """
    if N < 1:
        raise DomainError("N must be at least 1")
    rho = np.asarray(rho0.rho, dtype=float)
    e = rho0.edges
    C = np.concatenate(([0.0], np.cumsum(rho * rho0.dx)))
    total = C[-1]
    if not total > 0:
        raise ZeroMassError("density has no mass", t=rho0.t, quantity="rho")
    q = np.arange(N + 1) / N * total
    k = np.searchsorted(C, q, side="left")
    x = np.empty(N + 1)
    for i, (qi, ki) in enumerate(zip(q, k)):
        if C[ki] == qi:
            x[i] = e[ki]
        else:
            j = ki - 1
            x[i] = e[j] + (qi - C[j]) / rho[j]
    # start of the support rather than the grid edge
    first = int(np.argmax(rho > 0))
    x[0] = e[first]
    x = np.maximum.accumulate(x)
    return MicroState(rho0.t, x, total if match_density else 1.0)


def interval_densities(state: MicroState) -> np.ndarray:
    """``rho_i = 1/omega_i`` on each interval, capped at :data:`RHO_CAP`."""
    om = state.omega
    if np.any(om == 0):
        msg = f"{int(np.sum(om == 0))} coincident particle pair(s); density capped at {RHO_CAP:g}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        logger.warning(msg)
    with np.errstate(divide="ignore"):
        return np.minimum(np.where(om > 0, 1.0 / np.where(om > 0, om, 1.0), np.inf), RHO_CAP)


def density_from_particles(state: MicroState, grid: MacroState | None = None,
                           cells_per_gap: int = 20) -> MacroState:
    """Cell averages of the particle density on a uniform grid.

    ``grid`` supplies ``x_left``, ``dx`` and the number of cells (its values
    are ignored).  By default ``cells_per_gap * N`` cells span ``[x_0, x_N]``.
    The density is zero outside the chain.
    """
    x = state.x
    ds = state.ds
    if grid is None:
        span = x[-1] - x[0]
        if not span > 0:
            raise DomainError("all particles coincide; give an explicit grid")
        M = max(3, cells_per_gap * state.N)
        x_left, dx = float(x[0]), span / M
    else:
        x_left, dx, M = grid.x_left, grid.dx, grid.M
    rho_i = interval_densities(state)
    edges = x_left + np.arange(M + 1) * dx
    # cumulative mass G at each grid edge
    i = np.searchsorted(x, edges, side="right") - 1
    inside = (i >= 0) & (i < state.N)
    ic = np.clip(i, 0, state.N - 1)
    G = np.where(inside, ic * ds + (edges - x[ic]) * rho_i[ic], 0.0)
    G = np.where(i >= state.N, state.N * ds, G)
    rho = np.minimum(np.diff(G) / dx, RHO_CAP)
    return MacroState(state.t, x_left, dx, np.maximum(rho, 0.0))


def _same_grid(a: MacroState, b: MacroState) -> bool:
    return (a.M == b.M and np.isclose(a.dx, b.dx, rtol=1e-12)
            and np.isclose(a.x_left, b.x_left, rtol=0, atol=1e-12 * max(1.0, abs(a.dx) * a.M)))


def l1_distance(a: MacroState, b: MacroState) -> float:
    """``int |a - b| dx`` for two densities on the same grid."""
    if not _same_grid(a, b):
        raise DomainError("densities live on different grids")
    return float(np.sum(np.abs(a.rho - b.rho)) * a.dx)


def compare_scales(micro_traj: MicroTrajectory, macro_traj: MacroTrajectory,
                   times: Sequence[float]) -> list[tuple[float, float]]:
    """L1 distance between micro and macro densities at the requested times.

    The micro density is resampled onto the macro grid.

    Raises
    ------
    TimeAlignmentError
        If a time was not recorded by either trajectory.
    """
    out = []
    mt, Mt = micro_traj.times, macro_traj.times
    for t in times:
        i = find_time(mt, t)
        j = find_time(Mt, t)
        if i is None or j is None:
            which = "micro" if i is None else "macro"
            raise TimeAlignmentError(f"time {t:g} missing from the {which} trajectory",
                                     t=t, quantity="t")
        macro = macro_traj.states[j]
        micro = density_from_particles(micro_traj.states[i], grid=macro)
        out.append((float(t), l1_distance(micro, macro)))
    return out
