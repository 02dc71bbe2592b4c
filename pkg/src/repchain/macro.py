"""Explicit finite-difference solver for the density equation

    d_t rho = d_xx f(1/rho) - d_x(v rho) [+ alpha rho (rho_* - rho)]

on a uniform cell-centred grid.  The diffusion part uses the standard
three-point Laplacian of ``f(1/rho)``; drift is first-order upwind in flux
form.  The two edge cells are not transported; they only feel the source
term, if any.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ._timeline import build_timeline
from .errors import (
    BoundaryContaminationError,
    CFLError,
    DomainError,
    NegativeDensityError,
    ZeroMassError,
)
from .model import ForceLaw, VelocityField

logger = logging.getLogger(__name__)

__all__ = [
    "MacroState",
    "GrowthParams",
    "MacroDiagnostics",
    "MacroTrajectory",
    "step_macro",
    "simulate_macro",
    "stable_dt",
    "bump_density",
    "bump_sum",
    "waiting_time_density",
    "ramp_density",
    "mass",
    "center_of_mass",
    "l2_norm",
]

DEFAULT_CFL = 0.1
BOUNDARY_ATOL = 1e-12

Initializer = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class MacroState:
    """Density values at the centres of ``M`` uniform cells starting at ``x_left``."""

    t: float
    x_left: float
    dx: float
    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float)
        if rho.ndim != 1 or rho.size < 3:
            raise DomainError("a macro grid needs at least three cells")
        if not self.dx > 0:
            raise DomainError("grid spacing must be positive")
        if not np.all(np.isfinite(rho)):
            raise DomainError("density must be finite")
        if np.any(rho < 0):
            raise NegativeDensityError("negative density in state", t=self.t, quantity="rho")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_function(cls, func: Initializer, x_min: float, x_max: float, dx: float,
                      t: float = 0.0) -> "MacroState":
        """Sample ``func`` at the cell centres of a grid covering ``[x_min, x_max]``."""
        if not x_max > x_min:
            raise DomainError("x_max must exceed x_min")
        n = int(round((x_max - x_min) / dx))
        centres = x_min + (np.arange(n) + 0.5) * dx
        return cls(t, float(x_min), float(dx), np.asarray(func(centres), dtype=float))

    @property
    def M(self) -> int:
        return self.rho.size

    @property
    def x(self) -> np.ndarray:
        """Cell centres."""
        return self.x_left + (np.arange(self.M) + 0.5) * self.dx

    @property
    def edges(self) -> np.ndarray:
        return self.x_left + np.arange(self.M + 1) * self.dx

    @property
    def x_right(self) -> float:
        return self.x_left + self.M * self.dx

    def with_rho(self, t: float, rho: np.ndarray) -> "MacroState":
        return MacroState(t, self.x_left, self.dx, rho)


@dataclass(frozen=True)
class GrowthParams:
    """Logistic source ``alpha * rho * (rho_star - rho)``."""

    alpha: float
    rho_star: float

    def __post_init__(self):
        if not self.alpha >= 0:
            raise DomainError("growth rate alpha must be nonnegative")
        if not self.rho_star > 0:
            raise DomainError("carrying capacity rho_star must be positive")


@dataclass(frozen=True)
class MacroDiagnostics:
    t: float
    mass: float
    center: float
    l2: float


@dataclass
class MacroTrajectory:
    states: list[MacroState] = field(default_factory=list)
    diagnostics: list[MacroDiagnostics] = field(default_factory=list)
    dt: float = 0.0
    n_steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def diagnostic(self, name: str) -> np.ndarray:
        return np.array([getattr(d, name) for d in self.diagnostics])


# -- integrals ---------------------------------------------------------------

def mass(state: MacroState) -> float:
    """Midpoint-rule integral of ``rho``."""
    return float(np.sum(state.rho) * state.dx)


def center_of_mass(state: MacroState) -> float:
    """``int x rho / int rho``; raises :class:`ZeroMassError` for (near) vacuum."""
    m = mass(state)
    if m < 1e-12:
        raise ZeroMassError("centre of mass of a state without mass", t=state.t)
    return float(np.sum(state.x * state.rho) * state.dx / m)


def l2_norm(state: MacroState) -> float:
    """``sqrt(int rho^2)`` by the midpoint rule."""
    return float(np.sqrt(np.sum(state.rho**2) * state.dx))


def _diagnostics(state: MacroState) -> MacroDiagnostics:
    m = mass(state)
    c = center_of_mass(state) if m >= 1e-12 else float("nan")
    return MacroDiagnostics(state.t, m, c, l2_norm(state))


# -- time stepping -------------------------------------------------------------

def max_diffusivity(state: MacroState, law: ForceLaw) -> float:
    """Bound on ``D(rho)`` over the current state.

    The closed-form supremum over ``(1, max rho]`` where the law provides
    one, else the largest cell value.
    """
    return _sup_d(state.rho, law)


def _sup_d(rho: np.ndarray, law: ForceLaw) -> float:
    rmax = float(np.max(rho))
    bound = law.diffusivity_sup(rmax)
    if bound is not None:
        return bound
    dense = rho[rho > 1.0]
    return float(np.max(law.diffusivity(dense))) if dense.size else 0.0


def stable_dt(state: MacroState, law: ForceLaw, cfl_ratio: float = DEFAULT_CFL) -> float:
    """``cfl_ratio * dx^2 / max(1, sup D)`` for the given state."""
    return cfl_ratio * state.dx**2 / max(1.0, max_diffusivity(state, law))


class _Stepper:
    """Explicit update on raw density arrays for a fixed grid and model."""

    def __init__(self, x: np.ndarray, edges: np.ndarray, dx: float, law: ForceLaw,
                 field: VelocityField, growth: GrowthParams | None, legacy_drift_sign: bool):
        self.x = x
        self.dx = dx
        self.law = law
        self.growth = growth if growth is not None and growth.alpha > 0 else None
        self.vel = None
        self.vmax = 0.0
        if not field.is_zero:
            vel = np.asarray(field(edges[1:-1]), dtype=float)
            self.vel = -vel if legacy_drift_sign else vel
            self.vmax = float(np.max(np.abs(self.vel)))
            self.pos = self.vel > 0

    def __call__(self, rho: np.ndarray, dt: float, t_new: float) -> np.ndarray:
        dx = self.dx
        lam = dt / dx**2
        d_max = _sup_d(rho, self.law)
        if 2.0 * lam * d_max + dt * self.vmax / dx > 1.0:
            raise CFLError(
                f"dt={dt:.3e} unstable (sup D={d_max:.3g}, sup|v|={self.vmax:.3g}, dx={dx:.3g})",
                t=t_new, quantity="dt",
            )
        F = self.law._of_density_fast(rho)
        new = rho.copy()
        new[1:-1] += lam * (F[2:] - 2.0 * F[1:-1] + F[:-2])
        if self.vel is not None:
            # interface i+1/2 sits between cells i and i+1
            flux = self.vel * np.where(self.pos, rho[:-1], rho[1:])
            new[1:-1] -= dt / dx * (flux[1:] - flux[:-1])
        if self.growth is not None:
            # the source acts on the far field too, so edge cells follow the local ODE
            g = self.growth
            new += dt * g.alpha * rho * (g.rho_star - rho)

        if not np.all(np.isfinite(new)) or new.min() < 0:
            i = int(np.argmin(np.nan_to_num(new, nan=-np.inf)))
            raise NegativeDensityError(
                f"density {new[i]:.3e} at x={self.x[i]:.6g}; reduce dt",
                t=t_new, quantity="rho",
            )
        for inner, edge in ((1, 0), (-2, -1)):
            if abs(new[inner] - new[edge]) > BOUNDARY_ATOL * max(1.0, abs(new[edge])):
                raise BoundaryContaminationError(
                    "solution reached the grid edge; enlarge the domain",
                    t=t_new, quantity="rho",
                )
        return new


def step_macro(state: MacroState, dt: float, law: ForceLaw,
               field: VelocityField | None = None, growth: GrowthParams | None = None,
               legacy_drift_sign: bool = False) -> MacroState:
    """One explicit step.

    The drift transports density along ``v``.  ``legacy_drift_sign=True``
    reverses it, i.e. discretises ``+d_x(v rho)`` instead.

    Raises
    ------
    CFLError
        If ``dt`` violates the explicit stability bound
        ``2 dt/dx^2 sup D + dt sup|v| / dx <= 1`` for the current state.
    NegativeDensityError, BoundaryContaminationError
    """
    if not dt > 0:
        raise DomainError("time step must be positive")
    stepper = _Stepper(state.x, state.edges, state.dx, law, field or VelocityField.zero(),
                       growth, legacy_drift_sign)
    t_new = state.t + dt
    return MacroState(t_new, state.x_left, state.dx, stepper(state.rho, dt, t_new))


def simulate_macro(state0: MacroState, T: float, law: ForceLaw,
                   field: VelocityField | None = None, growth: GrowthParams | None = None,
                   cfl_ratio: float = DEFAULT_CFL, sample_every: int = 1,
                   sample_times: Iterable[float] = (), legacy_drift_sign: bool = False,
                   dt: float | None = None) -> MacroTrajectory:
    """Integrate over a duration ``T`` with a fixed step.

    The step is ``cfl_ratio * dx^2 / max(1, sup D(rho_0))`` unless ``dt`` is
    given; for ``F1``, ``F2`` and ``power(1)`` this is ``cfl_ratio * dx^2``.
    Snapshots are kept at the start, every ``sample_every`` steps, at each of
    ``sample_times`` (measured from ``state0.t``) and at the end.
    """
    field = field or VelocityField.zero()
    if dt is None:
        dt = stable_dt(state0, law, cfl_ratio)
    for inner, edge in ((1, 0), (-2, -1)):
        if abs(state0.rho[inner] - state0.rho[edge]) > BOUNDARY_ATOL * max(1.0, abs(state0.rho[edge])):
            raise BoundaryContaminationError(
                "initial density is not constant on the two outermost cells",
                t=state0.t, quantity="rho",
            )
    offsets, record = build_timeline(T, dt, sample_every, sample_times)
    t0 = state0.t
    stepper = _Stepper(state0.x, state0.edges, state0.dx, law, field, growth, legacy_drift_sign)
    traj = MacroTrajectory(dt=dt, n_steps=offsets.size - 1)
    traj.states.append(state0)
    traj.diagnostics.append(_diagnostics(state0))
    rho = np.array(state0.rho)
    for k in range(1, offsets.size):
        t_k = t0 + offsets[k]
        rho = stepper(rho, offsets[k] - offsets[k - 1], t_k)
        if record[k]:
            state = MacroState(t_k, state0.x_left, state0.dx, rho)
            traj.states.append(state)
            traj.diagnostics.append(_diagnostics(state))
    logger.debug("macro run: %d steps, dt=%g", traj.n_steps, dt)
    return traj


# -- initial data --------------------------------------------------------------

def bump_density(h: float, b: float, m: float = 0.0, offset: float = 0.0) -> Initializer:
    """``offset + h exp(b^2 / ((x-m)^2 - b^2))`` on ``|x - m| < b``, ``offset`` elsewhere."""
    if not b > 0:
        raise DomainError("bump half-width must be positive")
    if h < 0 or offset < 0:
        raise DomainError("bump height and offset must be nonnegative")

    def rho0(x):
        x = np.asarray(x, dtype=float)
        d2 = (x - m) ** 2
        inside = d2 < b * b
        denom = np.where(inside, d2 - b * b, -1.0)
        return offset + np.where(inside, h * np.exp(b * b / denom), 0.0)

    return rho0


def bump_sum(bumps: Sequence[tuple[float, float, float]], offset: float = 0.0) -> Initializer:
    """Sum of bumps ``(h, b, m)`` on a constant ``offset``."""
    parts = [bump_density(h, b, m) for h, b, m in bumps]
    if offset < 0:
        raise DomainError("offset must be nonnegative")

    def rho0(x):
        x = np.asarray(x, dtype=float)
        out = np.full_like(x, offset)
        for p in parts:
            out = out + p(x)
        return out

    return rho0


_WAITING_COEFFS = (-12800.0, 15360.0, -7200.0, 1600.0, -150.0, 0.0, 13.0 / 8.0)


def waiting_time_density() -> Initializer:
    """Degree-six profile in ``|x|`` on ``[-1/4, 1/4]``, equal to 1 outside.

    The profile meets the level 1 at ``|x| = 1/4`` with four vanishing
    derivatives, so the flux ``d_x f(1/rho)`` vanishes at the edge.
    """

    def rho0(x):
        r = np.abs(np.asarray(x, dtype=float))
        return np.where(r <= 0.25, np.polyval(_WAITING_COEFFS, r), 1.0)

    return rho0


def ramp_density(slope: float, halfwidth: float, center: float = 0.0,
                 crossing: float | None = None) -> Initializer:
    """Linear profile crossing the level 1 with slope ``-slope``.

    Without ``crossing`` this is ``1 - slope (x - center)`` clamped to
    ``|x - center| <= halfwidth``.  With ``crossing = L`` it is the ridge
    ``1 - slope (|x - center| - L)``, clamped the same way, which crosses 1
    at ``center +- L`` and has a sub-threshold far field on both sides.
    """
    if not halfwidth > 0:
        raise DomainError("ramp half-width must be positive")
    if slope * halfwidth >= 1:
        raise DomainError("ramp would reach negative density")
    if crossing is not None and crossing < 0:
        raise DomainError("ramp crossing distance must be nonnegative")

    def rho0(x):
        d = np.asarray(x, dtype=float) - center
        if crossing is not None:
            d = np.abs(d) - crossing
        return 1.0 - slope * np.clip(d, -halfwidth, halfwidth)

    return rho0


def constant_density(value: float) -> Initializer:
    if value < 0:
        raise DomainError("density must be nonnegative")
    return lambda x: np.full_like(np.asarray(x, dtype=float), value)
