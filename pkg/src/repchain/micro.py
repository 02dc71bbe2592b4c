"""Particle chain with finite-range nearest-neighbour repulsion.

Positions ``x_0 <= ... <= x_N`` evolve by the overdamped law

    dx_i/dt = (f(omega_i) - f(omega_{i+1})) / ds + v(x_i)

with scaled gaps ``omega_i = (x_i - x_{i-1}) / ds`` and one-sided forces on
the two end particles.  The Lagrangian spacing is ``ds = mass / N``; the
default ``mass = 1`` is the usual scaling ``ds = 1/N``.

Time stepping is implicit Euler, solved by Jacobi fixed-point sweeps.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._timeline import build_timeline
from .errors import DomainError, NonContractionError, OrderViolationError
from .model import ForceLaw, VelocityField

logger = logging.getLogger(__name__)

__all__ = [
    "MicroState",
    "MicroDiagnostics",
    "MicroTrajectory",
    "gaps",
    "positions_from_gaps",
    "velocities",
    "step_implicit",
    "simulate_micro",
    "minmax_envelope",
    "variance_rate",
    "averaged_positions",
    "diagnostics",
]

DEFAULT_FP_ITERS = 40
DEFAULT_CFL = 0.1
_EPS4 = 4 * np.finfo(float).eps


@dataclass(frozen=True)
class MicroState:
    """Time stamp and ordered particle positions.

    ``mass`` is the length of the Lagrangian interval carried by the chain,
    so that ``ds = mass / N`` and each gap holds mass ``ds``.
    """

    t: float
    x: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim != 1 or x.size < 2:
            raise DomainError("a chain needs at least two particles")
        if not np.all(np.isfinite(x)):
            raise DomainError("particle positions must be finite")
        if np.any(np.diff(x) < 0):
            raise OrderViolationError("particle positions are not nondecreasing", t=self.t)
        if not self.mass > 0:
            raise DomainError("chain mass must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def N(self) -> int:
        """Number of gaps (particles minus one)."""
        return self.x.size - 1

    @property
    def ds(self) -> float:
        return self.mass / self.N

    @property
    def omega(self) -> np.ndarray:
        return gaps(self)


@dataclass(frozen=True)
class MicroDiagnostics:
    t: float
    xbar: float
    variance: float
    spread: float
    tv_omega: float
    omega_min: float
    omega_max: float


@dataclass
class MicroTrajectory:
    """Sampled states and their diagnostics."""

    states: list[MicroState] = field(default_factory=list)
    diagnostics: list[MicroDiagnostics] = field(default_factory=list)
    dt: float = 0.0
    n_steps: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def diagnostic(self, name: str) -> np.ndarray:
        return np.array([getattr(d, name) for d in self.diagnostics])


def gaps(state: MicroState) -> np.ndarray:
    """Scaled gaps ``omega_i = (x_i - x_{i-1}) / ds``, ``i = 1..N``."""
    return np.diff(state.x) / state.ds


def positions_from_gaps(omega: Sequence[float], x0: float, mass: float = 1.0) -> np.ndarray:
    """Invert :func:`gaps`: ``x_i = x_0 + ds * sum_{j<=i} omega_j``."""
    omega = np.asarray(omega, dtype=float)
    ds = mass / omega.size
    return x0 + np.concatenate(([0.0], np.cumsum(omega * ds)))


def velocities(x: np.ndarray, ds: float, law: ForceLaw, field: VelocityField) -> np.ndarray:
    """Right-hand side of the particle system at positions ``x``."""
    force = law(np.diff(x) / ds) / ds
    out = np.empty_like(x)
    out[0] = -force[0]
    out[-1] = force[-1]
    out[1:-1] = force[:-1] - force[1:]
    if not field.is_zero:
        out += field(x)
    return out


def _check_micro_law(law: ForceLaw):
    if not law.bounded:
        raise DomainError(
            f"{law.name} is unbounded near omega = 0 and is not admitted for particles"
        )


class _ImplicitStepper:
    """Implicit Euler on raw position arrays for a fixed model and spacing."""

    def __init__(self, ds: float, law: ForceLaw, field: VelocityField, fp_iters: int):
        self.ds = ds
        self.law = law
        self.field = None if field.is_zero else field
        self.fp_iters = fp_iters

    def rhs(self, x: np.ndarray) -> np.ndarray:
        force = self.law._eval_fast((x[1:] - x[:-1]) / self.ds) / self.ds
        out = np.empty_like(x)
        out[0] = -force[0]
        out[-1] = force[-1]
        out[1:-1] = force[:-1] - force[1:]
        if self.field is not None:
            out += self.field(x)
        return out

    def __call__(self, xn: np.ndarray, dt: float, t_new: float) -> np.ndarray:
        atol = _EPS4 * (1.0 + max(abs(xn[0]), abs(xn[-1])))
        y = xn
        residuals = []
        for _ in range(self.fp_iters):
            y_new = xn + dt * self.rhs(y)
            res = float(np.abs(y_new - y).max())
            residuals.append(res)
            y = y_new
            if res <= atol:
                break
        else:
            stalled = len(residuals) > 5 and residuals[-1] >= residuals[-6]
            if stalled and residuals[-1] > 100 * atol:
                raise NonContractionError(
                    f"fixed-point residual stalled at {residuals[-1]:.3e}; reduce dt",
                    t=t_new, quantity="fixed-point residual",
                )
        if (y[1:] < y[:-1]).any():
            raise OrderViolationError("step produced unordered positions; reduce dt",
                                      t=t_new, quantity="x")
        return y


def step_implicit(state: MicroState, dt: float, law: ForceLaw, field: VelocityField,
                  fp_iters: int = DEFAULT_FP_ITERS) -> MicroState:
    """Advance one implicit Euler step.

    Solves ``x = x^n + dt * velocities(x)`` by Jacobi sweeps started at
    ``x^n``.  Sweeps stop early once the update is at rounding level.

    Raises
    ------
    NonContractionError
        If the sweep residual did not decrease over the last five sweeps.
    OrderViolationError
        If the result is not ordered.
    """
    _check_micro_law(law)
    if not dt > 0:
        raise DomainError("time step must be positive")
    if fp_iters < 1:
        raise DomainError("fp_iters must be >= 1")
    stepper = _ImplicitStepper(state.ds, law, field, fp_iters)
    y = stepper(state.x, dt, state.t + dt)
    return MicroState(state.t + dt, y, state.mass)


def diagnostics(state: MicroState) -> MicroDiagnostics:
    """Centre of mass, variance, spread and gap statistics of a state."""
    x = state.x
    om = gaps(state)
    xbar = float(np.mean(x))
    return MicroDiagnostics(
        t=state.t,
        xbar=xbar,
        variance=float(np.sum((x - xbar) ** 2) / state.N),
        spread=float(x[-1] - x[0]),
        tv_omega=float(np.sum(np.abs(np.diff(om)))),
        omega_min=float(np.min(om)),
        omega_max=float(np.max(om)),
    )


def simulate_micro(state0: MicroState, T: float, law: ForceLaw, field: VelocityField,
                   dt: float | None = None, fp_iters: int = DEFAULT_FP_ITERS,
                   sample_every: int = 1, sample_times: Iterable[float] = ()) -> MicroTrajectory:
    """Integrate from ``state0.t`` over a duration ``T``.

    ``dt`` defaults to ``0.1 * ds**2``.  States and diagnostics are stored at
    the start, every ``sample_every`` steps, at each of ``sample_times``
    (measured from ``state0.t``) and at the end.
    """
    _check_micro_law(law)
    if fp_iters < 1:
        raise DomainError("fp_iters must be >= 1")
    if dt is None:
        dt = DEFAULT_CFL * state0.ds**2
    offsets, record = build_timeline(T, dt, sample_every, sample_times)
    t0 = state0.t
    stepper = _ImplicitStepper(state0.ds, law, field, fp_iters)
    traj = MicroTrajectory(dt=dt, n_steps=offsets.size - 1)
    traj.states.append(state0)
    traj.diagnostics.append(diagnostics(state0))
    x = state0.x
    for k in range(1, offsets.size):
        # the clock is pinned to the timeline to avoid accumulating rounding
        t_k = t0 + offsets[k]
        x = stepper(x, offsets[k] - offsets[k - 1], t_k)
        if record[k]:
            state = MicroState(t_k, x, state0.mass)
            traj.states.append(state)
            traj.diagnostics.append(diagnostics(state))
    logger.debug("micro run: %d steps, dt=%g", traj.n_steps, dt)
    return traj


def minmax_envelope(omega0: Sequence[float], field: VelocityField, t: float) -> tuple[float, float]:
    """Bounds ``(omega_min e^{-gamma t}, omega_max e^{gamma t})`` for the gaps at time ``t``.

    ``omega_max`` includes the interaction radius 1.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    om = np.asarray(omega0, dtype=float)
    g = field.gamma
    lo = float(np.min(om)) * np.exp(-g * t)
    hi = max(1.0, float(np.max(om))) * np.exp(g * t)
    return float(lo), float(hi)


def variance_rate(state: MicroState, law: ForceLaw, field: VelocityField) -> float:
    """Time derivative of the variance ``(1/N) sum (x_i - xbar)^2``."""
    x = state.x
    om = gaps(state)
    xbar = np.mean(x)
    v = field(x)
    total_v = np.sum(v)
    # sum_i (x_i - xbar) * sum_{j != i} v_j
    cross = np.sum((x - xbar) * (total_v - v))
    return float(2.0 / state.N * (np.sum(law(om) * om) - cross))


def averaged_positions(omega: Sequence[float], xbar: float, mass: float = 1.0) -> MicroState:
    """Rebuild positions from gaps and the centre of mass ``xbar``.

    ``x_0`` is chosen so that the mean of the returned positions is ``xbar``.
    """
    om = np.asarray(omega, dtype=float)
    N = om.size
    ds = mass / N
    j = np.arange(1, N + 1)
    # mean_i sum_{j<=i} omega_j = sum_j (N - j + 1) omega_j / (N + 1)
    x0 = xbar - ds / (N + 1) * np.sum((N - j + 1) * om)
    x = x0 + np.concatenate(([0.0], np.cumsum(om * ds)))
    return MicroState(0.0, x, mass)
