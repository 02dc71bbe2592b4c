"""Jump tracking and equilibrium prediction for the density equation.

A jump between ``rho = 1`` on its dense side and ``rho < 1`` on the other
moves with the Rankine-Hugoniot speed

    dx*/dt = -d_x f(1/rho)|_dense / (1 - rho_dilute) + v(x*).

Once the coarsening has finished, each interacting interval ``[a, b]`` of the
long-time state is fixed by conservation of mass and centre of mass.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BracketError,
    DegenerateJumpError,
    DomainError,
    LostShockError,
    NoConvergenceError,
)
from .macro import MacroState
from .model import ForceLaw, VelocityField

logger = logging.getLogger(__name__)

__all__ = [
    "ShockPath",
    "EquilibriumInterval",
    "rh_speed",
    "pme_jump_speed",
    "track_shock",
    "detect_jump",
    "detect_front",
    "equilibrium_interval",
    "interacting_intervals",
]

DENOMINATOR_GUARD = 1e-9


@dataclass
class ShockPath:
    """Tracked jump location with the one-sided states used for its speed.

    ``left_flux`` holds ``d_x f(1/rho)`` on the dense side and
    ``right_density`` the density on the dilute side (for a left-facing jump
    these are the right- and left-hand states respectively).
    """

    times: np.ndarray
    positions: np.ndarray
    left_flux: np.ndarray
    right_density: np.ndarray
    side: str = "right"
    stopped: str | None = None

    @property
    def monotone(self) -> bool:
        d = np.diff(self.positions)
        return bool(np.all(d >= 0) or np.all(d <= 0))


@dataclass(frozen=True)
class EquilibriumInterval:
    a: float
    b: float
    residual_mass: float
    residual_com: float
    iterations: int = 0

    def as_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "residual_mass": self.residual_mass,
                "residual_com": self.residual_com}


def rh_speed(left_flux: float, right_density: float, v_at_shock: float = 0.0) -> float:
    """Rankine-Hugoniot speed of a jump from ``rho = 1`` to ``right_density < 1``."""
    if not right_density < 1.0 - DENOMINATOR_GUARD:
        raise DegenerateJumpError(
            f"right density {right_density:.12g} reached 1; the jump has dissolved",
            quantity="right_density",
        )
    return -left_flux / (1.0 - right_density) + v_at_shock


def pme_jump_speed(m: float, rho_left: float, drho_left: float) -> float:
    """``m (rho_left - 1)^(m-2) * drho_left`` for ``f(omega) = (1/omega - 1)_+^m``.

    This is the published expression.  Balancing fluxes across a right edge
    gives the outward velocity ``-m (rho-1)^(m-2) d_x rho``, i.e. the
    negative of this value; :func:`track_shock` uses the flux balance.
    """
    if not rho_left > 1.0:
        raise DomainError("rho_left must exceed 1")
    return m * (rho_left - 1.0) ** (m - 2.0) * drho_left


# -- tracking ------------------------------------------------------------------

def _mirror(state: MacroState) -> MacroState:
    return MacroState(state.t, -state.x_right, state.dx, state.rho[::-1])


def detect_jump(state: MacroState, side: str = "right", jump_threshold: float = 0.1) -> float:
    """Interface position of the jump to track, with the dense side as given.

    ``side="right"`` looks for a drop in density from left to right.  The
    largest jump is used if it reaches ``jump_threshold``; otherwise (smooth
    data) the outermost crossing of the level 1.
    """
    d = np.diff(state.rho)
    d = -d if side == "right" else d
    k = int(np.argmax(d))
    if d[k] >= jump_threshold:
        return float(state.x_left + (k + 1) * state.dx)
    rho = state.rho if side == "right" else state.rho[::-1]
    cross = np.nonzero((rho[:-1] >= 1.0) & (rho[1:] < 1.0))[0]
    if cross.size == 0:
        raise DomainError("no jump and no crossing of the level 1 to track")
    k = int(cross[-1])
    if side == "right":
        return float(state.x_left + (k + 1) * state.dx)
    return float(state.x_right - (k + 1) * state.dx)


def detect_front(state: MacroState, side: str = "right", tol: float = 1e-10) -> float:
    """Outer edge of the outermost cell with ``rho > 1 + tol`` on the given side."""
    idx = np.nonzero(state.rho > 1.0 + tol)[0]
    if idx.size == 0:
        raise DomainError("density does not exceed 1; no support edge to track")
    if side == "right":
        return float(state.x_left + (idx[-1] + 1) * state.dx)
    return float(state.x_left + idx[0] * state.dx)


def track_shock(snapshots: Sequence[MacroState], law: ForceLaw, x0: float | None = None,
                field: VelocityField | None = None, side: str = "right", mode: str = "jump",
                jump_threshold: float = 0.1, window: int = 5, on_dissolve: str = "raise",
                legacy_drift_sign: bool = False, front_tol: float = 1e-10) -> ShockPath:
    """Integrate the jump position through a sequence of snapshots.

    Explicit Euler between snapshots.  At the interface nearest ``x*`` the
    dense-side flux comes from the two cells behind it and the dilute state
    from the first cell ahead of it with ``rho < 1``.

    Parameters
    ----------
    side:
        ``"right"`` tracks a jump with the dense region on its left (a right
        edge), ``"left"`` the mirror image.
    mode:
        ``"jump"`` for a Rankine-Hugoniot jump to ``rho < 1``;
        ``"front"`` for a continuous edge onto ``rho = 1`` (porous-medium
        type), moved with ``-d_x f(1/rho) / (rho - 1)`` evaluated behind it.
    on_dissolve:
        ``"raise"`` propagates :class:`DegenerateJumpError` once the jump has
        merged into a region with ``rho >= 1``; ``"stop"`` returns the path so
        far with ``stopped`` set.

    Raises
    ------
    LostShockError
        If, after the jump was first seen, no drop of at least
        ``jump_threshold`` (measured across two adjacent interfaces) lies
        within ``window`` cells of ``x*``.
    """
    if side not in ("right", "left"):
        raise DomainError("side must be 'right' or 'left'")
    if mode not in ("jump", "front"):
        raise DomainError("mode must be 'jump' or 'front'")
    if on_dissolve not in ("raise", "stop"):
        raise DomainError("on_dissolve must be 'raise' or 'stop'")
    if len(snapshots) < 1:
        raise DomainError("no snapshots to track")
    field = field or VelocityField.zero()
    if legacy_drift_sign:
        field = _Negated(field)
    frames = list(snapshots)
    if side == "left":
        frames = [_mirror(s) for s in frames]
        field = field.mirrored()
        if x0 is not None:
            x0 = -x0
    if x0 is None:
        x0 = (detect_front(frames[0], "right", front_tol) if mode == "front"
              else detect_jump(frames[0], "right", jump_threshold))

    times, pos, fluxes, dens = [], [], [], []
    x_star = float(x0)
    acquired = False
    stopped = None
    for k, s in enumerate(frames):
        rho = s.rho
        M = s.M
        p = int(round((x_star - s.x_left) / s.dx))
        p = min(max(p, 2), M - 1)
        F_left = law.of_density(rho[p - 2:p])
        left_flux = float((F_left[1] - F_left[0]) / s.dx)
        lo, hi = max(p - window, 1), min(p + window, M - 1)

        if mode == "jump":
            # drop across two interfaces, so a jump smeared over one cell still counts
            jumps = rho[lo - 1:hi - 1] - rho[lo + 1:hi + 1]
            if np.max(jumps) >= jump_threshold:
                acquired = True
            elif acquired:
                raise LostShockError(
                    f"no jump >= {jump_threshold:g} within {window} cells of x*={_unmirror(x_star, side):.6g}",
                    t=s.t, quantity="x_star",
                )
            ahead = np.nonzero(rho[p:min(p + window + 1, M)] < 1.0 - DENOMINATOR_GUARD)[0]
            right_density = float(rho[p + ahead[0]]) if ahead.size else float(rho[p])
            try:
                speed = rh_speed(left_flux, right_density, float(field(x_star)))
            except DegenerateJumpError as err:
                err.t = s.t
                if on_dissolve == "stop" and acquired:
                    stopped = f"jump dissolved at t={s.t:.6g}"
                    logger.info("shock tracking stopped: %s", stopped)
                    break
                raise
        else:
            above = rho[lo - 1:hi + 1] > 1.0 + front_tol
            if above.any() and not above.all():
                acquired = True
            elif acquired:
                raise LostShockError(
                    f"no support edge within {window} cells of x*={_unmirror(x_star, side):.6g}",
                    t=s.t, quantity="x_star",
                )
            rho_behind = 0.5 * float(rho[p - 2] + rho[p - 1])
            right_density = float(rho[p])
            speed = float(field(x_star))
            if rho_behind > 1.0 + front_tol:
                speed += -left_flux / (rho_behind - 1.0)

        times.append(s.t)
        pos.append(x_star)
        fluxes.append(left_flux)
        dens.append(right_density)
        if k + 1 < len(frames):
            x_star = x_star + speed * (frames[k + 1].t - s.t)

    pos = np.asarray(pos)
    fluxes = np.asarray(fluxes)
    if side == "left":
        pos = -pos
        fluxes = -fluxes
    path = ShockPath(np.asarray(times), pos, fluxes, np.asarray(dens), side, stopped)
    if not path.monotone:
        logger.info("tracked shock position is not monotone in time")
    return path


def _unmirror(x: float, side: str) -> float:
    return -x if side == "left" else x


class _Negated:
    def __init__(self, field: VelocityField):
        self._field = field

    def __call__(self, x):
        return -self._field(x)

    def mirrored(self):
        return _Negated(self._field.mirrored())


# -- equilibrium ---------------------------------------------------------------

class _Cumulative:
    """Exact integrals of a piecewise-constant density and of ``x * rho``."""

    def __init__(self, state: MacroState):
        self.state = state
        e = state.edges
        self.e = e
        self.C = np.concatenate(([0.0], np.cumsum(state.rho * state.dx)))
        self.Cx = np.concatenate(([0.0], np.cumsum(state.rho * 0.5 * (e[1:] ** 2 - e[:-1] ** 2))))

    def _cell(self, y: float) -> int:
        j = int(np.floor((y - self.state.x_left) / self.state.dx))
        return min(max(j, 0), self.state.M - 1)

    def density(self, y: float) -> float:
        return float(self.state.rho[self._cell(y)])

    def mass_to(self, y: float) -> float:
        j = self._cell(y)
        return self.C[j] + self.state.rho[j] * (y - self.e[j])

    def moment_to(self, y: float) -> float:
        j = self._cell(y)
        return self.Cx[j] + self.state.rho[j] * 0.5 * (y * y - self.e[j] ** 2)


def _as_grid(rho0, bracket, dx) -> MacroState:
    if isinstance(rho0, MacroState):
        return rho0
    c, d = bracket
    if dx is None:
        dx = (d - c) / 20000
    return MacroState.from_function(rho0, c, d, dx)


def equilibrium_interval(rho0: MacroState | Callable[[np.ndarray], np.ndarray],
                         bracket: tuple[float, float], dx: float | None = None,
                         tol: float = 1e-8, max_iter: int = 100) -> EquilibriumInterval:
    """Solve ``b - a = int_a^b rho0`` and ``(b^2 - a^2)/2 = int_a^b x rho0``.

    ``rho0`` is a grid state or a function, which is sampled on cells of
    width ``dx`` over the bracket.  Integrals treat the grid density as
    piecewise constant, consistent with the midpoint rule used by the solver.
    Damped Newton; residuals are driven well below ``tol``.
    """
    c, d = bracket
    if not d > c:
        raise DomainError("bracket must satisfy c < d")
    grid = _as_grid(rho0, bracket, dx)
    cum = _Cumulative(grid)
    if cum.density(c) >= 1.0 or cum.density(d) >= 1.0:
        raise DomainError("rho0 must be below 1 at both bracket ends")
    x = grid.x
    sel = (x > c) & (x < d) & (grid.rho > 1.0)
    if not sel.any():
        raise DomainError("rho0 does not exceed 1 inside the bracket")

    idx = np.nonzero(sel)[0]
    s0 = grid.edges[idx[0]]
    s1 = grid.edges[idx[-1] + 1]
    excess = (cum.mass_to(s1) - cum.mass_to(s0)) - (s1 - s0)
    a, b = s0 - max(excess, 0.0) / 2, s1 + max(excess, 0.0) / 2

    def residual(a, b):
        r1 = (b - a) - (cum.mass_to(b) - cum.mass_to(a))
        r2 = 0.5 * (b * b - a * a) - (cum.moment_to(b) - cum.moment_to(a))
        return np.array([r1, r2])

    scale = max(1.0, abs(c), abs(d))
    target = min(tol, 1e-13 * scale**2)
    r = residual(a, b)
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(r)) <= target:
            break
        ra, rb = cum.density(a), cum.density(b)
        J = np.array([[ra - 1.0, 1.0 - rb], [a * (ra - 1.0), b * (1.0 - rb)]])
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise NoConvergenceError("singular Jacobian in equilibrium solve",
                                     quantity="(a, b)") from None
        lam = 1.0
        norm = np.linalg.norm(r)
        for _ in range(40):
            a_new, b_new = a + lam * step[0], b + lam * step[1]
            r_new = residual(a_new, b_new)
            if np.linalg.norm(r_new) < norm and b_new > a_new:
                break
            lam *= 0.5
        else:
            raise NoConvergenceError(
                f"line search failed at (a, b) = ({a:.6g}, {b:.6g}); the dense regions "
                "inside the bracket may not merge into a single interval",
                quantity="(a, b)",
            )
        a, b, r = a_new, b_new, r_new
        if a < c or b > d:
            raise BracketError(f"iterate ({a:.6g}, {b:.6g}) left the bracket ({c}, {d})",
                               quantity="(a, b)")
    if a < c or b > d:
        raise BracketError(f"solution ({a:.6g}, {b:.6g}) lies outside the bracket ({c}, {d})",
                           quantity="(a, b)")
    if np.max(np.abs(r)) > tol:
        raise NoConvergenceError(
            f"equilibrium residual {np.max(np.abs(r)):.3e} after {it} iterations",
            quantity="(a, b)",
        )
    return EquilibriumInterval(float(a), float(b), float(r[0]), float(r[1]), it)


def interacting_intervals(state: MacroState, reference: MacroState | None = None,
                          fill: float = 0.5) -> list[tuple[float, float]]:
    """Maximal runs of cells that belong to an interacting region.

    A cell counts when ``rho >= 1`` or, if ``reference`` (the initial data)
    is given, when it has filled more than ``fill`` of the way from its
    reference value towards 1.
    """
    rho = state.rho
    if reference is None:
        mask = rho >= 1.0
    else:
        base = np.minimum(reference.rho, 1.0)
        mask = rho >= base + fill * (1.0 - base) - 1e-12
        mask &= (rho >= 1.0) | (base < 1.0)
    out = []
    e = state.edges
    i = 0
    while i < rho.size:
        if mask[i]:
            j = i
            while j + 1 < rho.size and mask[j + 1]:
                j += 1
            out.append((float(e[i]), float(e[j + 1])))
            i = j + 1
        else:
            i += 1
    return out
