"""Repulsion laws and external velocity fields shared by both scales.

A :class:`ForceLaw` is the dimensionless nearest-neighbour repulsion ``f``
acting on the scaled gap ``omega``; it vanishes for ``omega >= 1``.  A
:class:`VelocityField` is the external velocity ``v(x)`` together with its
Lipschitz bound ``gamma``.

Both are immutable and can be shared between concurrent simulations.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "OMEGA_FLOOR",
    "ForceLaw",
    "VelocityField",
    "force_eval",
    "velocity_eval",
    "diffusivity_eval",
]

#: Smallest gap at which the power law ``(1/omega - 1)_+^m`` is evaluated.
OMEGA_FLOOR = 1e-8

_KINDS = ("F1", "F2", "power", "table")


@dataclass(frozen=True)
class ForceLaw:
    """Repulsion nonlinearity ``f: [0, inf) -> [0, inf)`` supported on ``[0, 1]``.

    Use the constructors :meth:`f1`, :meth:`f2`, :meth:`power` and
    :meth:`table` rather than instantiating directly.
    """

    kind: str
    m: float | None = None
    knots_omega: tuple[float, ...] = ()
    knots_f: tuple[float, ...] = ()
    lipschitz: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown force law kind {self.kind!r}")
        if self.kind == "F1":
            object.__setattr__(self, "lipschitz", 1.0)
        elif self.kind == "F2":
            object.__setattr__(self, "lipschitz", 2.0)
        elif self.kind == "power":
            if self.m is None or not np.isfinite(self.m) or self.m <= 0:
                raise DomainError("power law needs a finite exponent m > 0")
            object.__setattr__(self, "m", float(self.m))
        else:
            self._validate_table()

    def _validate_table(self):
        w = np.asarray(self.knots_omega, dtype=float)
        v = np.asarray(self.knots_f, dtype=float)
        if w.ndim != 1 or w.shape != v.shape or w.size < 2:
            raise DomainError("table law needs at least two (omega, f) knots")
        if w[0] != 0.0:
            raise DomainError("table law must start at omega = 0")
        if np.any(np.diff(w) <= 0):
            raise DomainError("table knots must be strictly increasing in omega")
        if not np.any(w == 1.0):
            raise DomainError("table law must contain a knot at omega = 1")
        if np.any(v[w >= 1.0] != 0.0):
            raise DomainError("table law must vanish for omega >= 1")
        if np.any(v < 0) or np.any(v > 1):
            raise DomainError("table values must lie in [0, 1]")
        if np.any(np.diff(v) > 0):
            raise DomainError("table law must be nonincreasing")
        slope = float(np.max(np.abs(np.diff(v) / np.diff(w))))
        if self.lipschitz is None:
            object.__setattr__(self, "lipschitz", slope)
        elif self.lipschitz < slope * (1 - 1e-12):
            raise DomainError(
                f"declared Lipschitz constant {self.lipschitz} is below the knot slope {slope}"
            )

    # -- constructors -----------------------------------------------------

    @classmethod
    def f1(cls) -> "ForceLaw":
        """``f(omega) = (1 - omega)_+``."""
        return cls("F1")

    @classmethod
    def f2(cls) -> "ForceLaw":
        """``f(omega) = (1 - omega)_+^2``."""
        return cls("F2")

    @classmethod
    def power(cls, m: float) -> "ForceLaw":
        """``f(omega) = (1/omega - 1)_+^m``; unbounded near 0, macro scale only."""
        return cls("power", m=m)

    @classmethod
    def table(cls, omega: Sequence[float], values: Sequence[float],
              lipschitz: float | None = None) -> "ForceLaw":
        """Piecewise-linear law through the given knots."""
        return cls("table", knots_omega=tuple(float(w) for w in omega),
                   knots_f=tuple(float(v) for v in values), lipschitz=lipschitz)

    @classmethod
    def from_csv(cls, path: str | Path, lipschitz: float | None = None) -> "ForceLaw":
        """Read a table law from a two-column CSV with header ``omega,f``."""
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [n.strip() for n in reader.fieldnames] != ["omega", "f"]:
                raise DomainError(f"{path}: expected header 'omega,f'")
            rows = [(float(r["omega"]), float(r["f"])) for r in reader]
        omega, values = zip(*rows) if rows else ((), ())
        return cls.table(omega, values, lipschitz=lipschitz)

    # -- properties -------------------------------------------------------

    @property
    def bounded(self) -> bool:
        """True if ``0 <= f <= 1`` holds, i.e. the law is admissible for particles."""
        return self.kind != "power"

    @property
    def name(self) -> str:
        if self.kind == "power":
            return f"power(m={self.m:g})"
        return self.kind

    # -- evaluation -------------------------------------------------------

    def __call__(self, omega):
        """Vectorised ``f(omega)``; raises :class:`DomainError` outside the domain."""
        w = np.asarray(omega, dtype=float)
        if np.any(w < 0) or np.any(np.isnan(w)):
            raise DomainError("force law evaluated at a negative gap")
        if self.kind == "F1":
            out = np.maximum(1.0 - w, 0.0)
        elif self.kind == "F2":
            out = np.maximum(1.0 - w, 0.0) ** 2
        elif self.kind == "power":
            if np.any(w < OMEGA_FLOOR):
                raise DomainError(f"power law evaluated below omega_floor={OMEGA_FLOOR:g}")
            with np.errstate(divide="ignore"):
                out = np.maximum(1.0 / w - 1.0, 0.0) ** self.m
        else:
            out = np.interp(w, self.knots_omega, self.knots_f, right=0.0)
        return out if out.ndim else float(out)

    def derivative(self, omega):
        """One-sided derivative ``f'(omega)`` taken from the right.

        At the kink ``omega = 1`` this returns the derivative on the
        degenerate side, so ``f'(1) = 0``.
        """
        w = np.asarray(omega, dtype=float)
        if np.any(w < 0):
            raise DomainError("force law derivative at a negative gap")
        inside = w < 1.0
        if self.kind == "F1":
            out = np.where(inside, -1.0, 0.0)
        elif self.kind == "F2":
            out = np.where(inside, -2.0 * (1.0 - w), 0.0)
        elif self.kind == "power":
            if np.any(w < OMEGA_FLOOR):
                raise DomainError(f"power law evaluated below omega_floor={OMEGA_FLOOR:g}")
            m = self.m
            ws = np.where(inside, w, 0.5)
            out = np.where(inside, -m * (1.0 / ws - 1.0) ** (m - 1.0) / ws**2, 0.0)
        else:
            kw = np.asarray(self.knots_omega)
            kf = np.asarray(self.knots_f)
            slopes = np.append(np.diff(kf) / np.diff(kw), 0.0)
            idx = np.searchsorted(kw, w, side="right") - 1
            out = slopes[np.clip(idx, 0, slopes.size - 1)]
        return out if out.ndim else float(out)

    def of_density(self, rho):
        """``f(1/rho)`` with vacuum (``rho = 0``) mapped to ``f(inf) = 0``."""
        r = np.asarray(rho, dtype=float)
        if np.any(r < 0):
            raise DomainError("negative density")
        safe = np.where(r > 0, r, 1.0)
        if self.kind == "power":
            # (1/omega - 1)_+^m == (rho - 1)_+^m, no floor needed in density form
            out = np.maximum(safe - 1.0, 0.0) ** self.m
        else:
            out = self(1.0 / safe)
        out = np.where(r > 0, out, 0.0)
        return out if out.ndim else float(out)

    def diffusivity_sup(self, rho_max: float) -> float | None:
        """``sup D`` over ``(1, rho_max]`` in closed form, or None if not available."""
        if rho_max <= 1.0:
            return 0.0
        if self.kind == "F1":
            return 1.0
        if self.kind == "F2":
            # D = 2 (rho - 1) / rho^3 peaks at rho = 3/2
            r = min(rho_max, 1.5)
            return 2.0 * (r - 1.0) / r**3
        if self.kind == "power" and self.m >= 1.0:
            return self.m * (rho_max - 1.0) ** (self.m - 1.0)
        return None

    def _eval_fast(self, w: np.ndarray) -> np.ndarray:
        # unchecked f(omega) for bounded laws, used inside solver loops
        if self.kind == "F1":
            return np.maximum(1.0 - w, 0.0)
        if self.kind == "F2":
            return np.maximum(1.0 - w, 0.0) ** 2
        if self.kind == "table":
            return np.interp(w, self.knots_omega, self.knots_f, right=0.0)
        return self(w)

    def _of_density_fast(self, rho: np.ndarray) -> np.ndarray:
        # unchecked f(1/rho) for nonnegative arrays; 1/0 = inf maps to f = 0
        with np.errstate(divide="ignore"):
            w = 1.0 / rho
        if self.kind == "F1":
            return np.maximum(1.0 - w, 0.0)
        if self.kind == "F2":
            return np.maximum(1.0 - w, 0.0) ** 2
        if self.kind == "power":
            return np.maximum(rho - 1.0, 0.0) ** self.m
        return np.interp(w, self.knots_omega, self.knots_f, right=0.0)

    def diffusivity(self, rho):
        """Vectorised ``D(rho) = -rho^-2 f'(1/rho)``; zero where ``rho <= 1``."""
        r = np.asarray(rho, dtype=float)
        if np.any(r <= 0):
            raise DomainError("diffusivity requires rho > 0")
        if self.kind == "power":
            m = self.m
            out = np.where(r > 1.0, m * np.maximum(r - 1.0, 0.0) ** (m - 1.0), 0.0)
        else:
            out = -self.derivative(1.0 / r) / r**2
            out = np.where(r > 1.0, out, 0.0)
        out = out + 0.0  # normalise -0.0
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class VelocityField:
    """External velocity ``v(x)``; piecewise-linear fields extend as constants."""

    kind: str = "zero"
    c: float = 0.0
    knots_x: tuple[float, ...] = ()
    knots_v: tuple[float, ...] = ()
    gamma: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "piecewise_linear"):
            raise DomainError(f"unknown velocity kind {self.kind!r}")
        if self.kind == "piecewise_linear":
            x = np.asarray(self.knots_x, dtype=float)
            v = np.asarray(self.knots_v, dtype=float)
            if x.ndim != 1 or x.shape != v.shape or x.size < 1:
                raise DomainError("piecewise-linear velocity needs matching knots")
            if np.any(np.diff(x) <= 0):
                raise DomainError("velocity knots must be strictly increasing")
            gamma = float(np.max(np.abs(np.diff(v) / np.diff(x)))) if x.size > 1 else 0.0
            object.__setattr__(self, "gamma", gamma)
        if not np.isfinite(self.c):
            raise DomainError("velocity constant must be finite")

    @classmethod
    def zero(cls) -> "VelocityField":
        return cls("zero")

    @classmethod
    def constant(cls, c: float) -> "VelocityField":
        return cls("constant", c=float(c))

    @classmethod
    def piecewise_linear(cls, x: Sequence[float], v: Sequence[float]) -> "VelocityField":
        return cls("piecewise_linear", knots_x=tuple(float(a) for a in x),
                   knots_v=tuple(float(b) for b in v))

    @property
    def is_zero(self) -> bool:
        if self.kind == "zero":
            return True
        if self.kind == "constant":
            return self.c == 0.0
        return all(v == 0.0 for v in self.knots_v)

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(xa)
        elif self.kind == "constant":
            out = np.full_like(xa, self.c)
        else:
            out = np.interp(xa, self.knots_x, self.knots_v)
        return out if out.ndim else float(out)

    def mirrored(self) -> "VelocityField":
        """The field seen in reflected coordinates ``y = -x``: ``w(y) = -v(-y)``."""
        if self.kind == "zero":
            return self
        if self.kind == "constant":
            return VelocityField.constant(-self.c)
        return VelocityField.piecewise_linear(
            [-a for a in reversed(self.knots_x)], [-b for b in reversed(self.knots_v)]
        )


def force_eval(law: ForceLaw, omega: float) -> float:
    """Return ``f(omega)`` for a single gap value."""
    return float(law(float(omega)))


def velocity_eval(field: VelocityField, x: float) -> float:
    """Return ``v(x)`` for a single position."""
    return float(field(float(x)))


def diffusivity_eval(law: ForceLaw, rho: float) -> float:
    """Return ``D(rho) = -rho^-2 f'(1/rho)``; zero in the degenerate range ``rho <= 1``."""
    return float(law.diffusivity(float(rho)))
