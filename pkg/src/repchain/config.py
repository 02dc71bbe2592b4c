"""Flat, typed run configuration and the built-in experiment presets.

A configuration is a single YAML mapping of scalar and list values.  Unknown
keys are rejected and every numeric field is checked against the
preconditions of the module that consumes it.
"""
from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import ConfigError, DomainError
from .macro import (
    GrowthParams,
    MacroState,
    bump_sum,
    constant_density,
    ramp_density,
    waiting_time_density,
)
from .micro import MicroState, positions_from_gaps
from .model import ForceLaw, VelocityField

__all__ = ["RunConfig", "PRESETS", "list_presets", "get_preset", "load_config"]

SCALES = ("micro", "macro", "compare", "shock-track", "equilibrium")
LAWS = ("F1", "F2", "power", "table")
VELOCITIES = ("zero", "constant", "piecewise_linear")
INITIALS = ("bumps", "constant", "ramp", "waiting-time", "csv", "gaps")

_FLOAT, _INT, _BOOL, _STR, _FLOATS, _ROWS = "float", "int", "bool", "str", "floats", "rows"


def _f(kind, default=None, optional=False, **kw):
    return field(default_factory=lambda: copy.deepcopy(default),
                 metadata={"kind": kind, "optional": optional, **kw})


@dataclass
class RunConfig:
    """All parameters of one run.  ``chosen`` lists fields whose values are assumptions."""

    name: str = _f(_STR, "run")
    description: str = _f(_STR, "")
    scale: str = _f(_STR, "macro", choices=SCALES)
    # repulsion law
    law: str = _f(_STR, "F1", choices=LAWS)
    law_m: float | None = _f(_FLOAT, None, optional=True)
    law_table: str | None = _f(_STR, None, optional=True)
    law_lipschitz: float | None = _f(_FLOAT, None, optional=True)
    # external velocity
    velocity: str = _f(_STR, "zero", choices=VELOCITIES)
    velocity_c: float = _f(_FLOAT, 0.0)
    velocity_x: list = _f(_FLOATS, [])
    velocity_v: list = _f(_FLOATS, [])
    # initial data
    initial: str = _f(_STR, "bumps", choices=INITIALS)
    bumps: list = _f(_ROWS, [])
    offset: float = _f(_FLOAT, 0.0)
    ramp_slope: float = _f(_FLOAT, 0.5)
    ramp_halfwidth: float = _f(_FLOAT, 0.3)
    ramp_center: float = _f(_FLOAT, 0.0)
    ramp_crossing: float | None = _f(_FLOAT, None, optional=True)
    initial_csv: str | None = _f(_STR, None, optional=True)
    omega0: list = _f(_FLOATS, [])
    x_start: float = _f(_FLOAT, 0.0)
    # discretisation
    x_min: float = _f(_FLOAT, -1.0)
    x_max: float = _f(_FLOAT, 1.0)
    N: int | None = _f(_INT, None, optional=True)
    dx: float | None = _f(_FLOAT, None, optional=True)
    T: float = _f(_FLOAT, 0.01)
    dt: float | None = _f(_FLOAT, None, optional=True)
    cfl_ratio: float = _f(_FLOAT, 0.1)
    fp_iters: int = _f(_INT, 40)
    sample_every: int = _f(_INT, 1)
    sample_times: list = _f(_FLOATS, [])
    export_every: int = _f(_INT, 1)
    # source term
    alpha: float | None = _f(_FLOAT, None, optional=True)
    rho_star: float | None = _f(_FLOAT, None, optional=True)
    legacy_drift_sign: bool = _f(_BOOL, False)
    # shock tracking
    shock_x0: float | None = _f(_FLOAT, None, optional=True)
    shock_side: str = _f(_STR, "right", choices=("right", "left"))
    shock_mode: str = _f(_STR, "jump", choices=("jump", "front"))
    jump_threshold: float = _f(_FLOAT, 0.1)
    window: int = _f(_INT, 5)
    on_dissolve: str = _f(_STR, "stop", choices=("raise", "stop"))
    # equilibrium
    bracket: list = _f(_FLOATS, [])
    tol: float = _f(_FLOAT, 1e-8)
    # micro/macro comparison
    compare_times: list = _f(_FLOATS, [])
    match_density: bool = _f(_BOOL, True)
    # output
    out: str | None = _f(_STR, None, optional=True)
    deterministic: bool = _f(_BOOL, True)
    chosen: list = _f("strs", [])

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    @classmethod
    def from_dict(cls, data: dict[str, Any], validate: bool = True) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping of keys to values")
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(unknown)}")
        values = {k: _coerce(known[k], v) for k, v in data.items()}
        cfg = cls(**values)
        if validate:
            cfg.validate()
        return cfg

    @classmethod
    def from_yaml(cls, text: str, validate: bool = True) -> "RunConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as err:
            raise ConfigError(f"cannot parse configuration: {err}") from None
        return cls.from_dict(data or {}, validate)

    def replace(self, **changes) -> "RunConfig":
        data = self.to_dict()
        data.update(changes)
        return RunConfig.from_dict(data)

    # -- validation ---------------------------------------------------------

    def validate(self) -> "RunConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.deterministic is True, "deterministic must be true; runs are always seed-free")
        need(self.T > 0, "T must be positive")
        need(self.dt is None or self.dt > 0, "dt must be positive")
        need(0 < self.cfl_ratio <= 0.5, "cfl_ratio must lie in (0, 0.5]")
        need(self.fp_iters >= 1, "fp_iters must be >= 1")
        need(self.sample_every >= 1, "sample_every must be >= 1")
        need(self.export_every >= 1, "export_every must be >= 1")
        need(all(0 <= s <= self.T for s in self.sample_times), "sample_times must lie in [0, T]")
        need((self.alpha is None) == (self.rho_star is None),
             "alpha and rho_star must be given together")
        need(self.window >= 1, "window must be >= 1")
        need(self.jump_threshold > 0, "jump_threshold must be positive")
        need(self.tol > 0, "tol must be positive")
        for row in self.bumps:
            need(len(row) == 3, "each bump is a list [h, b, m]")
        try:
            law = self.build_law()
            self.build_field()
            self.build_growth()
        except (DomainError, OSError) as err:
            raise ConfigError(str(err)) from None

        micro_side = self.scale in ("micro", "compare")
        grid_side = self.initial not in ("gaps", "csv")
        if micro_side:
            need(law.bounded, f"{law.name} is unbounded near omega = 0 and cannot drive particles")
        if self.scale == "micro" and self.initial == "gaps":
            need(len(self.omega0) >= 1, "initial 'gaps' needs a nonempty omega0 list")
            need(all(w >= 0 for w in self.omega0), "omega0 entries must be nonnegative")
        elif micro_side:
            need(self.N is not None and self.N >= 1, "N must be a positive integer")
        if self.scale != "micro" and self.initial == "gaps":
            raise ConfigError("initial 'gaps' is only valid for scale 'micro'")
        if grid_side:
            need(self.x_max > self.x_min, "x_max must exceed x_min")
            need(self.dx is not None and self.dx > 0, "dx must be positive")
            need((self.x_max - self.x_min) / self.dx >= 3, "grid needs at least three cells")
        if self.initial == "csv":
            need(self.initial_csv is not None, "initial 'csv' needs initial_csv")
        if self.initial == "bumps":
            need(len(self.bumps) >= 1 or self.offset > 0, "initial 'bumps' needs bumps or an offset")
        if self.scale == "equilibrium":
            need(len(self.bracket) == 2 and self.bracket[0] < self.bracket[1],
                 "bracket must be [c, d] with c < d")
        if self.scale == "compare":
            need(len(self.compare_times) >= 1, "compare needs compare_times")
            need(all(0 <= s <= self.T for s in self.compare_times),
                 "compare_times must lie in [0, T]")
        return self

    # -- builders -----------------------------------------------------------

    def build_law(self) -> ForceLaw:
        if self.law == "F1":
            return ForceLaw.f1()
        if self.law == "F2":
            return ForceLaw.f2()
        if self.law == "power":
            if self.law_m is None:
                raise DomainError("law 'power' needs law_m")
            return ForceLaw.power(self.law_m)
        if self.law_table is None:
            raise DomainError("law 'table' needs law_table (CSV path)")
        return ForceLaw.from_csv(self.law_table, lipschitz=self.law_lipschitz)

    def build_field(self) -> VelocityField:
        if self.velocity == "zero":
            return VelocityField.zero()
        if self.velocity == "constant":
            return VelocityField.constant(self.velocity_c)
        return VelocityField.piecewise_linear(self.velocity_x, self.velocity_v)

    def build_growth(self) -> GrowthParams | None:
        if self.alpha is None:
            return None
        return GrowthParams(self.alpha, self.rho_star)

    def build_density(self) -> MacroState:
        """Initial grid density."""
        if self.initial == "csv":
            from .io import read_density_csv
            try:
                return read_density_csv(self.initial_csv)
            except OSError as err:
                raise ConfigError(f"cannot read initial_csv: {err}") from None
        if self.initial == "bumps":
            func = bump_sum([tuple(r) for r in self.bumps], self.offset)
        elif self.initial == "constant":
            func = constant_density(self.offset)
        elif self.initial == "ramp":
            func = ramp_density(self.ramp_slope, self.ramp_halfwidth, self.ramp_center,
                                self.ramp_crossing)
        elif self.initial == "waiting-time":
            func = waiting_time_density()
        else:
            raise ConfigError(f"initial {self.initial!r} does not define a density")
        return MacroState.from_function(func, self.x_min, self.x_max, self.dx)

    def build_particles(self) -> MicroState:
        """Initial particle chain: explicit gaps or quantiles of the density."""
        if self.initial == "gaps":
            return MicroState(0.0, positions_from_gaps(self.omega0, self.x_start), 1.0)
        from .bridge import particles_from_density
        return particles_from_density(self.build_density(), self.N, self.match_density)


def _coerce(f: dataclasses.Field, v):
    kind = f.metadata["kind"]
    name = f.name
    if v is None:
        if f.metadata["optional"]:
            return None
        raise ConfigError(f"{name} may not be null")
    try:
        if kind == _FLOAT:
            if isinstance(v, bool):
                raise TypeError
            out = float(v)
            if not np.isfinite(out):
                raise ValueError
        elif kind == _INT:
            if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
                raise TypeError
            out = int(v)
        elif kind == _BOOL:
            if not isinstance(v, bool):
                raise TypeError
            out = v
        elif kind == _STR:
            if not isinstance(v, str):
                raise TypeError
            out = v
        elif kind == _FLOATS:
            if not isinstance(v, (list, tuple)):
                raise TypeError
            out = [float(a) for a in v]
        elif kind == _ROWS:
            if not isinstance(v, (list, tuple)):
                raise TypeError
            out = [[float(a) for a in row] for row in v]
        else:
            if not isinstance(v, (list, tuple)):
                raise TypeError
            out = [str(a) for a in v]
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot interpret {v!r} as {kind}") from None
    choices = f.metadata.get("choices")
    if choices and out not in choices:
        raise ConfigError(f"{name} must be one of {', '.join(choices)}; got {out!r}")
    return out


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read configuration {path}: {err}") from None
    cfg = RunConfig.from_yaml(text)
    if cfg.name == "run":
        cfg = cfg.replace(name=Path(path).stem)
    return cfg


# -- presets -------------------------------------------------------------------

def _smoothing_gaps(n=20):
    # all neighbours interact: omega < 1 everywhere
    return [round(float(0.55 + 0.35 * np.sin(2.5 * k + 0.3) * np.cos(0.7 * k)), 6)
            for k in range(n)]


def _plateau_gaps():
    return [0.4, 0.5, 0.45, 0.6, 1.8, 2.2, 1.6, 0.5, 0.4, 0.6,
            0.55, 0.45, 2.0, 1.9, 2.4, 0.7, 0.5, 0.6, 0.4, 0.5]


_PRESETS: dict[str, dict[str, Any]] = {
    "fig-micro-smoothing": dict(
        description="20 interacting particles spread and their gaps smooth towards 1",
        scale="micro", law="F1", initial="gaps", omega0=_smoothing_gaps(),
        T=0.2, sample_every=20, chosen=["omega0", "T"],
    ),
    "fig-micro-plateaus": dict(
        description="gaps beyond the interaction radius split the chain into frozen groups",
        scale="micro", law="F1", initial="gaps", omega0=_plateau_gaps(),
        T=0.2, sample_every=20, chosen=["omega0", "T"],
    ),
    "fig-micro-drift-v1": dict(
        description="velocity enhanced around x = 1; leaders pull ahead without closing gaps",
        scale="micro", law="F1", initial="gaps", omega0=[0.9] * 20,
        velocity="piecewise_linear", velocity_x=[0.0, 0.8, 1.0, 1.2, 2.0],
        velocity_v=[0.5, 0.5, 1.5, 0.5, 0.5],
        T=1.0, sample_every=40, chosen=["omega0", "velocity_x", "velocity_v", "T"],
    ),
    "fig-micro-drift-v2": dict(
        description="converging velocity gathers particles around x = 1 until repulsion acts",
        scale="micro", law="F1", initial="gaps", omega0=[1.5] * 20, x_start=-0.5,
        velocity="piecewise_linear", velocity_x=[-0.5, 1.0, 2.5], velocity_v=[1.5, 0.0, -1.5],
        T=1.0, sample_every=40,
        chosen=["omega0", "x_start", "velocity_x", "velocity_v", "T"],
    ),
    "fig-macro-drift": dict(
        description="diffusion of a bump above the threshold combined with constant drift v = 1",
        scale="macro", law="F1", velocity="constant", velocity_c=1.0,
        initial="bumps", bumps=[[3.0, 0.3, 0.0]], offset=0.5,
        x_min=-1.0, x_max=1.0, dx=1e-3, T=0.02, sample_every=20000,
        chosen=["bumps", "offset", "x_min", "x_max", "T"],
    ),
    "fig-macro-shock": dict(
        description="smooth data crossing 1 forms jumps tracked by the Rankine-Hugoniot law",
        scale="shock-track", law="F1", initial="bumps", bumps=[[2.0, 0.4, 0.0]], offset=0.5,
        x_min=-1.0, x_max=1.0, dx=1e-3, T=0.01, sample_every=20, export_every=1000,
        chosen=["bumps", "offset", "x_min", "x_max", "T"],
    ),
    "fig-macro-collide": dict(
        description="two plateaus above 1 spread, collide and settle on one interval",
        scale="macro", law="F1", initial="bumps",
        bumps=[[4.0, 0.15, -0.2], [4.0, 0.15, 0.2]], offset=0.5,
        x_min=-1.0, x_max=1.0, dx=2e-3, T=0.1, sample_every=25000,
        chosen=["bumps", "offset", "x_min", "x_max", "dx", "T"],
    ),
    "fig-macro-waiting": dict(
        description="support edges at |x| = 1/4 wait before moving under F2",
        scale="macro", law="F2", initial="waiting-time",
        x_min=-1.0, x_max=1.0, dx=2e-3, T=0.05, sample_every=12500,
        chosen=["x_min", "x_max", "dx", "T"],
    ),
    "fig-compare-n40": dict(
        description="micro chain of 40 particles against the macro solution from the same bump",
        scale="compare", law="F1", initial="bumps", bumps=[[3.0, 0.3, 0.0]], offset=0.5,
        x_min=-0.6, x_max=0.6, dx=1e-3, N=40, T=0.01,
        compare_times=[0.001, 0.005, 0.01], sample_every=10000,
        chosen=["x_min", "x_max", "T", "compare_times"],
    ),
    "fig-growth": dict(
        description="logistic growth with carrying capacity above the threshold",
        scale="macro", law="F1", initial="bumps", bumps=[[3.0, 0.3, 0.0]], offset=0.0,
        alpha=0.5, rho_star=1.5,
        x_min=-2.0, x_max=2.0, dx=1e-2, T=1.0, sample_every=10000,
        chosen=["bumps", "offset", "x_min", "x_max", "dx", "T"],
    ),
}

PRESETS: tuple[str, ...] = tuple(_PRESETS)


def get_preset(name: str) -> RunConfig:
    try:
        data = _PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; see 'repchain presets'") from None
    return RunConfig.from_dict({"name": name, **copy.deepcopy(data)})


def list_presets() -> list[tuple[str, str]]:
    """Names and one-line descriptions of the built-in presets."""
    return [(n, _PRESETS[n]["description"]) for n in PRESETS]
