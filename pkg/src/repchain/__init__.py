"""Particle chains with finite-range repulsion and their macroscopic density limit.

The micro scale integrates ordered particle positions under nearest-neighbour
repulsion and an external velocity; the macro scale solves the corresponding
degenerate diffusion equation for the density.  Jump tracking, equilibrium
prediction and micro/macro comparison sit on top of both.
"""
__version__ = "0.1.0"

from .bridge import (
    compare_scales,
    density_from_particles,
    l1_distance,
    particles_from_density,
)
from .config import RunConfig, get_preset, list_presets
from .errors import (
    BoundaryContaminationError,
    BracketError,
    CFLError,
    ConfigError,
    DegenerateJumpError,
    DomainError,
    LostShockError,
    NegativeDensityError,
    NoConvergenceError,
    NonContractionError,
    NumericalError,
    OrderViolationError,
    RepchainError,
    TimeAlignmentError,
    ZeroMassError,
)
from .macro import (
    GrowthParams,
    MacroState,
    MacroTrajectory,
    bump_density,
    bump_sum,
    center_of_mass,
    l2_norm,
    mass,
    simulate_macro,
    step_macro,
    waiting_time_density,
)
from .micro import (
    MicroState,
    MicroTrajectory,
    averaged_positions,
    gaps,
    minmax_envelope,
    positions_from_gaps,
    simulate_micro,
    step_implicit,
    variance_rate,
)
from .model import ForceLaw, VelocityField, diffusivity_eval, force_eval, velocity_eval
from .shock import (
    EquilibriumInterval,
    ShockPath,
    equilibrium_interval,
    pme_jump_speed,
    rh_speed,
    track_shock,
)
