import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from repchain import (
    DomainError,
    ForceLaw,
    MacroState,
    MicroState,
    TimeAlignmentError,
    VelocityField,
    ZeroMassError,
    bump_density,
    compare_scales,
    density_from_particles,
    l1_distance,
    mass,
    particles_from_density,
    simulate_macro,
    simulate_micro,
)
from repchain.bridge import RHO_CAP, interval_densities


def _indicator(value, lo, hi, x_min=-1.0, x_max=2.0, dx=0.01):
    return MacroState.from_function(lambda x: np.where((x >= lo) & (x <= hi), value, 0.0),
                                    x_min, x_max, dx)


def test_uniform_quantiles():
    s = particles_from_density(MacroState(0, 0.0, 0.1, np.ones(10)), 4)
    np.testing.assert_allclose(s.x, [0, 0.25, 0.5, 0.75, 1.0], atol=1e-14)


def test_double_density_quantiles():
    s = particles_from_density(MacroState(0, 0.0, 0.1, np.full(10, 2.0)), 2)
    np.testing.assert_allclose(s.x, [0, 0.5, 1.0], atol=1e-14)
    np.testing.assert_allclose(s.omega, [1, 1])
    # with the chain carrying the full mass, gaps equal 1/rho
    s = particles_from_density(MacroState(0, 0.0, 0.1, np.full(10, 2.0)), 2, match_density=True)
    np.testing.assert_allclose(s.omega, [0.5, 0.5])
    assert s.mass == pytest.approx(2.0)


def test_vacuum_is_skipped():
    s = particles_from_density(_indicator(3.0, 0.0, 1.0), 3)
    np.testing.assert_allclose(s.x, [0, 1 / 3, 2 / 3, 1.0], atol=1e-12)


def test_zero_mass_and_bad_n():
    empty = MacroState(0, 0.0, 0.1, np.zeros(5))
    with pytest.raises(ZeroMassError):
        particles_from_density(empty, 4)
    with pytest.raises(DomainError):
        particles_from_density(MacroState(0, 0.0, 0.1, np.ones(5)), 0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=3, max_size=40).filter(lambda v: sum(v) > 0.1),
       st.integers(1, 50))
def test_quantiles_split_mass_equally(values, N):
    g = MacroState(0, 0.0, 0.1, np.array(values))
    s = particles_from_density(g, N, match_density=True)
    C = np.concatenate(([0.0], np.cumsum(g.rho * g.dx)))
    cum = np.interp(s.x, g.edges, C)
    np.testing.assert_allclose(np.diff(cum), C[-1] / N, rtol=1e-9, atol=1e-12)


def test_density_from_equally_spaced():
    s = MicroState(0, np.linspace(0, 1, 6))
    g = density_from_particles(s)
    np.testing.assert_allclose(g.rho, 1.0)
    assert g.x_left == 0.0 and g.x_right == pytest.approx(1.0)


def test_density_from_two_particles():
    g = density_from_particles(MicroState(0, [0.0, 2.0]))
    np.testing.assert_allclose(g.rho, 0.5)


def test_density_on_given_grid_conserves_mass():
    s = MicroState(0, [0.03, 0.1, 0.4, 0.45, 0.8], mass=2.0)
    grid = MacroState(0, -0.5, 0.01, np.zeros(150))
    g = density_from_particles(s, grid)
    assert mass(g) == pytest.approx(2.0, rel=1e-12)
    assert g.rho[:50].max() == 0.0 and g.rho[-20:].max() == 0.0


def test_round_trip_first_order():
    rho0 = MacroState.from_function(bump_density(3.0, 0.4, 0.0), -0.5, 0.5, 1e-3)
    errors = []
    for N in (10, 20, 40, 80, 160):
        s = particles_from_density(rho0, N, match_density=True)
        errors.append(l1_distance(density_from_particles(s, rho0), rho0))
    errors = np.array(errors)
    assert np.all(np.diff(errors) < 0)
    scaled = errors * np.array([10, 20, 40, 80, 160])
    assert scaled.max() <= 2.0 * scaled.min()


def test_coincident_particles_warn_and_cap():
    s = MicroState(0, [0.0, 0.5, 0.5, 1.0])
    with pytest.warns(RuntimeWarning):
        rho = interval_densities(s)
    assert rho[1] == RHO_CAP


def test_l1_distance_grid_mismatch():
    a = MacroState(0, 0.0, 0.1, np.ones(5))
    b = MacroState(0, 0.05, 0.1, np.ones(5))
    assert l1_distance(a, a) == 0.0
    with pytest.raises(DomainError):
        l1_distance(a, b)


def test_compare_scales_at_start_and_alignment():
    rho0 = MacroState.from_function(bump_density(2.0, 0.3, 0.0), -0.6, 0.6, 1e-3)
    micro = simulate_micro(particles_from_density(rho0, 40, match_density=True), 1e-3,
                           ForceLaw.f1(), VelocityField.zero(), sample_every=10**9)
    macro = simulate_macro(rho0, 1e-3, ForceLaw.f1(), sample_every=10**9)
    (t, err), = compare_scales(micro, macro, [0.0])
    assert t == 0.0 and err <= 1.0 / 40
    with pytest.raises(TimeAlignmentError):
        compare_scales(micro, macro, [5e-4])


def test_compare_identical_is_zero():
    rho0 = MacroState(0, 0.0, 0.25, np.full(4, 1.0))
    micro = simulate_micro(particles_from_density(rho0, 4, match_density=True), 0.01,
                           ForceLaw.f1(), VelocityField.zero(), sample_every=10**9)
    macro = simulate_macro(MacroState(0, -1.0, 0.25, np.r_[np.zeros(4), np.ones(4), np.zeros(4)]),
                           0.01, ForceLaw.f1(), sample_every=10**9)
    # uniform unit density is at rest on both scales
    grid = macro.states[-1]
    assert l1_distance(density_from_particles(micro.states[-1], grid), grid) < 1e-12
