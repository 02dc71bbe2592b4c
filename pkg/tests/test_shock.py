import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from oracles import STEFAN_LAMBDA, barenblatt2, barenblatt2_front, stefan_residual
from repchain import (
    BracketError,
    DegenerateJumpError,
    DomainError,
    ForceLaw,
    LostShockError,
    MacroState,
    NoConvergenceError,
    bump_sum,
    equilibrium_interval,
    pme_jump_speed,
    rh_speed,
    simulate_macro,
    track_shock,
)
from repchain.macro import ramp_density
from repchain.shock import detect_front, detect_jump, interacting_intervals


def test_rh_speed_examples():
    assert rh_speed(-0.5, 0.5, 0.0) == pytest.approx(1.0)
    assert rh_speed(0.0, 0.2, 0.3) == pytest.approx(0.3)


def test_rh_speed_degenerate():
    with pytest.raises(DegenerateJumpError):
        rh_speed(-0.5, 1.0)


@given(st.floats(-10, 0), st.floats(0, 0.99))
def test_rh_speed_moves_toward_lower_density(flux, right):
    assert rh_speed(flux, right, 0.0) >= 0


def test_pme_jump_speed_examples():
    assert pme_jump_speed(1, 1.5, -0.2) == pytest.approx(-0.4)
    assert pme_jump_speed(2, 2.0, 0.3) == pytest.approx(0.6)
    assert pme_jump_speed(3, 1.7, 0.0) == 0.0
    with pytest.raises(DomainError):
        pme_jump_speed(2, 1.0, 0.1)


def _step_state(dx=0.01):
    return MacroState.from_function(lambda x: np.where(x < 0, 1.0, 0.5), -1, 1, dx)


def test_stationary_jump():
    s0 = _step_state()
    traj = simulate_macro(s0, 0.01, ForceLaw.f1(), sample_every=10)
    path = track_shock(traj.states, ForceLaw.f1(), x0=0.0)
    np.testing.assert_allclose(path.positions, 0.0, atol=1e-15)
    np.testing.assert_allclose(path.right_density, 0.5)
    assert path.monotone


def test_detect_jump_and_front():
    s = _step_state()
    assert detect_jump(s) == pytest.approx(0.0, abs=1e-12)
    mirrored = MacroState(0, s.x_left, s.dx, s.rho[::-1])
    assert detect_jump(mirrored, side="left") == pytest.approx(0.0, abs=1e-12)
    b = MacroState.from_function(lambda x: 1 + barenblatt2(x, 0.01, 0.072), -1, 1, 2e-3)
    edge = barenblatt2_front(0.01, 0.072)
    assert detect_front(b) == pytest.approx(edge, abs=2e-3)
    assert detect_front(b, side="left") == pytest.approx(-edge, abs=2e-3)


def test_track_rejects_bad_arguments():
    s = _step_state()
    with pytest.raises(DomainError):
        track_shock([s], ForceLaw.f1(), side="up")
    with pytest.raises(DomainError):
        track_shock([s], ForceLaw.f1(), mode="kink")
    with pytest.raises(DomainError):
        track_shock([], ForceLaw.f1())


def test_lost_shock():
    s0 = _step_state()
    far = s0.with_rho(0.01, np.where(s0.x < 0.5, 1.0, 0.5))
    with pytest.raises(LostShockError):
        track_shock([s0, far], ForceLaw.f1(), x0=0.0)


def test_stefan_similarity_constant():
    lam = brentq(stefan_residual, 0.1, 3.0, xtol=1e-15)
    assert lam == pytest.approx(STEFAN_LAMBDA, rel=1e-12)


def test_ridge_front_follows_similarity_law():
    L = 0.3
    s0 = MacroState.from_function(ramp_density(0.5, 0.3, crossing=L), -1, 1, 1e-3)
    traj = simulate_macro(s0, 0.01, ForceLaw.f1(), sample_every=20)
    path = track_shock(traj.states, ForceLaw.f1(), x0=L)
    left = track_shock(traj.states, ForceLaw.f1(), x0=-L, side="left")
    np.testing.assert_allclose(left.positions, -path.positions, atol=1e-12)
    sel = path.times >= 1e-3
    ratio = (path.positions[sel] - L) / (STEFAN_LAMBDA * np.sqrt(path.times[sel]))
    assert np.all(np.abs(ratio - 1) <= 0.05)
    assert path.monotone


def test_barenblatt_front_tracking():
    t0, C = 0.01, 0.072
    s0 = MacroState.from_function(lambda x: 1 + barenblatt2(x, t0, C), -1, 1, 2e-3)
    traj = simulate_macro(s0, 0.09, ForceLaw.power(2), sample_every=50)
    for side, sign in (("right", 1), ("left", -1)):
        path = track_shock(traj.states, ForceLaw.power(2), side=side, mode="front")
        exact = sign * barenblatt2_front(t0 + path.times, C)
        np.testing.assert_allclose(path.positions, exact, rtol=0.01)


def test_colliding_jumps_approach():
    s0 = MacroState.from_function(bump_sum([(4.0, 0.15, -0.2), (4.0, 0.15, 0.2)], 0.5),
                                  -1, 1, 5e-3)
    traj = simulate_macro(s0, 0.01, ForceLaw.f1(), sample_every=20)
    inner_left = track_shock(traj.states, ForceLaw.f1(), x0=-0.05, on_dissolve="stop")
    inner_right = track_shock(traj.states, ForceLaw.f1(), x0=0.05, side="left",
                              on_dissolve="stop")
    gap = inner_right.positions[-1] - inner_left.positions[-1]
    assert gap < 0.1
    assert np.all(np.diff(inner_left.positions) >= 0)
    assert np.all(np.diff(inner_right.positions) <= 0)


@pytest.mark.parametrize("func, bracket, expected", [
    (lambda x: np.where(np.abs(x) <= 0.5, 2.0, 0.0), (-2, 2), (-1, 1)),
    (lambda x: np.where((x >= 0) & (x <= 1), 3.0, 0.0), (-2, 3), (-1, 2)),
])
def test_equilibrium_examples(func, bracket, expected):
    res = equilibrium_interval(func, bracket)
    assert (res.a, res.b) == pytest.approx(expected, abs=1e-8)
    assert abs(res.residual_mass) <= 1e-8 and abs(res.residual_com) <= 1e-8
    assert set(res.as_dict()) == {"a", "b", "residual_mass", "residual_com"}


def test_equilibrium_residuals_by_quadrature():
    f = bump_sum([(4.0, 0.15, -0.2), (4.0, 0.15, 0.2)], 0.5)
    res = equilibrium_interval(f, (-0.9, 0.9), dx=1e-5)
    xs = np.linspace(res.a, res.b, 400001)
    rho = f(xs)
    m = trapezoid(rho, xs)
    assert res.b - res.a == pytest.approx(m, abs=1e-6)


def test_equilibrium_errors():
    f = lambda x: np.where(np.abs(x) <= 0.5, 2.0, 0.0)
    with pytest.raises(DomainError):
        equilibrium_interval(f, (-0.3, 2))
    with pytest.raises(DomainError):
        equilibrium_interval(lambda x: np.full_like(x, 0.5), (-1, 1))
    with pytest.raises(BracketError):
        equilibrium_interval(f, (-0.8, 0.8))
    # two plateaus too thin to fill the gap between them
    apart = bump_sum([(3.0, 0.1, -0.2), (3.0, 0.1, 0.2)], 0.5)
    with pytest.raises(NoConvergenceError):
        equilibrium_interval(apart, (-0.9, 0.9))


def test_interacting_intervals():
    s = MacroState.from_function(
        lambda x: np.where(np.abs(x - 0.3) < 0.1, 2.0, 0.0)
        + np.where(np.abs(x + 0.3) < 0.1, 2.0, 0.0), -1, 1, 0.01)
    ivs = interacting_intervals(s)
    assert len(ivs) == 2
    assert ivs[0] == pytest.approx((-0.4, -0.2), abs=1e-12)
    assert ivs[1] == pytest.approx((0.2, 0.4), abs=1e-12)
