import numpy as np
import pytest
from hypothesis import given, strategies as st

from repchain import (
    DomainError,
    ForceLaw,
    VelocityField,
    diffusivity_eval,
    force_eval,
    velocity_eval,
)


@pytest.mark.parametrize("law, w, expected", [
    (ForceLaw.f1(), 0.5, 0.5),
    (ForceLaw.f1(), 1.5, 0.0),
    (ForceLaw.f2(), 0.5, 0.25),
    (ForceLaw.power(2), 0.5, 1.0),
])
def test_force_values(law, w, expected):
    assert force_eval(law, w) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("field, x, expected", [
    (VelocityField.zero(), 3.7, 0.0),
    (VelocityField.constant(1.0), -2.0, 1.0),
    (VelocityField.piecewise_linear([0, 1], [0, 2]), 0.5, 1.0),
])
def test_velocity_values(field, x, expected):
    assert velocity_eval(field, x) == pytest.approx(expected)


def test_piecewise_linear_extends_constant_and_gamma():
    v = VelocityField.piecewise_linear([0, 1, 3], [0, 2, 1])
    assert v(-5.0) == 0.0 and v(10.0) == 1.0
    assert v.gamma == 2.0


@pytest.mark.parametrize("law, rho, expected", [
    (ForceLaw.f1(), 0.5, 0.0),
    (ForceLaw.f1(), 2.0, 0.25),
    (ForceLaw.f2(), 2.0, 0.25),
])
def test_diffusivity_values(law, rho, expected):
    assert diffusivity_eval(law, rho) == pytest.approx(expected, abs=1e-15)


def test_diffusivity_matches_finite_difference_of_f():
    law, rho, h = ForceLaw.f2(), 2.0, 1e-6
    w = 1 / rho
    fd = (law(w + h) - law(w - h)) / (2 * h)
    assert diffusivity_eval(law, rho) == pytest.approx(-fd / rho**2, rel=1e-8)


def test_derivative_one_sided_at_kink():
    assert ForceLaw.f1().derivative(1.0) == 0.0
    assert diffusivity_eval(ForceLaw.f1(), 1.0) == 0.0


@given(st.floats(0.0, 5.0))
def test_bounded_laws_in_unit_interval(w):
    for law in (ForceLaw.f1(), ForceLaw.f2()):
        assert 0.0 <= law(w) <= 1.0
        if w >= 1:
            assert law(w) == 0.0


@given(st.floats(1.0001, 50.0))
def test_diffusivity_sup_bounds_values(rho):
    for law in (ForceLaw.f1(), ForceLaw.f2(), ForceLaw.power(2), ForceLaw.power(1)):
        grid = np.linspace(1.0, rho, 200)
        assert law.diffusivity(grid).max() <= law.diffusivity_sup(rho) * (1 + 1e-12)


def test_power_law_domain():
    with pytest.raises(DomainError):
        ForceLaw.power(0)
    with pytest.raises(DomainError):
        ForceLaw.power(2)(0.0)
    with pytest.raises(DomainError):
        ForceLaw.f1()(-0.1)
    assert not ForceLaw.power(2).bounded


def test_of_density_vacuum_is_zero():
    out = ForceLaw.f1().of_density(np.array([0.0, 0.5, 2.0]))
    np.testing.assert_array_equal(out, [0.0, 0.0, 0.5])


def test_table_law(tmp_path):
    law = ForceLaw.table([0, 0.5, 1], [1, 0.25, 0])
    assert law(0.25) == pytest.approx(0.625)
    assert law(2.0) == 0.0
    assert law.lipschitz == 1.5
    p = tmp_path / "f.csv"
    p.write_text("omega,f\n0,1\n1,0\n")
    assert ForceLaw.from_csv(p)(0.5) == pytest.approx(0.5)


@pytest.mark.parametrize("w, v", [
    ([0.1, 1], [1, 0]),          # does not start at 0
    ([0, 1], [1, 0.5]),          # nonzero beyond 1
    ([0, 0.5, 1], [0.5, 1, 0]),  # increasing
    ([0, 1], [2, 0]),            # above 1
])
def test_table_law_rejects(w, v):
    with pytest.raises(DomainError):
        ForceLaw.table(w, v)


def test_table_lipschitz_below_slope_rejected():
    with pytest.raises(DomainError):
        ForceLaw.table([0, 1], [1, 0], lipschitz=0.5)


def test_mirrored_field():
    v = VelocityField.piecewise_linear([0, 1], [0, 2])
    w = v.mirrored()
    for y in (-2.0, -0.5, 0.3):
        assert w(y) == pytest.approx(-v(-y))
