import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from quasispec import (
    BumpFunction,
    CoefficientSet,
    EnergyPoint,
    InvalidCoefficientsError,
    PiecewiseCoefficient,
    formal_potential_density,
    formal_potential_pairing,
    make_impedance,
    make_problem,
    make_schroedinger,
    preset,
    reflect,
    restrict,
    validate,
)
from conftest import random_problem


def test_validate_accepts_constant_free_problem():
    c = make_problem((0, math.pi), p=1, q=1, r=1, s=0)
    report = validate(c)
    assert report.ok and len(report) == 0


def test_validate_reports_interior_zero_of_p():
    p = PiecewiseCoefficient.from_power([0, 1], [[-0.5, 1.0]])
    c = CoefficientSet((0, 1), p, *(PiecewiseCoefficient.constant(v, (0, 1)) for v in (0.0, 1.0, 0.0)))
    report = validate(c)
    assert not report.ok
    assert [str(v) for v in report.violations] == ["p has interior zero on piece [0,1]"]


def test_validate_reports_negative_r():
    one = PiecewiseCoefficient.constant(1.0, (0, 1))
    zero = PiecewiseCoefficient.constant(0.0, (0, 1))
    c = CoefficientSet((0, 1), one, zero, PiecewiseCoefficient.constant(-1.0, (0, 1)), zero)
    messages = [str(v) for v in validate(c).violations]
    assert any("r not positive" in m for m in messages)


def test_constructor_rejects_invalid_coefficients():
    with pytest.raises(InvalidCoefficientsError):
        make_problem((0, 1), r=-1.0)


def test_validate_is_idempotent(rng):
    c = random_problem(rng)
    first, second = validate(c), validate(c)
    assert first.ok == second.ok and first.violations == second.violations


def test_make_schroedinger_gives_free_operator():
    c = make_schroedinger((0, math.pi))
    assert c.is_schroedinger()
    assert c.q.is_constant(0.0) and c.s.is_constant(0.0)


def test_make_impedance_sets_p_equal_r():
    p = PiecewiseCoefficient.from_power([0, 1], [[1.0, 2.0, 1.0]])
    c = make_impedance((0, 1), p)
    x = np.linspace(0, 1, 11)
    assert np.allclose(c.p(x), (1 + x) ** 2, rtol=1e-14)
    assert np.array_equal(c.p(x), c.r(x))
    assert c.is_impedance()


def test_pairing_with_constant_q_integrates_test_function():
    c = make_problem((0, math.pi), q=1.0)
    chi = BumpFunction(1.5, 0.7)
    mass = integrate.quad(chi, 0.8, 2.2, epsabs=1e-14, epsrel=1e-13)[0]
    chi2 = chi * (2.0 / mass)
    assert formal_potential_pairing(c, chi2) == pytest.approx(2.0, rel=1e-10)


def test_pairing_step_s_contains_point_mass():
    x0 = 1.0
    c = make_schroedinger((0, math.pi), s=PiecewiseCoefficient.step((0, math.pi), x0, 0.0, 1.0))
    chi = BumpFunction(1.2, 0.6)
    tail = integrate.quad(chi, x0, 1.8, epsabs=1e-14, epsrel=1e-13)[0]
    expected = -chi(x0) + tail
    assert formal_potential_pairing(c, chi) == pytest.approx(expected, rel=1e-10, abs=1e-12)


def test_pairing_linear_s_matches_integration_by_parts():
    c = make_schroedinger((0, 3.0), s=PiecewiseCoefficient.from_power([0, 3], [[0.0, 1.0]]))
    chi = BumpFunction(1.5, 1.0)
    expected = integrate.quad(lambda x: (x * x - 1.0) * chi(x), 0.5, 2.5, epsabs=1e-14, epsrel=1e-13)[0]
    assert formal_potential_pairing(c, chi) == pytest.approx(expected, rel=1e-10)


def test_pairing_support_must_be_interior():
    c = make_schroedinger((0, 1))
    with pytest.raises(ValueError):
        formal_potential_pairing(c, BumpFunction(0.1, 0.2))


@settings(max_examples=20, deadline=None)
@given(
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.floats(0.6, 2.4),
    st.floats(0.6, 2.4),
)
def test_pairing_is_linear_in_test_function(alpha, beta, c1, c2):
    c = preset("step_s")
    chi1 = BumpFunction(c1, 0.5)
    chi2 = BumpFunction(c2, 0.4, 2.0)
    combined = chi1 * alpha + chi2 * beta
    lhs = formal_potential_pairing(c, combined)
    rhs = alpha * formal_potential_pairing(c, chi1) + beta * formal_potential_pairing(c, chi2)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-10)


def test_pairing_agrees_with_pointwise_density_for_continuous_s():
    interval = (0.0, 2.0)
    s = PiecewiseCoefficient.fit(np.sin, [0.0, 2.0])
    p = PiecewiseCoefficient.from_power([0, 2], [[1.0, 0.5]])
    q = PiecewiseCoefficient.from_power([0, 2], [[0.3, 0.0, -1.0]])
    c = make_problem(interval, p=p, q=q, r=1.0, s=s)
    chi = BumpFunction(1.0, 0.6)
    density = formal_potential_density(c)
    direct = integrate.quad(lambda x: density(x) * chi(x), 0.4, 1.6, epsabs=1e-14, epsrel=1e-13)[0]
    assert formal_potential_pairing(c, chi) == pytest.approx(direct, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_sqrt_minus_z_properties(z):
    k = EnergyPoint(z).sqrt_minus_z
    assert k.real >= 0
    assert abs(k * k + z) <= 1e-12 * max(1.0, abs(z))


def test_power_basis_round_trip():
    coef = PiecewiseCoefficient.from_power([0, 1, 3], [[1.0, 2.0], [0.0, 0.0, 1.0]])
    x = np.array([0.0, 0.5, 1.0, 2.0, 2.9])
    assert np.allclose(coef(x), [1.0, 2.0, 1.0, 4.0, 8.41], rtol=1e-14)


def test_values_are_right_limits_at_breakpoints():
    coef = PiecewiseCoefficient.step((0, 2), 1.0, -1.0, 5.0)
    assert coef(1.0) == 5.0
    assert coef.left_limit(1.0) == -1.0
    xs, jumps = coef.jumps()
    assert xs.tolist() == [1.0] and jumps.tolist() == [6.0]


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=1, max_size=4),
    st.lists(st.floats(-5, 5), min_size=1, max_size=4),
    st.floats(0.1, 0.9),
)
def test_arithmetic_matches_pointwise_values(c1, c2, cut):
    f = PiecewiseCoefficient.from_power([0, 1], [c1])
    g = PiecewiseCoefficient.from_power([0, cut, 1], [c2, [1.0]])
    x = np.linspace(0, 1, 37)
    assert np.allclose((f + g)(x), f(x) + g(x), atol=1e-11)
    assert np.allclose((f * g)(x), f(x) * g(x), atol=1e-10)
    assert np.allclose((f - 2.0)(x), f(x) - 2.0, atol=1e-12)


def test_antiderivative_and_derivative_are_inverse():
    f = PiecewiseCoefficient.from_power([0, 1, 2], [[1.0, 0.0, 3.0], [2.0, -1.0]])
    F = f.antiderivative(0.0)
    x = np.linspace(0, 2, 21)
    assert np.allclose(F.deriv()(x), f(x), atol=1e-13)
    assert F(0.0) == pytest.approx(0.0, abs=1e-15)
    assert f.integral(0.0, 2.0) == pytest.approx(2.0 + 2.0 - 1.5, rel=1e-14)


def test_fit_reproduces_smooth_function():
    coef = PiecewiseCoefficient.fit(np.cos, [0.0, 1.0, 3.0])
    x = np.linspace(0, 3, 101)
    assert np.max(np.abs(coef(x) - np.cos(x))) < 1e-13


def test_fit_refuses_unresolvable_function():
    with pytest.raises(ValueError):
        PiecewiseCoefficient.fit(lambda x: np.abs(x - 0.3) ** 0.5, [0.0, 1.0], max_degree=32)


def test_from_spec_parses_numbers_and_tables():
    assert PiecewiseCoefficient.from_spec(2.5, (0, 1)).is_constant(2.5)
    coef = PiecewiseCoefficient.from_spec({"breakpoints": [0, 1], "pieces": [[1, 1]]}, (0, 1))
    assert coef(0.5) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        PiecewiseCoefficient.from_spec({"breakpoints": [0, 1], "pieces": [[1]], "oops": 1}, (0, 1))
    with pytest.raises(ValueError):
        PiecewiseCoefficient.from_spec({"breakpoints": [0, 2], "pieces": [[1]]}, (0, 1))
    with pytest.raises(ValueError):
        PiecewiseCoefficient.from_spec(True, (0, 1))


def test_polynomial_bump_is_continuous_with_compact_support():
    nu = PiecewiseCoefficient.bump((0, math.pi), 1.5, 0.5, 2.0, order=3)
    assert nu(1.5) == pytest.approx(2.0)
    assert nu(0.5) == 0.0 and nu(2.5) == 0.0
    _, jumps = nu.jumps()
    assert np.max(np.abs(jumps)) < 1e-15
    _, djumps = nu.deriv().jumps()
    assert np.max(np.abs(djumps)) < 1e-13


def test_restrict_and_reflect(step_s):
    left = restrict(step_s, 0.0, 1.5)
    assert left.interval == (0.0, 1.5)
    assert left.s(1.2) == 1.0
    mirrored = reflect(step_s)
    assert mirrored.interval == (-math.pi, 0.0)
    assert mirrored.s(-2.0) == pytest.approx(-step_s.s(2.0))
    assert mirrored.s(-0.5) == pytest.approx(-step_s.s(0.5))


def test_presets_are_valid():
    for name in ("free", "step_s", "impedance_linear"):
        assert validate(preset(name)).ok
    with pytest.raises(ValueError):
        preset("nope")
    with pytest.raises(ValueError):
        preset("free", sigma=2)


def test_to_dict_round_trip(rng):
    c = random_problem(rng)
    data = c.to_dict()
    rebuilt = {k: PiecewiseCoefficient.from_spec(v, c.interval) for k, v in data["coefficients"].items()}
    x = np.linspace(c.a, c.b, 53)
    for k, coef in rebuilt.items():
        assert np.array_equal(coef(x), getattr(c, k)(x))
