import math

import numpy as np
import pytest
from scipy import integrate

from quasispec import (
    BumpFunction,
    GaugeSpec,
    ImpedanceSpec,
    LiouvilleMap,
    MapError,
    PiecewiseCoefficient,
    compose,
    eigenvalues,
    formal_potential_pairing,
    gauge_transform,
    impedance_factor,
    impedance_map,
    impedance_transform,
    liouville_apply,
    make_impedance,
    make_schroedinger,
    pullback,
    same_expression,
    transport_angle,
)
from conftest import random_problem

PI = math.pi


def _samples(c, n=200):
    return np.linspace(c.a, c.b, n + 2)[1:-1]


def _max_diff(c1, c2, name):
    x = _samples(c1)
    return float(np.max(np.abs(getattr(c1, name)(x) - getattr(c2, name)(x))))


def test_identity_map_leaves_coefficients(rng):
    c = random_problem(rng)
    out = liouville_apply(c, LiouvilleMap.identity(c.interval))
    for name in "pqrs":
        assert _max_diff(c, out, name) < 1e-12


def test_literal_gauge_relations_on_free_problem(free):
    nu = PiecewiseCoefficient.bump(free.interval, 1.4, 0.8, 0.9, order=3)
    out = liouville_apply(free, LiouvilleMap.build(free.interval, nu=nu))
    x = _samples(free)
    assert np.max(np.abs(out.p(x) - 1)) < 1e-12 and np.max(np.abs(out.r(x) - 1)) < 1e-12
    # from eta' s2 = s1 + (kappa' - nu/p1)/kappa with s1 = 0, kappa = 1
    assert np.max(np.abs(out.s(x) + nu(x))) < 1e-9
    assert np.max(np.abs(out.q(x) - (-nu(x) ** 2 - nu.deriv()(x)))) < 1e-9


def test_gauge_transform_equals_map_with_opposite_nu(step_s):
    nu = PiecewiseCoefficient.bump(step_s.interval, 1.8, 0.9, -0.6, order=3)
    by_gauge = gauge_transform(step_s, GaugeSpec(0.0, nu))
    by_map = liouville_apply(step_s, LiouvilleMap.build(step_s.interval, nu=-nu))
    for name in "qs":
        assert _max_diff(by_gauge, by_map, name) < 1e-9


def test_gauge_with_sine_squared(free):
    out = gauge_transform(free, GaugeSpec(0.0, lambda x: np.sin(x) ** 2))
    x = _samples(free)
    assert np.max(np.abs(out.s(x) - np.sin(x) ** 2)) < 1e-9
    assert np.max(np.abs(out.q(x) - (-np.sin(x) ** 4 + 2 * np.sin(x) * np.cos(x)))) < 1e-8


def test_gauge_zero_and_shift(step_s):
    same = gauge_transform(step_s, GaugeSpec())
    assert _max_diff(step_s, same, "s") == 0 and _max_diff(step_s, same, "q") == 0
    shifted = gauge_transform(step_s, GaugeSpec(eta0=2.0))
    assert shifted.interval == (2.0, 2.0 + PI)
    assert shifted.s(3.5) == step_s.s(1.5)


def test_gauge_rejects_discontinuous_nu_and_non_schroedinger(step_s):
    with pytest.raises(ValueError):
        gauge_transform(step_s, GaugeSpec(0.0, PiecewiseCoefficient.step(step_s.interval, 1.0, 0.0, 1.0)))
    p = PiecewiseCoefficient.from_power([0, 1], [[1.0, 1.0]])
    with pytest.raises(ValueError):
        gauge_transform(make_impedance((0, 1), p), GaugeSpec())


def test_formal_potential_is_gauge_invariant(step_s, rng):
    nu = PiecewiseCoefficient.bump(step_s.interval, 1.5, 1.0, 0.7, order=3)
    other = gauge_transform(step_s, GaugeSpec(0.0, nu))
    for _ in range(5):
        center = rng.uniform(0.7, 2.4)
        chi = BumpFunction(center, rng.uniform(0.2, 0.6), rng.uniform(0.5, 2.0))
        assert formal_potential_pairing(other, chi) == pytest.approx(formal_potential_pairing(step_s, chi), abs=1e-9)


def test_dilation_spectrum_and_isometry(free):
    m = LiouvilleMap.build(free.interval, eta=lambda x: 2 * x, kappa=1 / math.sqrt(2))
    out = liouville_apply(free, m)
    assert np.allclose(out.interval, (0, 2 * PI), atol=1e-12)
    x = _samples(out)
    assert np.max(np.abs(out.p(x) - 1)) < 1e-12
    assert np.max(np.abs(out.r(x) - 0.25)) < 1e-12
    # -4 f'' = z f on (0, 2 pi) with Dirichlet ends has eigenvalues n^2
    spec = eigenvalues(out, window=(0, 50))
    assert np.max(np.abs(spec.eigenvalues - np.arange(1, 8) ** 2)) < 1e-8
    f2 = lambda y: np.sin(1.5 * y) * y
    v = pullback(f2, m)
    lhs = integrate.quad(lambda t: v(t) ** 2 * free.r(t), 0, PI, epsabs=1e-14, epsrel=1e-13)[0]
    rhs = integrate.quad(lambda y: f2(y) ** 2 * out.r(y), 0, 2 * PI, epsabs=1e-14, epsrel=1e-13)[0]
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_identity_pullback(free):
    f = lambda x: np.cos(3 * x)
    x = _samples(free)
    assert np.max(np.abs(pullback(f, LiouvilleMap.identity(free.interval))(x) - f(x))) < 1e-14


def _general_map(interval):
    a, b = interval
    L = b - a
    return LiouvilleMap.build(
        interval,
        eta=lambda x: 0.5 + x + 0.1 * (x - a) ** 2 / L,
        kappa=lambda x: 1.0 + 0.2 * np.cos(x),
        nu=lambda x: 0.3 * np.sin(2 * x),
    )


@pytest.mark.parametrize("phi_a,phi_b", [(0.0, 0.0), (0.6, 1.1)])
def test_general_map_is_isospectral_with_transported_angles(rng, phi_a, phi_b):
    c = random_problem(rng)
    m = _general_map(c.interval)
    out = liouville_apply(c, m)
    lam1 = eigenvalues(c, phi_a, phi_b, window=(-50, 150)).eigenvalues
    lam2 = eigenvalues(
        out, transport_angle(m, phi_a, "a"), transport_angle(m, phi_b, "b"), window=(-50, 150)
    ).eigenvalues
    assert len(lam1) == len(lam2) > 3
    assert np.max(np.abs(lam1 - lam2)) < 2e-7


def test_pulled_back_eigenfunction_is_eigenfunction(rng):
    c = random_problem(rng)
    m = _general_map(c.interval)
    out = liouville_apply(c, m)
    s1 = eigenvalues(c, window=(0, 40))
    s2 = eigenvalues(out, window=(0, 40))
    x = np.linspace(c.a + 0.05, c.b - 0.05, 41)
    for t1, t2 in zip(s1.traces, s2.traces):
        back = pullback(lambda y, t2=t2: t2(y)[0].real, m)(x)
        orig = t1(x)[0].real
        ratio = np.dot(back, orig) / np.dot(orig, orig)
        assert np.max(np.abs(back - ratio * orig)) < 1e-7 * np.max(np.abs(back))


def test_transport_angle_examples():
    m = LiouvilleMap.build((0, 1), kappa=2.0, nu=0.5)
    assert transport_angle(m, 0.0) == 0.0
    assert transport_angle(m, PI / 2) == pytest.approx(PI - math.atan2(0.5, 0.5), abs=1e-15)
    assert transport_angle(LiouvilleMap.identity((0, 1)), 0.7, "b") == pytest.approx(0.7)
    with pytest.raises(ValueError):
        transport_angle(m, 0.1, "c")


def test_composition_matches_sequential_application(rng):
    c = random_problem(rng)
    first = _general_map(c.interval)
    mid = liouville_apply(c, first)
    second = LiouvilleMap.build(mid.interval, eta=lambda y: 2.0 * y, kappa=lambda y: 1.0 + 0.1 * y, nu=0.2)
    twice = liouville_apply(mid, second)
    once = liouville_apply(c, compose(first, second))
    for name in "pqrs":
        scale = 1.0 + float(np.max(np.abs(getattr(once, name)(_samples(once)))))
        assert _max_diff(once, twice, name) < 1e-8 * scale


def test_map_invariants_are_enforced():
    with pytest.raises(MapError):
        LiouvilleMap.build((0, 1), eta=lambda x: -x)
    with pytest.raises(MapError):
        LiouvilleMap.build((0, 1), kappa=lambda x: x - 0.5)
    with pytest.raises(MapError):
        LiouvilleMap.build((0, 1), nu=PiecewiseCoefficient.step((0, 1), 0.5, 0.0, 1.0))


def test_inverse_eta_round_trip():
    m = _general_map((0.0, PI))
    x = np.linspace(0, PI, 23)
    assert np.max(np.abs(m.inverse_eta(m.eta(x)) - x)) < 1e-13


def test_impedance_trivial_and_scaled():
    p1 = PiecewiseCoefficient.from_power([0, 2], [[1.0, 0.5, 0.25]])
    c1 = make_impedance((0, 2), p1)
    same = impedance_transform(c1, ImpedanceSpec())
    assert _max_diff(c1, same, "p") == 0
    nine = impedance_transform(c1, ImpedanceSpec(kappa0=3.0))
    x = _samples(c1)
    assert np.allclose(nine.p(x), 9 * p1(x), rtol=1e-15)
    lam1 = eigenvalues(c1, window=(0, 80)).eigenvalues
    lam2 = eigenvalues(nine, window=(0, 80)).eigenvalues
    assert len(lam1) > 3 and np.max(np.abs(lam1 - lam2)) < 2e-7


def test_impedance_factor_closed_form():
    p1 = PiecewiseCoefficient.constant(1.0, (0, 1))
    out = impedance_transform(p1, ImpedanceSpec(nu0=1.0, kappa0=1.0, c1=0.0))
    x = np.linspace(0, 1, 11)
    assert np.allclose(out.p(x), (x + 1) ** 2, rtol=1e-14)
    assert out.is_impedance()


def test_impedance_with_nu0_is_isospectral_with_transported_angles():
    p1 = PiecewiseCoefficient.from_power([0, 1.5], [[1.0, 0.4]])
    c1 = make_impedance((0, 1.5), p1)
    spec = ImpedanceSpec(eta0=0.3, nu0=0.5, kappa0=1.2)
    m = impedance_map(p1, spec)
    c2 = impedance_transform(c1, spec)
    via_map = liouville_apply(c1, m)
    for name in "pqrs":
        assert _max_diff(c2, via_map, name) < 1e-9
    lam1 = eigenvalues(c1, window=(0, 200)).eigenvalues
    lam2 = eigenvalues(c2, transport_angle(m, 0.0), transport_angle(m, 0.0, "b"), window=(0, 200)).eigenvalues
    assert np.max(np.abs(lam1 - lam2)) < 2e-7


def test_impedance_factor_must_not_vanish():
    p1 = PiecewiseCoefficient.constant(1.0, (0, 1))
    assert impedance_factor(p1, ImpedanceSpec(nu0=-2.0, kappa0=1.0, c1=0.0))(0.5) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        impedance_transform(p1, ImpedanceSpec(nu0=-4.0, kappa0=1.0, c1=0.0))


def test_same_expression_cases(step_s):
    nu = PiecewiseCoefficient.bump(step_s.interval, 1.5, 1.0, 0.7, order=3)
    assert same_expression(step_s, gauge_transform(step_s, GaugeSpec(0.0, nu)))
    shifted = make_schroedinger(step_s.interval, q=step_s.q + 1.0, s=step_s.s)
    report = same_expression(step_s, shifted)
    assert not report and report.defect == pytest.approx(1.0)
    # the same potential without the point mass: no interior defect, but s1 - s2 jumps
    smooth = make_schroedinger(step_s.interval, q=step_s.s * step_s.s)
    report = same_expression(step_s, smooth)
    assert report.defect < 1e-12 and report.max_jump == pytest.approx(1.0)
    assert not report.same
    assert same_expression(step_s, smooth, subinterval=(0.0, 0.9)).same
