import math

import numpy as np
import pytest

from quasispec import (
    GaugeSpec,
    ImpedanceSpec,
    PiecewiseCoefficient,
    borg_marchenko_decay,
    gauge_transform,
    impedance_transform,
    interlaces,
    log_slope,
    make_impedance,
    make_schroedinger,
    m_values,
    match_spectra,
    n_function,
    n_residue_check,
    three_spectra_verify,
    two_spectra_verify,
)

PI = math.pi
GRID = (1e2, 10**2.5, 1e3, 10**3.5, 1e4)


def _q_on(lo, hi, value=1.0):
    """Free-problem potential equal to ``value`` on ``[lo, hi)`` and zero elsewhere on (0, pi)."""
    inner = [x for x in (lo, hi) if 0.0 < x < PI]
    levels = ([0.0] if lo > 0 else []) + [value] + ([0.0] if hi < PI else [])
    return PiecewiseCoefficient([0.0, *inner, PI], tuple(np.array([v]) for v in levels))


def test_match_spectra_and_interlacing():
    assert match_spectra(np.array([1.0, 4.0]), np.array([1.0, 4.0 + 1e-8])) == (pytest.approx(1e-8), None)
    dev, bad = match_spectra(np.array([1.0, 4.0]), np.array([1.0, 4.1]))
    assert bad == 1 and dev == pytest.approx(0.1)
    assert match_spectra(np.array([1.0]), np.array([1.0, 2.0]))[1] == 1
    assert interlaces(np.array([1.0, 3.0]), np.array([2.0, 4.0]))
    assert not interlaces(np.array([1.0, 3.0]), np.array([3.0, 4.0]))


def test_identical_problems_pass_exactly(step_s):
    report = two_spectra_verify(step_s, step_s, window=(-5, 60))
    assert report.passed and report.deviation == 0.0
    assert all(report.interlacing.values())


def test_gauge_related_pair_passes(step_s):
    nu = PiecewiseCoefficient.bump(step_s.interval, 1.6, 1.0, 0.8, order=3)
    other = gauge_transform(step_s, GaugeSpec(0.0, nu))
    report = two_spectra_verify(step_s, other, GaugeSpec(0.0, nu), window=(-5, 100))
    assert report.passed, report.to_dict()
    assert report.deviation < 2e-7
    assert report.to_dict()["status"] == "PASS"


def test_impedance_related_pair_passes():
    p1 = PiecewiseCoefficient.from_power([0, 1], [[1.0, 0.5]])
    c1 = make_impedance((0, 1), p1)
    spec = ImpedanceSpec(nu0=0.0, kappa0=2.0)
    report = two_spectra_verify(c1, impedance_transform(c1, spec), spec, window=(0, 300))
    assert report.passed


def test_localized_perturbation_fails(free):
    other = make_schroedinger(free.interval, q=_q_on(0.0, 0.1))
    report = two_spectra_verify(free, other, window=(0, 100))
    assert not report.passed
    assert report.deviation > 1e-4
    assert report.to_dict()["status"] == "FAIL"


def test_window_mismatch_is_rejected(free):
    with pytest.raises(ValueError):
        two_spectra_verify(free, free, window=(0, 50), window2=(0, 60))


def test_three_spectra_free_generic_point(free):
    report = three_spectra_verify(free, 1.0)
    assert report.passed and report.n_defect < 1e-8
    assert report.disjoint
    n = np.arange(1, 4)
    assert np.allclose(report.sigma_a.eigenvalues[:3], (n * PI) ** 2, atol=1e-7)
    assert np.allclose(report.sigma_b.eigenvalues[:3], (n * PI / (PI - 1)) ** 2, atol=1e-7)


def test_three_spectra_midpoint_is_degenerate(free):
    report = three_spectra_verify(free, PI / 2)
    assert not report.disjoint
    assert np.allclose(report.common, [4.0, 16.0, 36.0, 64.0, 100.0][: len(report.common)], atol=1e-7)
    assert len(report.common) >= 3
    assert np.allclose(report.sigma_a.eigenvalues, report.sigma_b.eigenvalues, atol=1e-8)


def test_three_spectra_step_s_and_angles(step_s):
    report = three_spectra_verify(step_s, 1.7, phi_c=0.4, phi_a=0.3, phi_b=1.2, window=(-10, 100))
    assert report.n_defect < 1e-8
    data = report.to_dict()
    assert data["status"] == "PASS" and set(data["sigma"]) == {"full", "a", "b"}


def test_n_function_closed_form_on_free_problem(free):
    # Dirichlet everywhere: W_a = phi(c), W_b = chi(c), W = W(chi, phi)
    z = np.array([-1.0 + 0j, 2.0 + 1.0j])
    k = np.sqrt(z)
    c = 1.0
    phi = np.sin(k * c) / k
    chi = np.sin(k * (PI - c)) / k
    w = np.sin(k * PI) / k
    expected = phi * chi / w
    assert np.allclose(n_function(free, c, z, 0.0), expected, rtol=1e-9)


def test_n_residue_matches_product_formula(step_s):
    lam = three_spectra_verify(step_s, 1.7, window=(0, 10)).sigma_full.eigenvalues[0]
    from_weyl, from_product = n_residue_check(step_s, 1.7, lam)
    assert from_weyl == pytest.approx(from_product, rel=1e-5)


def test_log_slope_helper():
    x = np.array([1e2, 1e3, 1e4])
    assert log_slope(x, x**-0.5) == pytest.approx(-0.5)
    assert log_slope(x, np.zeros(3)) == -math.inf


def test_bm_identical_problems_have_zero_difference(step_s):
    report = borg_marchenko_decay(step_s, step_s, PI / 2, grid=(1e2, 1e3))
    assert np.all(report.difference == 0)
    assert report.bounded()


def test_bm_agreeing_pair_is_bounded(free):
    other = make_schroedinger(free.interval, q=_q_on(PI / 2, PI))
    report = borg_marchenko_decay(free, other, PI / 2, grid=GRID)
    assert report.agree_on_left and report.method == "riccati"
    assert report.attained == (1e2, 1e4)
    assert report.slope <= 0.1
    assert report.bounded()


def test_bm_disagreeing_pair_explodes(free):
    other = make_schroedinger(free.interval, q=_q_on(0.0, PI / 4))
    report = borg_marchenko_decay(free, other, PI / 2, grid=GRID)
    assert not report.agree_on_left
    assert report.slope >= 1.0
    ratios = report.ratio
    per_decade = (ratios[-1] / ratios[0]) ** (1 / math.log10(report.moduli[-1] / report.moduli[0]))
    assert per_decade >= 10
    assert report.to_dict()["rows"]


def test_bm_riccati_difference_matches_direct_subtraction(free):
    other = make_schroedinger(free.interval, q=_q_on(PI / 2, PI))
    zs = np.array([10.0, 50.0]) * np.exp(1j * 3 * PI / 4)
    report = borg_marchenko_decay(free, other, PI / 2, grid=np.abs(zs))
    direct = np.abs(m_values(free, zs) - m_values(other, zs))
    assert np.allclose(report.difference, direct, rtol=1e-6)


def test_bm_requires_schroedinger_form():
    p = PiecewiseCoefficient.from_power([0, 1], [[1.0, 1.0]])
    c = make_impedance((0, 1), p)
    with pytest.raises(ValueError):
        borg_marchenko_decay(c, c, 0.5)
