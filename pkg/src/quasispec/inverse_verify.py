"""Checks of the two-spectra, three-spectra and local Borg-Marchenko statements on known pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _dop853
from .coefficients import CoefficientSet, reflect, restrict
from .quasi_ode import DEFAULT_ATOL, DEFAULT_RTOL, integrate_columns
from .spectral import PoleError, Spectrum, as_angle, eigenvalues, m_values
from .transforms import (
    GaugeSpec,
    ImpedanceSpec,
    LiouvilleMap,
    _as_piecewise,
    impedance_map,
    same_expression,
    transport_angle,
)

__all__ = [
    "SPECTRA_TOL",
    "TwoSpectraReport",
    "ThreeSpectraReport",
    "DecayReport",
    "match_spectra",
    "interlaces",
    "two_spectra_verify",
    "three_spectra_verify",
    "n_function",
    "n_residue_check",
    "borg_marchenko_decay",
    "log_slope",
]

SPECTRA_TOL = 2e-7
DEFAULT_SAMPLES = (-1.0, 1j, 2.0 + 1j)
DEFAULT_GRID = (1e2, 10**2.5, 1e3, 10**3.5, 1e4)
# exponent budget for exp(Re sqrt(-z) * length) in the raw system
_GROWTH_CAP = 650.0


def match_spectra(first: np.ndarray, second: np.ndarray, tol: float = SPECTRA_TOL):
    """Pairwise comparison of two sorted eigenvalue lists.

    Returns ``(max_deviation, bad_index)``; ``bad_index`` is the first index
    whose deviation exceeds ``tol`` (or the first unmatched index), else ``None``.
    """
    n = min(len(first), len(second))
    dev = np.abs(np.asarray(first[:n]) - np.asarray(second[:n]))
    worst = float(dev.max()) if n else 0.0
    over = np.flatnonzero(dev > tol)
    if over.size:
        return worst, int(over[0])
    if len(first) != len(second):
        return (math.inf, n)
    return worst, None


def interlaces(first: np.ndarray, second: np.ndarray) -> bool:
    """Strict alternation of the merged sequence (either list may lead)."""
    merged = sorted([(float(v), 0) for v in first] + [(float(v), 1) for v in second])
    for (v0, k0), (v1, k1) in zip(merged[:-1], merged[1:]):
        if k0 == k1 or v0 == v1:
            return False
    return True


# -- two spectra ----------------------------------------------------------------------


@dataclass
class TwoSpectraReport:
    """Spectra ``S`` (first angle at ``a``) and ``T`` (second angle) of two problems."""

    spectra: dict
    angles: dict
    deviation_s: float
    deviation_t: float
    bad_index: Optional[tuple]
    interlacing: dict
    tol: float = SPECTRA_TOL

    @property
    def deviation(self) -> float:
        return max(self.deviation_s, self.deviation_t)

    @property
    def passed(self) -> bool:
        return self.bad_index is None and self.deviation <= self.tol

    def to_dict(self) -> dict:
        return {
            "status": "PASS" if self.passed else "FAIL",
            "deviation_S": self.deviation_s,
            "deviation_T": self.deviation_t,
            "bad_index": self.bad_index,
            "interlacing": self.interlacing,
            "angles": self.angles,
            "spectra": {k: [float(v) for v in s.eigenvalues] for k, s in self.spectra.items()},
        }


def _as_map(c1: CoefficientSet, link) -> Optional[LiouvilleMap]:
    if link is None or isinstance(link, LiouvilleMap):
        return link
    if isinstance(link, GaugeSpec):
        # the gauge shift s2 = s1 + nu corresponds to the map with kappa = 1 and -nu
        nu = -_as_piecewise(link.nu, c1.interval)
        return LiouvilleMap.build(c1.interval, eta=lambda x: x + link.eta0, kappa=1.0, nu=nu)
    if isinstance(link, ImpedanceSpec):
        return impedance_map(c1, link)
    raise TypeError("link must be a LiouvilleMap, GaugeSpec, ImpedanceSpec or None")


def two_spectra_verify(
    c1: CoefficientSet,
    c2: CoefficientSet,
    link=None,
    phi_a: Sequence = (0.0, math.pi / 2),
    phi_b=0.0,
    window: Sequence[float] = (0.0, 100.0),
    window2: Optional[Sequence[float]] = None,
    tol: float = SPECTRA_TOL,
    **kw,
) -> TwoSpectraReport:
    """Compare ``sigma(S_j)`` and ``sigma(T_j)`` for two related problems.

    ``link`` (a map, a gauge or an impedance specification, or ``None`` for
    the identity) only serves to transport the boundary angles to the
    second problem.
    """
    if window2 is not None and tuple(map(float, window2)) != tuple(map(float, window)):
        raise ValueError(f"window mismatch: {tuple(window)} vs {tuple(window2)}")
    alpha = [as_angle(v) for v in phi_a]
    if len(alpha) != 2 or alpha[0] == alpha[1]:
        raise ValueError("need two distinct angles at a")
    beta = as_angle(phi_b)
    tmap = _as_map(c1, link)
    if tmap is None:
        alpha2, beta2 = alpha, beta
    else:
        alpha2 = [transport_angle(tmap, v, "a") for v in alpha]
        beta2 = transport_angle(tmap, beta, "b")
    spectra = {
        "S1": eigenvalues(c1, alpha[0], beta, window, **kw),
        "T1": eigenvalues(c1, alpha[1], beta, window, **kw),
        "S2": eigenvalues(c2, alpha2[0], beta2, window, **kw),
        "T2": eigenvalues(c2, alpha2[1], beta2, window, **kw),
    }
    dev_s, bad_s = match_spectra(spectra["S1"].eigenvalues, spectra["S2"].eigenvalues, tol)
    dev_t, bad_t = match_spectra(spectra["T1"].eigenvalues, spectra["T2"].eigenvalues, tol)
    bad = ("S", bad_s) if bad_s is not None else (("T", bad_t) if bad_t is not None else None)
    inter = {
        "problem1": interlaces(spectra["S1"].eigenvalues, spectra["T1"].eigenvalues),
        "problem2": interlaces(spectra["S2"].eigenvalues, spectra["T2"].eigenvalues),
    }
    angles = {"problem1": (alpha, beta), "problem2": (alpha2, beta2)}
    return TwoSpectraReport(spectra, angles, dev_s, dev_t, bad, inter, tol)


# -- three spectra ----------------------------------------------------------------------


@dataclass
class ThreeSpectraReport:
    cpt: float
    phi_c: float
    sigma_full: Spectrum
    sigma_a: Spectrum
    sigma_b: Spectrum
    z_samples: np.ndarray
    n_wronskian: np.ndarray
    n_weyl: np.ndarray
    common: list
    tol: float = 1e-8

    @property
    def n_defects(self) -> np.ndarray:
        scale = np.maximum(np.abs(self.n_wronskian), 1e-300)
        return np.abs(self.n_wronskian - self.n_weyl) / scale

    @property
    def n_defect(self) -> float:
        return float(np.max(self.n_defects)) if self.n_defects.size else 0.0

    @property
    def disjoint(self) -> bool:
        return not self.common

    @property
    def passed(self) -> bool:
        return self.n_defect < self.tol

    def to_dict(self) -> dict:
        return {
            "status": "PASS" if self.passed else "FAIL",
            "cpt": self.cpt,
            "phi_c": self.phi_c,
            "n_defect": self.n_defect,
            "disjoint": self.disjoint,
            "common_eigenvalues": self.common,
            "z_samples": [[float(z.real), float(z.imag)] for z in self.z_samples],
            "sigma": {k: [float(v) for v in s.eigenvalues] for k, s in self._spectra().items()},
        }

    def _spectra(self):
        return {"full": self.sigma_full, "a": self.sigma_a, "b": self.sigma_b}


def _split_checks(c: CoefficientSet, cpt: float):
    cpt = float(cpt)
    if not c.a < cpt < c.b:
        raise ValueError(f"cut point {cpt} not inside ({c.a}, {c.b})")
    return cpt


def n_function(c: CoefficientSet, cpt: float, zs, phi_c, phi_a=0.0, phi_b=0.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """``W_a W_b / W`` from the solutions anchored at ``a`` and at ``b``, evaluated at ``cpt``.

    ``W = phi_b phi_a^[1] - phi_b^[1] phi_a`` and ``W_a``, ``W_b`` are the
    boundary forms of the two solutions for the angle ``phi_c`` at ``cpt``.
    """
    cpt = _split_checks(c, cpt)
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    ac, aa, ab = as_angle(phi_c), as_angle(phi_a), as_angle(phi_b)
    ya = np.empty((2, zs.size), dtype=complex)
    ya[0], ya[1] = math.sin(aa), math.cos(aa)
    yb = np.empty((2, zs.size), dtype=complex)
    yb[0], yb[1] = math.sin(ab), math.cos(ab)
    fa, ga = integrate_columns(c, zs, c.a, ya, cpt, rtol=rtol, atol=atol).ys[-1]
    fb, gb = integrate_columns(c, zs, c.b, yb, cpt, rtol=rtol, atol=atol).ys[-1]
    cc, sc = math.cos(ac), math.sin(ac)
    w_a = fa * cc - ga * sc
    w_b = fb * cc - gb * sc
    w = fb * ga - gb * fa
    scale = np.abs(fa) * np.abs(gb) + np.abs(ga) * np.abs(fb)
    bad = np.abs(w) <= 1e-12 * scale
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise PoleError(complex(zs[j]), float(abs(w[j]) / scale[j]))
    return w_a * w_b / w


def _left_weyl(c: CoefficientSet, cpt: float, zs, phi_c, phi_a, rtol, atol):
    # Weyl function of (a, cpt) seen from cpt, via the mirror image; angles flip to pi - angle
    left = reflect(restrict(c, c.a, cpt))
    flip = lambda v: (math.pi - as_angle(v)) % math.pi
    return m_values(left, zs, flip(phi_c), flip(phi_a), rtol, atol)


def _weyl_pair(c, cpt, zs, phi_c, phi_a, phi_b, rtol, atol):
    m_a = _left_weyl(c, cpt, zs, phi_c, phi_a, rtol, atol)
    m_b = m_values(restrict(c, cpt, c.b), zs, phi_c, phi_b, rtol, atol)
    return m_a, m_b


def three_spectra_verify(
    c: CoefficientSet,
    cpt: float,
    phi_c=0.0,
    phi_a=0.0,
    phi_b=0.0,
    window: Sequence[float] = (0.0, 100.0),
    z_samples: Sequence[complex] = DEFAULT_SAMPLES,
    tol: float = 1e-8,
    common_tol: float = SPECTRA_TOL,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> ThreeSpectraReport:
    """Spectra on ``(a, b)``, ``(a, cpt)`` and ``(cpt, b)`` and the identity ``N = -1/(m_a + m_b)``.

    ``N`` is computed from Wronskians of the solutions anchored at the
    endpoints; ``m_a`` and ``m_b`` are the Weyl functions of the two halves
    with reference point ``cpt`` (``m_a`` through the mirrored left half).
    """
    cpt = _split_checks(c, cpt)
    zs = np.asarray(z_samples, dtype=complex)
    full = eigenvalues(c, phi_a, phi_b, window, rtol=rtol, atol=atol)
    left = eigenvalues(restrict(c, c.a, cpt), phi_a, phi_c, window, rtol=rtol, atol=atol)
    right = eigenvalues(restrict(c, cpt, c.b), phi_c, phi_b, window, rtol=rtol, atol=atol)
    n_w = n_function(c, cpt, zs, phi_c, phi_a, phi_b, rtol, atol)
    m_a, m_b = _weyl_pair(c, cpt, zs, phi_c, phi_a, phi_b, rtol, atol)
    n_m = -1.0 / (m_a + m_b)
    common = []
    for lam in full.eigenvalues:
        near_a = np.any(np.abs(left.eigenvalues - lam) <= common_tol * (1 + abs(lam)))
        near_b = np.any(np.abs(right.eigenvalues - lam) <= common_tol * (1 + abs(lam)))
        if near_a and near_b:
            common.append(float(lam))
    return ThreeSpectraReport(cpt, as_angle(phi_c), full, left, right, zs, n_w, n_m, common, tol)


def n_residue_check(
    c: CoefficientSet,
    cpt: float,
    lam: float,
    phi_c=0.0,
    phi_a=0.0,
    phi_b=0.0,
    eps: Sequence[float] = (4e-3, 2e-3, 1e-3, 5e-4),
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> tuple[float, float]:
    """Residue of ``N`` at an eigenvalue ``lam`` of the full problem, two ways.

    The first value is ``lim i eps N(lam + i eps)`` with ``N = -1/(m_a + m_b)``
    (extrapolated in ``eps``); the second is ``W_a W_b / W'`` at ``lam``
    with ``W'`` from a central difference.
    """
    eps_arr = np.asarray(eps, dtype=float)
    m_a, m_b = _weyl_pair(c, cpt, lam + 1j * eps_arr, phi_c, phi_a, phi_b, rtol, atol)
    table = 1j * eps_arr * (-1.0 / (m_a + m_b))
    for k in range(1, len(eps_arr)):
        e_lo, e_hi = eps_arr[k:], eps_arr[:-k]
        table = table[1:] + (table[1:] - table[:-1]) * e_lo / (e_hi - e_lo)
    from_weyl = float(table[0].real)

    h = 1e-4 * max(1.0, abs(lam))
    zs = np.array([lam, lam - h, lam + h], dtype=complex)
    ac, aa, ab = as_angle(phi_c), as_angle(phi_a), as_angle(phi_b)
    ya = np.array([[math.sin(aa)] * 3, [math.cos(aa)] * 3], dtype=complex)
    yb = np.array([[math.sin(ab)] * 3, [math.cos(ab)] * 3], dtype=complex)
    fa, ga = integrate_columns(c, zs, c.a, ya, cpt, rtol=rtol, atol=atol).ys[-1]
    fb, gb = integrate_columns(c, zs, c.b, yb, cpt, rtol=rtol, atol=atol).ys[-1]
    w = fb * ga - gb * fa
    w_a = fa[0] * math.cos(ac) - ga[0] * math.sin(ac)
    w_b = fb[0] * math.cos(ac) - gb[0] * math.sin(ac)
    dw = (w[2] - w[1]) / (2 * h)
    return from_weyl, float((w_a * w_b / dw).real)


# -- local Borg-Marchenko -------------------------------------------------------------


def log_slope(moduli, values) -> float:
    """Least-squares slope of ``log10(values)`` against ``log10(moduli)`` over positive entries."""
    x = np.log10(np.asarray(moduli, dtype=float))
    v = np.asarray(values, dtype=float)
    keep = v > 0
    if not np.any(keep):
        return -math.inf
    if np.count_nonzero(keep) < 2:
        return math.nan
    return float(np.polyfit(x[keep], np.log10(v[keep]), 1)[0])


@dataclass
class DecayReport:
    """``|m1 - m2|`` along a ray against the comparator ``1/|sqrt(-z) phi_1(cpt)^2|``."""

    ray: float
    moduli: np.ndarray
    difference: np.ndarray
    comparator: np.ndarray
    agree_on_left: bool
    method: str
    requested: np.ndarray = field(default_factory=lambda: np.empty(0))
    hl_ratio: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def ratio(self) -> np.ndarray:
        return self.difference / self.comparator

    @property
    def slope(self) -> float:
        return log_slope(self.moduli, self.ratio)

    @property
    def attained(self) -> tuple[float, float]:
        return (float(self.moduli[0]), float(self.moduli[-1])) if self.moduli.size else (math.nan, math.nan)

    def bounded(self, limit: float = 0.1) -> bool:
        return self.slope <= limit

    def to_dict(self) -> dict:
        return {
            "ray": self.ray,
            "agree_on_left": self.agree_on_left,
            "method": self.method,
            "attained": list(self.attained),
            "slope": self.slope,
            "rows": [
                {"abs_z": float(r), "difference": float(d), "comparator": float(k), "ratio": float(d / k)}
                for r, d, k in zip(self.moduli, self.difference, self.comparator)
            ],
        }


def _identical_on(c1: CoefficientSet, c2: CoefficientSet, lo: float, hi: float) -> bool:
    x = np.linspace(lo, hi, 401)[1:-1]
    return all(np.array_equal(getattr(c1, k)(x), getattr(c2, k)(x)) for k in "pqrs") and all(
        np.array_equal(getattr(c1, k).breakpoints[(getattr(c1, k).breakpoints > lo) & (getattr(c1, k).breakpoints < hi)],
                       getattr(c2, k).breakpoints[(getattr(c2, k).breakpoints > lo) & (getattr(c2, k).breakpoints < hi)])
        for k in "pqrs"
    )


def _riccati_at(c: CoefficientSet, zs, cpt, phi_b, rtol, atol) -> np.ndarray:
    """``chi^[1]/chi`` at ``cpt`` for the solution obeying the condition at ``b``."""
    ab = as_angle(phi_b)
    yb = np.empty((2, zs.size), dtype=complex)
    yb[0], yb[1] = math.sin(ab), math.cos(ab)
    f, g = integrate_columns(c, zs, c.b, yb, cpt, rtol=rtol, atol=atol).ys[-1]
    return g / f, f


def _left_system(c: CoefficientSet, zs, cpt, phi_a, rtol, atol):
    aa = as_angle(phi_a)
    y0 = np.empty((2, 2 * zs.size), dtype=complex)
    y0[0, : zs.size], y0[1, : zs.size] = math.cos(aa), -math.sin(aa)
    y0[0, zs.size :], y0[1, zs.size :] = math.sin(aa), math.cos(aa)
    run = integrate_columns(c, np.concatenate([zs, zs]), c.a, y0, cpt, rtol=rtol, atol=atol)
    f, g = run.ys[-1]
    return (f[: zs.size], g[: zs.size]), (f[zs.size :], g[zs.size :])


def _growth_ok(c: CoefficientSet, z: complex) -> bool:
    return (np.sqrt(-complex(z))).real * c.length <= _GROWTH_CAP


def borg_marchenko_decay(
    c1: CoefficientSet,
    c2: CoefficientSet,
    cpt: float,
    ray: float = 3 * math.pi / 4,
    grid: Sequence[float] = DEFAULT_GRID,
    phi_a=0.0,
    phi_b=0.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> DecayReport:
    """``|m1(z) - m2(z)|`` and the comparator on ``z = |z| e^{i ray}``.

    When the coefficients coincide on ``(a, cpt)`` the difference is
    formed without cancellation: with ``theta``, ``phi`` the shared
    solutions at ``cpt`` and ``rho_j`` the Riccati values there of the
    solutions anchored at ``b``,
    ``m1 - m2 = (rho_1 - rho_2) / ((phi^[1] - rho_1 phi)(phi^[1] - rho_2 phi))``.
    Otherwise the two Weyl functions are subtracted directly.  Grid points
    whose growth exceeds the double range are dropped.
    """
    if not (c1.is_schroedinger() and c2.is_schroedinger()):
        raise ValueError("Borg-Marchenko check needs p = r = 1")
    cpt = _split_checks(c1, cpt)
    if not np.isclose(c1.a, c2.a):
        raise ValueError("problems must share the left endpoint")
    agree = same_expression(c1, c2, (c1.a, cpt)).same
    shared = _identical_on(c1, c2, c1.a, cpt)
    requested = np.sort(np.asarray(grid, dtype=float))
    moduli = np.array([r for r in requested if _growth_ok(c1, r * np.exp(1j * ray)) and _growth_ok(c2, r * np.exp(1j * ray))])
    zs = moduli * np.exp(1j * ray)
    diff = np.empty(0)
    comp = np.empty(0)
    hl = np.empty(0)
    while zs.size:
        try:
            (th, th1), (ph, ph1) = _left_system(c1, zs, cpt, phi_a, rtol, atol)
            rho1, chi1 = _riccati_at(c1, zs, cpt, phi_b, rtol, atol)
            if shared:
                rho2, _ = _riccati_at(c2, zs, cpt, phi_b, rtol, atol)
                diff = np.abs((rho1 - rho2) / ((ph1 - rho1 * ph) * (ph1 - rho2 * ph)))
                method = "riccati"
            else:
                diff = np.abs(m_values(c1, zs, phi_a, phi_b, rtol, atol) - m_values(c2, zs, phi_a, phi_b, rtol, atol))
                method = "direct"
            comp = 1.0 / np.abs(np.sqrt(-zs) * ph * ph)
            hl = np.abs(chi1 / ph)
            if not (np.all(np.isfinite(diff)) and np.all(np.isfinite(comp))):
                raise FloatingPointError("non-finite values")
            break
        except (_dop853.IntegrationError, FloatingPointError, OverflowError):
            zs, moduli = zs[:-1], moduli[:-1]
    else:
        method = "riccati" if shared else "direct"
    return DecayReport(float(ray), moduli, diff, comp, bool(agree), method, requested, hl)
