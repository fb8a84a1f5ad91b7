"""Fundamental systems, eigenvalues, Weyl functions and spectral measures.

Angles ``phi`` parameterise separated boundary conditions
``f cos(phi) - f^[1] sin(phi) = 0`` with ``phi`` in ``[0, pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize

from .coefficients import CoefficientSet, EnergyPoint
from .quasi_ode import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    QuasiState,
    SolutionTrace,
    gauss_quadrature,
    gauss_quadrature_columns,
    integrate_columns,
    merged_mesh,
)

__all__ = [
    "BoundaryCondition",
    "FundamentalSystem",
    "WeylSolution",
    "Spectrum",
    "SpectralMeasure",
    "RescaleSpec",
    "PoleError",
    "as_angle",
    "fundamental_system",
    "characteristic",
    "prufer_angle",
    "eigenvalue_count",
    "eigenvalues",
    "m_function",
    "m_values",
    "spectral_measure",
    "residue",
    "stieltjes_mass",
    "herglotz_value",
    "transform_hat",
    "rescale_system",
    "rescale_m",
    "rescale_measure",
    "norm_squared",
]

_NAMED_ANGLES = {"dirichlet": 0.0, "neumann": math.pi / 2}


class PoleError(ArithmeticError):
    """The requested energy is (numerically) an eigenvalue, so m has a pole there."""

    def __init__(self, z: complex, denominator: float):
        self.z = z
        self.denominator = denominator
        super().__init__(f"m has a pole at z = {z}: |denominator| = {denominator:.3g}")


def as_angle(value) -> float:
    """Accept a number in ``[0, pi)``, a :class:`BoundaryCondition`, or a name."""
    if isinstance(value, BoundaryCondition):
        return value.angle
    if isinstance(value, str):
        try:
            return _NAMED_ANGLES[value.lower()]
        except KeyError:
            raise ValueError(f"unknown boundary condition {value!r}") from None
    angle = float(value)
    if not 0.0 <= angle < math.pi:
        raise ValueError(f"boundary angle {angle} outside [0, pi)")
    return angle


@dataclass(frozen=True)
class BoundaryCondition:
    angle: float

    def __post_init__(self):
        if not 0.0 <= self.angle < math.pi:
            raise ValueError(f"boundary angle {self.angle} outside [0, pi)")

    @classmethod
    def dirichlet(cls) -> "BoundaryCondition":
        return cls(0.0)

    @classmethod
    def neumann(cls) -> "BoundaryCondition":
        return cls(math.pi / 2)

    def residual(self, state: QuasiState) -> complex:
        return state.f * math.cos(self.angle) - state.f_quasi * math.sin(self.angle)

    def data(self) -> np.ndarray:
        """Quasi-state ``(sin, cos)`` satisfying the condition."""
        return np.array([math.sin(self.angle), math.cos(self.angle)], dtype=complex)


@dataclass
class FundamentalSystem:
    """``theta_z`` and ``phi_z`` with ``W(theta_z, phi_z) = 1``."""

    energy: EnergyPoint
    theta: SolutionTrace
    phi: SolutionTrace
    base_angle: BoundaryCondition
    coefficients: CoefficientSet

    def wronskian(self, x) -> np.ndarray:
        t = self.theta(np.atleast_1d(x))
        p = self.phi(np.atleast_1d(x))
        return t[0] * p[1] - t[1] * p[0]


def fundamental_system(
    c: CoefficientSet,
    z,
    phi_a=0.0,
    x_end: Optional[float] = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> FundamentalSystem:
    """Integrate ``theta_z`` and ``phi_z`` jointly from ``a`` to ``x_end`` (default ``b``)."""
    angle = as_angle(phi_a)
    energy = z if isinstance(z, EnergyPoint) else EnergyPoint(complex(z))
    ca, sa = math.cos(angle), math.sin(angle)
    y0 = np.array([[ca, sa], [-sa, ca]], dtype=complex)
    run = integrate_columns(c, energy, c.a, y0, c.b if x_end is None else x_end, rtol=rtol, atol=atol)
    return FundamentalSystem(energy, SolutionTrace(run, 0), SolutionTrace(run, 1), BoundaryCondition(angle), c)


def _phi_run(c, z, angle, rtol, atol, x_end=None):
    y0 = np.array([math.sin(angle), math.cos(angle)], dtype=complex)
    return integrate_columns(c, z, c.a, y0, c.b if x_end is None else x_end, rtol=rtol, atol=atol)


def characteristic(c: CoefficientSet, z, phi_a=0.0, phi_b=0.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL):
    """``phi_z(b) cos(phi_b) - phi_z^[1](b) sin(phi_b)``; vanishes exactly at eigenvalues.

    ``z`` may be an array, in which case all energies share one integration.
    """
    angle_a, angle_b = as_angle(phi_a), as_angle(phi_b)
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    y0 = np.empty((2, zs.size), dtype=complex)
    y0[0] = math.sin(angle_a)
    y0[1] = math.cos(angle_a)
    run = integrate_columns(c, zs, c.a, y0, c.b, rtol=rtol, atol=atol)
    f, g = run.ys[-1]
    out = f * math.cos(angle_b) - g * math.sin(angle_b)
    return complex(out[0]) if np.ndim(z) == 0 else out


# -- Pruefer angle on the quasi pair ---------------------------------------------------


def _count_interior_zeros(f: np.ndarray) -> np.ndarray:
    """Sign changes of each column of ``f`` (rows are mesh points), excluding zeros at the ends."""
    sgn = np.sign(f)
    prev = sgn[:-1]
    nxt = sgn[1:]
    crossing = (prev != 0) & (nxt != prev)
    crossing[-1] &= sgn[-1] != 0
    return np.count_nonzero(crossing, axis=0)


def prufer_angles(c: CoefficientSet, lams, phi_a=0.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> np.ndarray:
    """Continuous angle of ``(phi, phi^[1])`` at ``b`` for each real ``lam``, starting from ``phi_a``.

    ``atan2(f, f^[1])`` only passes multiples of pi upwards (where ``f = 0``
    its derivative is ``1/p > 0``), so the angle at ``b`` is pi times the
    number of interior zeros plus the reduced angle in ``(0, pi]``.  The
    integrator's step cap keeps at most one zero per step.  Requires ``p > 0``.
    All energies share one integration.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    angle = as_angle(phi_a)
    y0 = np.empty((2, lams.size), dtype=complex)
    y0[0] = math.sin(angle)
    y0[1] = math.cos(angle)
    run = integrate_columns(c, lams.astype(complex), c.a, y0, c.b, rtol=rtol, atol=atol)
    f = run.ys[:, 0, :].real
    g = run.ys[:, 1, :].real
    k = _count_interior_zeros(f)
    ang = np.mod(np.arctan2(f[-1], g[-1]), math.pi)
    ang[ang == 0.0] = math.pi
    return k * math.pi + ang


def prufer_angle(c: CoefficientSet, lam: float, phi_a=0.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> float:
    return float(prufer_angles(c, [lam], phi_a, rtol, atol)[0])


def _target_angle(phi_b: float) -> float:
    return math.pi if phi_b == 0.0 else phi_b


def eigenvalue_count(c: CoefficientSet, lam: float, phi_a=0.0, phi_b=0.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> int:
    """Number of eigenvalues strictly below ``lam`` (requires ``p > 0``)."""
    theta = prufer_angle(c, lam, phi_a, rtol, atol)
    beta = _target_angle(as_angle(phi_b))
    return max(0, math.ceil((theta - beta) / math.pi - 1e-12))


def _p_positive(c: CoefficientSet) -> bool:
    for i in range(c.p.n_pieces):
        _, v = c.p.piece_samples(i)
        if np.any(v <= 0):
            return False
    return True


@dataclass
class Spectrum:
    """Eigenvalues in a window with norming constants ``||phi_lambda||_r^2``."""

    eigenvalues: np.ndarray
    norming: np.ndarray
    window: tuple
    angles: tuple
    certified: bool = True
    first_index: int = 0
    clusters: list = field(default_factory=list)
    traces: list = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def indices(self) -> np.ndarray:
        return self.first_index + np.arange(len(self.eigenvalues))

    def truncate(self, lo: float, hi: float) -> "Spectrum":
        m = (self.eigenvalues >= lo) & (self.eigenvalues < hi)
        idx = np.nonzero(m)[0]
        first = self.first_index + (int(idx[0]) if idx.size else 0)
        return Spectrum(
            self.eigenvalues[m],
            self.norming[m],
            (lo, hi),
            self.angles,
            self.certified,
            first,
            [cl for cl in self.clusters if lo <= cl[1] < hi],
            [t for t, keep in zip(self.traces, m) if keep] if self.traces else [],
        )


def norm_squared(c: CoefficientSet, trace: SolutionTrace) -> float:
    """``int |f|^2 r dx`` over the trace's interval."""
    lo, hi = trace.interval

    def integrand(xs):
        f = trace(xs)[0]
        return (f.real**2 + f.imag**2) * c.r(xs)

    return gauss_quadrature(integrand, merged_mesh([trace], lo, hi, c)).real


def eigenvalues(
    c: CoefficientSet,
    phi_a=0.0,
    phi_b=0.0,
    window: Sequence[float] = (0.0, 100.0),
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    tol: float = 1e-8,
    rel_tol: float = 1e-10,
    scan_points: int = 400,
) -> Spectrum:
    """All eigenvalues in the half-open window ``[lo, hi)``.

    For ``p > 0`` each eigenvalue is the unique root of
    ``prufer_angle - (beta + n pi)`` and is bracketed by the count
    (certified).  Otherwise the characteristic is scanned for sign changes
    on ``scan_points`` points and the result is marked uncertified.
    Eigenvalues closer than the tolerance are kept and reported in ``clusters``.
    """
    lo, hi = map(float, window)
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError("window must be finite with lo < hi")
    angle_a, angle_b = as_angle(phi_a), as_angle(phi_b)
    xtol = 1e-3 * tol
    if _p_positive(c):
        roots, first = _pruefer_roots(c, angle_a, angle_b, lo, hi, rtol, atol, xtol)
        certified = True
    else:
        roots, first = _scan_roots(c, angle_a, angle_b, lo, hi, rtol, atol, xtol, scan_points)
        certified = False
    lam = np.asarray(roots, dtype=float)
    clusters = []
    for i in range(len(lam) - 1):
        if lam[i + 1] - lam[i] <= tol + rel_tol * abs(lam[i]):
            clusters.append((first + i, float(lam[i]), float(lam[i + 1])))
    norming, traces = _eigenfunctions(c, lam, angle_a, rtol, atol)
    return Spectrum(lam, norming, (lo, hi), (angle_a, angle_b), certified, first, clusters, traces)


def _eigenfunctions(c, lam, angle_a, rtol, atol):
    if lam.size == 0:
        return np.empty(0), []
    y0 = np.empty((2, lam.size), dtype=complex)
    y0[0] = math.sin(angle_a)
    y0[1] = math.cos(angle_a)
    run = integrate_columns(c, lam.astype(complex), c.a, y0, c.b, rtol=rtol, atol=atol)
    traces = [SolutionTrace(run, j) for j in range(lam.size)]
    mesh = merged_mesh(traces[:1], c.a, c.b, c)

    def integrand(xs):
        f = run.evaluate(xs)[:, 0, :].real
        return f * f * c.r(xs)[:, None]

    norming = gauss_quadrature_columns(integrand, mesh).real
    return norming, traces


def _pruefer_roots(c, angle_a, angle_b, lo, hi, rtol, atol, xtol, max_rounds=60):
    """Solve ``theta(lam) = beta + n pi`` for every index with a root in ``[lo, hi)``.

    All indices are refined together: each round evaluates, per unresolved
    index, the bracket midpoint, the secant estimate and points close to it
    on both sides, in a single batched integration.
    """
    beta = _target_angle(angle_b)
    lam_seen = np.array([lo, hi])
    theta_seen = prufer_angles(c, lam_seen, angle_a, rtol, atol)
    counts = np.maximum(0, np.ceil((theta_seen - beta) / math.pi - 1e-12)).astype(int)
    n_lo, n_hi = int(counts[0]), int(counts[1])
    if n_hi <= n_lo:
        return [], n_lo
    grid = np.linspace(lo, hi, 2 * (n_hi - n_lo) + 3)[1:-1]
    lam_seen = np.concatenate([lam_seen, grid])
    theta_seen = np.concatenate([theta_seen, prufer_angles(c, grid, angle_a, rtol, atol)])
    slack = 1e-12 * math.pi
    targets = beta + math.pi * np.arange(n_lo, n_hi)
    roots = np.full(targets.size, np.nan)
    for _ in range(max_rounds):
        trial = []
        for i, target in enumerate(targets):
            if not np.isnan(roots[i]):
                continue
            below = theta_seen <= target + slack
            j_left = np.flatnonzero(below)[np.argmax(lam_seen[below])]
            j_right = np.flatnonzero(~below)[np.argmin(lam_seen[~below])]
            left, right = lam_seen[j_left], lam_seen[j_right]
            g_left, g_right = theta_seen[j_left] - target, theta_seen[j_right] - target
            width = right - left
            if g_left >= 0:
                roots[i] = left
                continue
            secant = left - g_left * width / (g_right - g_left)
            if width <= xtol + 4 * np.finfo(float).eps * abs(secant):
                roots[i] = secant
                continue
            pts = [0.5 * (left + right), secant]
            for frac in (1e-2, 1e-5):
                d = max(frac * width, 0.25 * xtol)
                pts += [secant - d, secant + d]
            trial += [x for x in pts if left < x < right]
        if not trial:
            break
        trial = np.unique(trial)
        lam_seen = np.concatenate([lam_seen, trial])
        theta_seen = np.concatenate([theta_seen, prufer_angles(c, trial, angle_a, rtol, atol)])
    return [float(r) for r in roots if not np.isnan(r)], n_lo


def _scan_roots(c, angle_a, angle_b, lo, hi, rtol, atol, xtol, n):
    grid = np.linspace(lo, hi, n + 1)
    vals = characteristic(c, grid, angle_a, angle_b, rtol, atol).real

    def w(lam):
        return characteristic(c, lam, angle_a, angle_b, rtol, atol).real

    roots = []
    for x0, x1, v0, v1 in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if v0 == 0.0:
            roots.append(x0)
        elif v0 * v1 < 0:
            roots.append(optimize.brentq(w, x0, x1, xtol=xtol))
    return roots, 0


# -- Weyl function ------------------------------------------------------------------------


@dataclass
class WeylSolution:
    """``psi_z = theta_z + m phi_z``, normalised, satisfying the condition at ``b``."""

    energy: EnergyPoint
    psi: SolutionTrace
    m_value: complex
    angles: tuple


def _weyl_run(c, zs, angle_a, angle_b, rtol, atol):
    y0 = np.empty((2, zs.size), dtype=complex)
    y0[0] = math.sin(angle_b)
    y0[1] = math.cos(angle_b)
    run = integrate_columns(c, zs, c.b, y0, c.a, rtol=rtol, atol=atol)
    f, g = run.ys[-1]
    ca, sa = math.cos(angle_a), math.sin(angle_a)
    denom = f * ca - g * sa
    numer = f * sa + g * ca
    scale = np.maximum(np.abs(f), np.abs(g))
    return run, numer, denom, scale


def _pole_tol(pole_tol, rtol):
    # the denominator at an exact eigenvalue is only as small as the integration error
    return max(1e-13, 10.0 * rtol) if pole_tol is None else pole_tol


def m_values(
    c: CoefficientSet,
    zs,
    phi_a=0.0,
    phi_b=0.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    pole_tol: Optional[float] = None,
) -> np.ndarray:
    """Weyl function at many energies from one batched backward integration."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    pole_tol = _pole_tol(pole_tol, rtol)
    _, numer, denom, scale = _weyl_run(c, zs, as_angle(phi_a), as_angle(phi_b), rtol, atol)
    bad = np.abs(denom) <= pole_tol * scale
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise PoleError(complex(zs[j]), float(abs(denom[j]) / scale[j]))
    return numer / denom


def m_function(
    c: CoefficientSet,
    z,
    phi_a=0.0,
    phi_b=0.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    pole_tol: Optional[float] = None,
) -> WeylSolution:
    """Weyl function from a backward integration of the solution obeying the condition at ``b``.

    Real ``z`` is accepted (it must not be an eigenvalue); a denominator
    below ``pole_tol`` relative to the boundary data raises
    :class:`PoleError` (default ``max(1e-13, 10 rtol)``).
    """
    energy = z if isinstance(z, EnergyPoint) else EnergyPoint(complex(z))
    angle_a, angle_b = as_angle(phi_a), as_angle(phi_b)
    zs = np.array([energy.z], dtype=complex)
    pole_tol = _pole_tol(pole_tol, rtol)
    run, numer, denom, scale = _weyl_run(c, zs, angle_a, angle_b, rtol, atol)
    if abs(denom[0]) <= pole_tol * scale[0]:
        raise PoleError(complex(energy.z), float(abs(denom[0]) / scale[0]))
    psi = SolutionTrace(run, np.array([1.0 / denom[0]], dtype=complex))
    return WeylSolution(energy, psi, complex(numer[0] / denom[0]), (angle_a, angle_b))


# -- spectral measure ------------------------------------------------------------------


@dataclass
class SpectralMeasure:
    """Discrete measure ``sum mu_n delta_{lambda_n}`` restricted to a window."""

    atoms: np.ndarray
    weights: np.ndarray
    window: tuple
    spectrum: Optional[Spectrum] = field(default=None, repr=False)

    def __len__(self):
        return len(self.atoms)

    def truncate(self, lo: float, hi: float) -> "SpectralMeasure":
        m = (self.atoms >= lo) & (self.atoms < hi)
        spec = self.spectrum.truncate(lo, hi) if self.spectrum is not None else None
        return SpectralMeasure(self.atoms[m], self.weights[m], (lo, hi), spec)

    def mass(self, lo: float, hi: float) -> float:
        m = (self.atoms >= lo) & (self.atoms < hi)
        return float(np.sum(self.weights[m]))


def spectral_measure(c: CoefficientSet, phi_a=0.0, phi_b=0.0, window=(0.0, 100.0), **kw) -> SpectralMeasure:
    spec = eigenvalues(c, phi_a, phi_b, window, **kw)
    return SpectralMeasure(spec.eigenvalues.copy(), 1.0 / spec.norming, spec.window, spec)


def residue(
    c: CoefficientSet,
    lam: float,
    phi_a=0.0,
    phi_b=0.0,
    eps: Sequence[float] = (4e-3, 2e-3, 1e-3, 5e-4),
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> float:
    """``lim (-i eps) m(lam + i eps)`` by Richardson extrapolation over ``eps`` halvings."""
    eps = np.asarray(eps, dtype=float)
    vals = -1j * eps * m_values(c, lam + 1j * eps, phi_a, phi_b, rtol, atol)
    # Neville extrapolation of the polynomial in eps to eps = 0
    table = vals.copy()
    for k in range(1, len(eps)):
        e_lo, e_hi = eps[k:], eps[:-k]
        table = table[1:] + (table[1:] - table[:-1]) * e_lo / (e_hi - e_lo)
    return float(table[0].real)


def stieltjes_mass(
    c: CoefficientSet,
    center: float,
    delta: float,
    phi_a=0.0,
    phi_b=0.0,
    eps: Optional[Sequence[float]] = None,
    nodes: int = 48,
) -> float:
    """``mu((center - delta, center + delta))`` from ``(1/pi) int Im m(lam + i eps) dlam``, ``eps -> 0``.

    The substitution ``lam = center + eps tan(u)`` flattens the Poisson peak;
    the integral is computed by Gauss-Legendre in ``u`` at two values of
    ``eps`` and extrapolated linearly to ``eps = 0``.
    """
    if eps is None:
        eps = (delta / 20.0, delta / 40.0)
    t, w = np.polynomial.legendre.leggauss(nodes)
    results = []
    for e in eps:
        umax = math.atan(delta / e)
        u = umax * t
        lam = center + e * np.tan(u)
        im = m_values(c, lam + 1j * e, phi_a, phi_b).imag
        integrand = im * e / np.cos(u) ** 2
        results.append(umax * float(np.dot(w, integrand)) / math.pi)
    (e1, e2), (v1, v2) = eps[:2], results[:2]
    return float(v2 + (v2 - v1) * e2 / (e1 - e2))


def herglotz_value(measure: SpectralMeasure, re_m_i: float, z) -> complex:
    """``Re m(i) + sum mu_n (1/(lambda_n - z) - lambda_n/(1 + lambda_n^2))`` for the truncated measure."""
    lam = measure.atoms
    mu = measure.weights
    z = complex(z)
    return complex(re_m_i + np.sum(mu * (1.0 / (lam - z) - lam / (1.0 + lam**2))))


def transform_hat(
    c: CoefficientSet,
    f: Callable,
    spectrum,
    cells: int = 256,
) -> np.ndarray:
    """``int phi_lambda f r dx`` at every eigenvalue of ``spectrum`` (a Spectrum or SpectralMeasure)."""
    spec = spectrum.spectrum if isinstance(spectrum, SpectralMeasure) else spectrum
    if spec is None or not spec.traces:
        raise ValueError("spectrum carries no eigenfunction traces")
    grid = np.linspace(c.a, c.b, cells + 1)
    out = []
    for trace in spec.traces:

        def integrand(xs, trace=trace):
            return trace(xs)[0] * np.asarray(f(xs)) * c.r(xs)

        mesh = np.unique(np.concatenate([merged_mesh([trace], c.a, c.b, c), grid]))
        out.append(gauss_quadrature(integrand, mesh))
    return np.asarray(out)


# -- rescaling ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RescaleSpec:
    """Constants ``f0`` and ``g0``; ``negative`` adds ``i pi`` to ``g0`` (flips the sign of ``e^g0``)."""

    f0: float = 0.0
    g0: float = 0.0
    negative: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.f0) and np.isfinite(self.g0)):
            raise ValueError("rescaling constants must be finite")

    @property
    def exp_g0(self) -> float:
        v = math.exp(self.g0)
        return -v if self.negative else v


def rescale_system(fs: FundamentalSystem, spec: RescaleSpec) -> FundamentalSystem:
    """``theta~ = e^{-g0} theta - f0 phi`` and ``phi~ = e^{g0} phi``."""
    e = spec.exp_g0
    theta = fs.theta * (1.0 / e) - fs.phi * spec.f0
    phi = fs.phi * e
    return FundamentalSystem(fs.energy, theta, phi, fs.base_angle, fs.coefficients)


def rescale_m(m: complex, spec: RescaleSpec) -> complex:
    """``m~ = e^{-2 g0} m + e^{-g0} f0``."""
    e = spec.exp_g0
    return complex(m / (e * e) + spec.f0 / e)


def rescale_measure(measure: SpectralMeasure, spec: RescaleSpec) -> SpectralMeasure:
    e = spec.exp_g0
    return SpectralMeasure(measure.atoms.copy(), measure.weights / (e * e), measure.window, measure.spectrum)
