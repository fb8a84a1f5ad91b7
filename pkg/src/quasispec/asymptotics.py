"""High-energy behaviour of ``phi_z``, the Weyl function and the diagonal Green's function.

Large ``|z|`` is handled through the scaled pair
``Phi_z = (k phi_z e^{-k (x - a)}, phi_z^[1] e^{-k (x - a)})``, ``k = sqrt(-z)``,
which for ``p = r = 1`` solves

    Phi' = [[-s - k, k], [k + q/k, s - k]] Phi,   Phi(a) = (0, 1),

and stays bounded where ``phi_z`` itself would overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coefficients import CoefficientSet
from .quasi_ode import DEFAULT_ATOL, DEFAULT_RTOL, _piece_values, integrate_columns
from .spectral import PoleError, as_angle, m_function, m_values

__all__ = [
    "DEFAULT_GRID",
    "DEFAULT_RAYS",
    "AsymptoticsReport",
    "ray_points",
    "scaled_phi",
    "phi_asymptotics",
    "m_asymptotics",
    "green_diag",
    "green_asymptotics",
    "b6_fixed_point_check",
]

DEFAULT_GRID = (1e2, 10**2.5, 1e3, 10**3.5, 1e4)
DEFAULT_RAYS = (math.pi / 2, 2 * math.pi / 3, 3 * math.pi / 4)
# largest exponent of exp(Re sqrt(-z) * length) the unscaled system may meet
_GROWTH_CAP = 650.0


@dataclass
class AsymptoticsReport:
    """Measured values against the predicted leading term along one ray."""

    quantity: str
    ray: float
    moduli: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    deviations: np.ndarray
    skipped: tuple = ()

    def __post_init__(self):
        if np.any(np.diff(self.moduli) <= 0):
            raise ValueError("grid must be increasing")

    def monotone(self, slack: float = 1.1, floor: float = 1e-13) -> bool:
        """Deviations nonincreasing after the first point, up to ``slack``.

        Values below ``floor`` (roundoff level) count as equal.
        """
        d = np.maximum(self.deviations, floor)
        return bool(np.all(d[1:] <= slack * d[:-1]))

    @property
    def decay_factor(self) -> float:
        """Ratio of the first to the last deviation."""
        if self.deviations.size < 2:
            return math.nan
        last = self.deviations[-1]
        return math.inf if last == 0 else float(self.deviations[0] / last)

    def per_decade(self) -> float:
        """Average decrease factor of the deviation per decade of ``|z|``."""
        span = math.log10(self.moduli[-1] / self.moduli[0])
        return self.decay_factor ** (1.0 / span) if span > 0 else math.nan

    def rows(self):
        for r, m, p, d in zip(self.moduli, self.measured, self.predicted, self.deviations):
            yield float(r), complex(m), complex(p), float(d)


def ray_points(ray: float, grid: Sequence[float]) -> np.ndarray:
    moduli = np.sort(np.asarray(grid, dtype=float))
    if np.any(moduli <= 0):
        raise ValueError("grid entries must be positive")
    return moduli * np.exp(1j * ray)


def _check_nonreal(ray: float):
    if math.sin(ray) == 0:
        raise ValueError("ray must be nonreal")


def _require_schroedinger(c: CoefficientSet):
    if not c.is_schroedinger():
        raise ValueError("needs p = r = 1")


def scaled_phi(c: CoefficientSet, zs, x: float, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL) -> np.ndarray:
    """``Phi_z(x)`` for the Dirichlet solution at ``a``; shape ``(2, len(zs))``."""
    _require_schroedinger(c)
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    if not c.a < x <= c.b:
        raise ValueError(f"x = {x} not in ({c.a}, {c.b}]")
    k = np.sqrt(-zs)

    def override(lo, hi):
        mid = 0.5 * (lo + hi)
        q_fn, _ = _piece_values(c.q, mid)
        s_fn, _ = _piece_values(c.s, mid)

        def coef_fn(xs):
            sv = s_fn(xs)[:, None]
            qv = q_fn(xs)[:, None]
            M = np.empty((len(xs), 4, k.size), dtype=complex)
            M[:, 0] = -sv - k
            M[:, 1] = k
            M[:, 2] = k + qv / k
            M[:, 3] = sv - k
            return M, None

        return coef_fn

    y0 = np.zeros((2, zs.size), dtype=complex)
    y0[1] = 1.0
    run = integrate_columns(c, zs, c.a, y0, x, rtol=rtol, atol=atol, coefficient_override=override)
    return run.ys[-1]


def _report(quantity, ray, moduli, measured, predicted, skipped=()):
    measured = np.asarray(measured, dtype=complex)
    predicted = np.broadcast_to(np.asarray(predicted, dtype=complex), measured.shape).copy()
    dev = np.abs(measured - predicted) / np.maximum(np.abs(predicted), 1e-300)
    return AsymptoticsReport(quantity, float(ray), np.asarray(moduli, dtype=float), measured, predicted, dev, tuple(skipped))


def phi_asymptotics(
    c: CoefficientSet,
    x: float,
    ray: float = 3 * math.pi / 4,
    grid: Sequence[float] = DEFAULT_GRID,
    x0: Optional[float] = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> AsymptoticsReport:
    """``2 k phi_z(x) e^{-k (x - a)}`` against 1.

    With ``x0`` given, the two-point form
    ``phi_z(x)/phi_z(x0) e^{-k (x - x0)}`` is measured instead.
    """
    _check_nonreal(ray)
    zs = ray_points(ray, grid)
    if x0 is None:
        measured = 2.0 * scaled_phi(c, zs, x, rtol, atol)[0]
        return _report("phi", ray, np.abs(zs), measured, 1.0)
    u = scaled_phi(c, zs, x, rtol, atol)[0]
    u0 = scaled_phi(c, zs, x0, rtol, atol)[0]
    return _report("phi_two_point", ray, np.abs(zs), u / u0, 1.0)


def _resolvable(c: CoefficientSet, z: complex) -> bool:
    return np.sqrt(-complex(z)).real * c.length <= _GROWTH_CAP


def m_asymptotics(
    c: CoefficientSet,
    phi_a=0.0,
    ray: float = 3 * math.pi / 4,
    grid: Sequence[float] = DEFAULT_GRID,
    phi_b=0.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> AsymptoticsReport:
    """Leading behaviour of the Weyl function along a ray.

    Dirichlet at ``a``: ``m(z) / (-k)`` against 1.  Otherwise
    ``(m(z) + cot(phi_a)) sin(phi_a)^2 k`` against 1.  Points at a pole or
    beyond the double range are skipped and listed in ``skipped``.
    """
    _check_nonreal(ray)
    alpha = as_angle(phi_a)
    zs = ray_points(ray, grid)
    keep, skipped = [], []
    for z in zs:
        (keep if _resolvable(c, z) else skipped).append(z)
    measured, used = [], []
    for z in keep:
        try:
            m = complex(m_values(c, [z], alpha, phi_b, rtol, atol)[0])
        except PoleError:
            skipped.append(z)
            continue
        k = np.sqrt(-z)
        if alpha == 0.0:
            measured.append(m / (-k))
        else:
            measured.append((m + 1.0 / math.tan(alpha)) * math.sin(alpha) ** 2 * k)
        used.append(abs(z))
    tag = "m_dirichlet" if alpha == 0.0 else "m"
    return _report(tag, ray, used, measured, 1.0, [abs(z) for z in skipped])


def green_diag(
    c: CoefficientSet,
    x: float,
    z,
    phi_a=0.0,
    phi_b=0.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> complex:
    """``G_z(x, x) = phi_z(x) psi_z(x)`` with ``psi_z = theta_z + m(z) phi_z``."""
    z = complex(z)
    if z.imag == 0:
        raise ValueError("z must be nonreal")
    if not c.a < x < c.b:
        raise ValueError(f"x = {x} not inside ({c.a}, {c.b})")
    alpha = as_angle(phi_a)
    y0 = np.array([[math.sin(alpha)], [math.cos(alpha)]], dtype=complex)
    phi_x = integrate_columns(c, z, c.a, y0, x, rtol=rtol, atol=atol).ys[-1][0, 0]
    psi = m_function(c, z, alpha, phi_b, rtol, atol).psi
    return complex(phi_x * psi(x)[0])


def green_asymptotics(
    c: CoefficientSet,
    x: float,
    ray: float = math.pi / 2,
    grid: Sequence[float] = DEFAULT_GRID,
    phi_b=0.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> AsymptoticsReport:
    """``2 k G_z(x, x)`` against 1 (Dirichlet at ``a``); ``|G|/|z|`` follows from ``measured``."""
    _check_nonreal(ray)
    zs = [z for z in ray_points(ray, grid) if _resolvable(c, z)]
    skipped = [abs(z) for z in ray_points(ray, grid) if not _resolvable(c, z)]
    measured = [2.0 * np.sqrt(-z) * green_diag(c, x, z, 0.0, phi_b, rtol, atol) for z in zs]
    return _report("green_diag", ray, [abs(z) for z in zs], measured, 1.0, skipped)


def b6_fixed_point_check(
    c: CoefficientSet,
    x: float,
    ray: float = 2 * math.pi / 3,
    grid: Sequence[float] = DEFAULT_GRID,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> tuple[AsymptoticsReport, AsymptoticsReport]:
    """Both components of ``Phi_z(x)`` against ``1/2``."""
    _check_nonreal(ray)
    zs = ray_points(ray, grid)
    vals = scaled_phi(c, zs, x, rtol, atol)
    return (
        _report("Phi_1", ray, np.abs(zs), vals[0], 0.5),
        _report("Phi_2", ray, np.abs(zs), vals[1], 0.5),
    )
