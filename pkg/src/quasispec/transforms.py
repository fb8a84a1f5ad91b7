"""Liouville-type transformations between coefficient sets.

A map ``(eta, kappa, nu)`` from ``(a1, b1)`` onto ``(a2, b2)`` relates
solutions by

    (f1, f1^[1])(x) = [[kappa, 0], [nu, 1/kappa]] (f2, f2^[1])(eta(x)),

which forces

    eta' r2(eta) = kappa^2 r1
    p2(eta)      = eta' kappa^2 p1
    eta' s2(eta) = s1 + (kappa' - nu/p1)/kappa
    eta' q2(eta) = kappa^2 q1 + 2 kappa nu s1 - nu^2/p1 + kappa' nu - kappa nu'

and makes ``f2 -> kappa f2(eta)`` unitary between the weighted spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .coefficients import (
    CoefficientSet,
    PiecewiseCoefficient,
    _fit_piece,
    make_impedance,
    make_schroedinger,
    validate,
    InvalidCoefficientsError,
)
from .spectral import as_angle

__all__ = [
    "MapError",
    "LiouvilleMap",
    "GaugeSpec",
    "ImpedanceSpec",
    "ExpressionReport",
    "liouville_apply",
    "gauge_transform",
    "impedance_transform",
    "pullback",
    "transport_angle",
    "compose",
    "same_expression",
    "impedance_factor",
    "impedance_map",
]

RESAMPLE_CAP = 1e-9
RESAMPLE_MAX_DEGREE = 64
_SAMPLES_PER_PIECE = 64


class MapError(ValueError):
    """The transformation data violate monotonicity, non-vanishing or continuity."""


def _as_piecewise(value, interval) -> PiecewiseCoefficient:
    if isinstance(value, PiecewiseCoefficient):
        return value
    if isinstance(value, (int, float)):
        return PiecewiseCoefficient.constant(float(value), interval)
    if callable(value):
        bp = list(map(float, interval))
        support = getattr(value, "support", None)
        if support is not None:
            bp = sorted(set(bp) | {v for v in map(float, support) if bp[0] < v < bp[-1]})
        return PiecewiseCoefficient.fit(value, bp, accept=1e-9)
    raise TypeError(f"cannot interpret {value!r} as piecewise data")


def _piece_grid(coef: PiecewiseCoefficient, n: int = _SAMPLES_PER_PIECE) -> list:
    return [coef.piece_samples(i, n) for i in range(coef.n_pieces)]


def _max_jump(coef: PiecewiseCoefficient) -> float:
    _, j = coef.jumps()
    return float(np.max(np.abs(j))) if j.size else 0.0


@dataclass(frozen=True, eq=False)
class LiouvilleMap:
    """``eta``, ``kappa`` and ``nu`` as continuous piecewise polynomials on ``(a1, b1)``."""

    eta: PiecewiseCoefficient
    kappa: PiecewiseCoefficient
    nu: PiecewiseCoefficient

    def __post_init__(self):
        a, b = self.eta.interval
        for name in ("kappa", "nu"):
            lo, hi = getattr(self, name).interval
            if not (np.isclose(lo, a) and np.isclose(hi, b)):
                raise MapError(f"{name} is not defined on the domain of eta")
        for name in ("eta", "kappa", "nu"):
            coef = getattr(self, name)
            scale = 1.0 + max(abs(v) for v in _sup(coef))
            if _max_jump(coef) > 1e-12 * scale:
                raise MapError(f"{name} must be continuous")
        for x, d in _piece_grid(self.eta.deriv()):
            if np.any(d <= 0):
                raise MapError(f"eta' not positive near x = {x[np.argmin(d)]:.6g}")
        for i, (x, k) in enumerate(_piece_grid(self.kappa)):
            if np.any(k == 0) or k.min() < 0 < k.max() or _has_root(self.kappa.pieces[i]):
                raise MapError("kappa vanishes inside the interval")

    @classmethod
    def identity(cls, interval) -> "LiouvilleMap":
        a, b = map(float, interval)
        return cls(
            PiecewiseCoefficient.from_power([a, b], [[0.0, 1.0]]),
            PiecewiseCoefficient.constant(1.0, (a, b)),
            PiecewiseCoefficient.constant(0.0, (a, b)),
        )

    @classmethod
    def build(cls, interval, eta=None, kappa=1.0, nu=0.0) -> "LiouvilleMap":
        """Convenience constructor; each part may be a number, callable or piecewise data."""
        interval = tuple(map(float, interval))
        if eta is None:
            eta = PiecewiseCoefficient.from_power(interval, [[0.0, 1.0]])
        return cls(_as_piecewise(eta, interval), _as_piecewise(kappa, interval), _as_piecewise(nu, interval))

    @property
    def domain(self) -> tuple[float, float]:
        return self.eta.interval

    @property
    def image(self) -> tuple[float, float]:
        a, b = self.domain
        return float(self.eta(a)), float(self.eta.left_limit(b))

    def inverse_eta(self, y) -> np.ndarray:
        """Solve ``eta(x) = y`` by safeguarded Newton iteration (vectorised)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        a, b = self.domain
        lo = np.full(y.shape, a)
        hi = np.full(y.shape, b)
        y0, y1 = self.image
        x = a + (y - y0) * (b - a) / (y1 - y0)
        deta = self.eta.deriv()
        for _ in range(100):
            r = self.eta(x) - y
            lo = np.where(r < 0, x, lo)
            hi = np.where(r >= 0, x, hi)
            step = r / deta(x)
            x_new = x - step
            outside = (x_new <= lo) | (x_new >= hi)
            x_new = np.where(outside, 0.5 * (lo + hi), x_new)
            done = np.abs(x_new - x) <= 4 * np.finfo(float).eps * (1.0 + np.abs(x))
            x = x_new
            if np.all(done):
                break
        return x


def _sup(coef: PiecewiseCoefficient):
    return [float(np.max(np.abs(v))) for _, v in _piece_grid(coef, 9)]


def _has_root(cheb: np.ndarray) -> bool:
    if len(cheb) <= 1:
        return cheb[0] == 0
    roots = np.polynomial.chebyshev.chebroots(cheb)
    real = roots[np.abs(roots.imag) < 1e-10].real
    return bool(np.any(np.abs(real) < 1.0))


def _local(coef: PiecewiseCoefficient, lo: float, hi: float) -> Callable:
    """Evaluator of the piece of ``coef`` covering ``[lo, hi]`` (continuous up to both ends)."""
    i = int(coef.piece_index(0.5 * (lo + hi)))
    return lambda x: coef._eval_piece(i, x)


def liouville_apply(
    c1: CoefficientSet,
    transform: LiouvilleMap,
    tol: float = 1e-13,
    cap: float = RESAMPLE_CAP,
    max_degree: int = RESAMPLE_MAX_DEGREE,
) -> CoefficientSet:
    """Coefficients ``(p2, q2, r2, s2)`` on ``(eta(a1), eta(b1))``.

    Each output piece lives on the image of one piece of the merged
    breakpoint grid and is resampled by Chebyshev interpolation in the new
    variable; a residual above ``cap`` at ``max_degree`` raises
    :class:`MapError`.
    """
    a, b = c1.interval
    if not (np.isclose(transform.domain[0], a) and np.isclose(transform.domain[1], b)):
        raise MapError("map domain differs from the coefficient interval")
    bp = np.unique(
        np.concatenate(
            [c1.breakpoints(), transform.eta.breakpoints, transform.kappa.breakpoints, transform.nu.breakpoints]
        )
    )
    bp = bp[(bp >= a) & (bp <= b)]
    eta = transform.eta
    image_bp = np.array([float(eta(x)) for x in bp[:-1]] + [float(eta.left_limit(bp[-1]))])
    if np.any(np.diff(image_bp) <= 0):
        raise MapError("eta is not strictly increasing on the breakpoint grid")
    pieces = {"p": [], "q": [], "r": [], "s": []}
    for (x_lo, x_hi), (y_lo, y_hi) in zip(zip(bp[:-1], bp[1:]), zip(image_bp[:-1], image_bp[1:])):
        p1 = _local(c1.p, x_lo, x_hi)
        q1 = _local(c1.q, x_lo, x_hi)
        r1 = _local(c1.r, x_lo, x_hi)
        s1 = _local(c1.s, x_lo, x_hi)
        et = _local(eta, x_lo, x_hi)
        det = _local(eta.deriv(), x_lo, x_hi)
        ka = _local(transform.kappa, x_lo, x_hi)
        dka = _local(transform.kappa.deriv(), x_lo, x_hi)
        nu = _local(transform.nu, x_lo, x_hi)
        dnu = _local(transform.nu.deriv(), x_lo, x_hi)

        def preimage(y, x_lo=x_lo, x_hi=x_hi, et=et, det=det, y_lo=y_lo, y_hi=y_hi):
            return _invert_local(et, det, y, x_lo, x_hi, y_lo, y_hi)

        def new_p(y, preimage=preimage, p1=p1, det=det, ka=ka):
            x = preimage(y)
            return det(x) * ka(x) ** 2 * p1(x)

        def new_r(y, preimage=preimage, r1=r1, det=det, ka=ka):
            x = preimage(y)
            return ka(x) ** 2 * r1(x) / det(x)

        def new_s(y, preimage=preimage, p1=p1, s1=s1, det=det, ka=ka, dka=dka, nu=nu):
            x = preimage(y)
            return (s1(x) + (dka(x) - nu(x) / p1(x)) / ka(x)) / det(x)

        def new_q(y, preimage=preimage, p1=p1, q1=q1, s1=s1, det=det, ka=ka, dka=dka, nu=nu, dnu=dnu):
            x = preimage(y)
            k, n = ka(x), nu(x)
            return (k * k * q1(x) + 2 * k * n * s1(x) - n * n / p1(x) + dka(x) * n - k * dnu(x)) / det(x)

        for key, fn in (("p", new_p), ("q", new_q), ("r", new_r), ("s", new_s)):
            try:
                pieces[key].append(_fit_piece(fn, y_lo, y_hi, tol, max_degree, cap))
            except ValueError as exc:
                raise MapError(f"resampling {key}: {exc}") from None
    out = {k: PiecewiseCoefficient(image_bp, tuple(v)) for k, v in pieces.items()}
    c2 = CoefficientSet((image_bp[0], image_bp[-1]), out["p"], out["q"], out["r"], out["s"], name=c1.name)
    report = validate(c2)
    if not report:
        raise InvalidCoefficientsError(report)
    return c2


def _invert_local(et, det, y, x_lo, x_hi, y_lo, y_hi):
    y = np.asarray(y, dtype=float)
    lo = np.full(y.shape, x_lo)
    hi = np.full(y.shape, x_hi)
    x = x_lo + (y - y_lo) * (x_hi - x_lo) / (y_hi - y_lo)
    for _ in range(100):
        r = et(x) - y
        lo = np.where(r < 0, x, lo)
        hi = np.where(r >= 0, x, hi)
        x_new = x - r / det(x)
        outside = (x_new < lo) | (x_new > hi)
        x_new = np.where(outside, 0.5 * (lo + hi), x_new)
        if np.all(np.abs(x_new - x) <= 4 * np.finfo(float).eps * (1.0 + np.abs(x))):
            return x_new
        x = x_new
    return x


def transport_angle(transform: LiouvilleMap, angle, endpoint: str = "a") -> float:
    """Boundary angle for the transformed problem.

    ``f1 cos(phi1) - f1^[1] sin(phi1) = 0`` becomes ``f2 cos(phi2) - f2^[1] sin(phi2) = 0``
    with ``cos(phi2) ~ kappa cos(phi1) - nu sin(phi1)`` and ``sin(phi2) ~ sin(phi1)/kappa``;
    ``kappa`` and ``nu`` are taken as one-sided limits at the endpoint.
    """
    phi1 = as_angle(angle)
    a, b = transform.domain
    if endpoint == "a":
        k, n = float(transform.kappa(a)), float(transform.nu(a))
    elif endpoint == "b":
        k, n = float(transform.kappa.left_limit(b)), float(transform.nu.left_limit(b))
    else:
        raise ValueError("endpoint must be 'a' or 'b'")
    cos_part = k * math.cos(phi1) - n * math.sin(phi1)
    sin_part = math.sin(phi1) / k
    phi2 = math.atan2(sin_part, cos_part) % math.pi
    return 0.0 if phi2 >= math.pi else phi2


def pullback(f2: Callable, transform: LiouvilleMap) -> Callable:
    """``x -> kappa(x) f2(eta(x))``."""

    def f1(x):
        x = np.asarray(x, dtype=float)
        return transform.kappa(x) * np.asarray(f2(transform.eta(x)))

    return f1


def compose(first: LiouvilleMap, second: LiouvilleMap, tol: float = 1e-13) -> LiouvilleMap:
    """Map equivalent to applying ``first`` and then ``second``.

    ``eta = eta2(eta1)``, ``kappa = kappa1 kappa2(eta1)`` and
    ``nu = nu1 kappa2(eta1) + nu2(eta1)/kappa1``.
    """
    bp = np.unique(
        np.concatenate(
            [first.eta.breakpoints, first.inverse_eta(second.eta.breakpoints[1:-1])]
            if second.eta.n_pieces > 1
            else [first.eta.breakpoints]
        )
    )
    e1, k1, n1 = first.eta, first.kappa, first.nu
    e2, k2, n2 = second.eta, second.kappa, second.nu
    eta = PiecewiseCoefficient.fit(lambda x: e2(e1(x)), bp, tol)
    kappa = PiecewiseCoefficient.fit(lambda x: k1(x) * k2(e1(x)), bp, tol)
    nu = PiecewiseCoefficient.fit(lambda x: n1(x) * k2(e1(x)) + n2(e1(x)) / k1(x), bp, tol)
    return LiouvilleMap(eta, kappa, nu)


# -- Schroedinger gauge ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaugeSpec:
    """Shift ``eta0`` and continuous gauge function ``nu`` on the original interval."""

    eta0: float = 0.0
    nu: Union[PiecewiseCoefficient, float, Callable] = 0.0

    def __post_init__(self):
        if not np.isfinite(self.eta0):
            raise ValueError("eta0 must be finite")


def gauge_transform(c1: CoefficientSet, spec: GaugeSpec) -> CoefficientSet:
    """``s2(eta0 + x) = s1 + nu`` and ``q2(eta0 + x) = q1 - 2 nu s1 - nu^2 + nu'``.

    Keeps ``p = r = 1`` and the formal potential ``-s' + s^2 + q``.
    """
    if not c1.is_schroedinger():
        raise ValueError("gauge transform needs p = r = 1")
    nu = _as_piecewise(spec.nu, c1.interval)
    if _max_jump(nu) > 1e-12 * (1.0 + max(_sup(nu))):
        raise ValueError("nu must be continuous")
    s2 = c1.s + nu
    q2 = c1.q - 2.0 * nu * c1.s - nu * nu + nu.deriv()
    shift = float(spec.eta0)
    a, b = c1.interval
    return make_schroedinger((a + shift, b + shift), q=q2.shifted(shift), s=s2.shifted(shift), name=c1.name)


# -- impedance form ---------------------------------------------------------------------


@dataclass(frozen=True)
class ImpedanceSpec:
    eta0: float = 0.0
    nu0: float = 0.0
    kappa0: float = 1.0
    c1: Optional[float] = None

    def __post_init__(self):
        for v in (self.eta0, self.nu0, self.kappa0):
            if not np.isfinite(v):
                raise ValueError("impedance constants must be finite")


def _impedance_p(p1) -> PiecewiseCoefficient:
    if isinstance(p1, CoefficientSet):
        if not p1.is_impedance():
            raise ValueError("expected an impedance-form problem (q = s = 0, r = p)")
        return p1.p
    return p1


def impedance_factor(p1: PiecewiseCoefficient, spec: ImpedanceSpec) -> PiecewiseCoefficient:
    """``nu0 int_{c1}^x dt/p1 + kappa0``."""
    a, b = p1.interval
    base = 0.5 * (a + b) if spec.c1 is None else float(spec.c1)
    if not a <= base <= b:
        raise ValueError("base point c1 outside the interval")
    if spec.nu0 == 0.0:
        return PiecewiseCoefficient.constant(spec.kappa0, (a, b))
    if all(len(c) == 1 for c in p1.pieces):
        inv = PiecewiseCoefficient(p1.breakpoints, tuple(1.0 / c for c in p1.pieces))
    else:
        inv = PiecewiseCoefficient.fit(lambda x: 1.0 / p1(x), p1.breakpoints)
    return inv.antiderivative(base) * spec.nu0 + spec.kappa0


def impedance_transform(p1, spec: ImpedanceSpec) -> CoefficientSet:
    """Impedance problem with ``p2(eta0 + x) = p1(x) F(x)^2``, ``F = nu0 int_{c1}^x dt/p1 + kappa0``."""
    p1 = _impedance_p(p1)
    F = impedance_factor(p1, spec)
    for i, (x, v) in enumerate(_piece_grid(F)):
        if np.any(v == 0) or v.min() < 0 < v.max() or _has_root(F.pieces[i]):
            raise ValueError("impedance factor vanishes inside the interval")
    p2 = (p1 * F * F).shifted(float(spec.eta0))
    return make_impedance(p2.interval, p2)


def impedance_map(p1, spec: ImpedanceSpec) -> LiouvilleMap:
    """The general map realising :func:`impedance_transform`: ``eta = x + eta0``, ``kappa = F``, ``nu = nu0``."""
    p1 = _impedance_p(p1)
    a, b = p1.interval
    F = impedance_factor(p1, spec)
    eta = PiecewiseCoefficient.from_power([a, b], [[spec.eta0, 1.0]])
    return LiouvilleMap(eta, F, PiecewiseCoefficient.constant(spec.nu0, (a, b)))


# -- equality of Schroedinger expressions ------------------------------------------------


@dataclass(frozen=True)
class ExpressionReport:
    """Residual of ``(s1 - s2)' = s1^2 - s2^2 + q1 - q2`` and jumps of ``s1 - s2``."""

    defect: float
    max_jump: float
    tolerance: float

    @property
    def same(self) -> bool:
        return self.defect <= self.tolerance and self.max_jump <= self.tolerance

    def __bool__(self):
        return self.same


def same_expression(c1: CoefficientSet, c2: CoefficientSet, subinterval=None, tol: float = 1e-8) -> ExpressionReport:
    """Decide whether two Schroedinger expressions coincide on ``subinterval``."""
    if not (c1.is_schroedinger() and c2.is_schroedinger()):
        raise ValueError("same_expression needs p = r = 1 for both problems")
    lo = max(c1.a, c2.a)
    hi = min(c1.b, c2.b)
    if subinterval is not None:
        lo, hi = max(lo, subinterval[0]), min(hi, subinterval[1])
    if not lo < hi:
        raise ValueError("the problems do not overlap on the requested subinterval")
    bp = np.unique(np.concatenate([c1.breakpoints(), c2.breakpoints()]))
    bp = np.concatenate([[lo], bp[(bp > lo) & (bp < hi)], [hi]])
    ds = (c1.s.deriv(), c2.s.deriv())
    defect = 0.0
    scale = 1.0
    for x_lo, x_hi in zip(bp[:-1], bp[1:]):
        x = np.linspace(x_lo, x_hi, _SAMPLES_PER_PIECE + 2)[1:-1]
        s1, s2 = c1.s(x), c2.s(x)
        lhs = ds[0](x) - ds[1](x)
        rhs = s1 * s1 - s2 * s2 + c1.q(x) - c2.q(x)
        defect = max(defect, float(np.max(np.abs(lhs - rhs))))
        scale = max(scale, float(np.max(np.abs(s1 * s1) + np.abs(c1.q(x)))))
    jump = 0.0
    for x in bp[1:-1]:
        d_right = c1.s(x) - c2.s(x)
        d_left = c1.s.left_limit(x) - c2.s.left_limit(x)
        jump = max(jump, abs(float(d_right - d_left)))
    return ExpressionReport(defect, jump, tol * scale)
