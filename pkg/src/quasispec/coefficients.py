"""Coefficient quadruples ``(p, q, r, s)`` and their piecewise-polynomial representation.

Every coefficient is a :class:`PiecewiseCoefficient`: a strictly increasing
list of breakpoints spanning ``[a, b]`` together with one Chebyshev series per
subinterval.  Values at a breakpoint are right limits (the last piece is used
at ``b``).  Jumps are allowed, which is how step functions in ``s`` (and hence
point interactions in the formal potential ``-(sp)' + s^2 p + q``) are
represented exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Real
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate as _integrate

__all__ = [
    "PiecewiseCoefficient",
    "CoefficientSet",
    "EnergyPoint",
    "Violation",
    "ValidationReport",
    "InvalidCoefficientsError",
    "BumpFunction",
    "validate",
    "formal_potential_pairing",
    "formal_potential_density",
    "make_schroedinger",
    "make_impedance",
    "make_problem",
    "restrict",
    "reflect",
    "preset",
]


class InvalidCoefficientsError(ValueError):
    """Raised by constructors when a coefficient set violates the admissibility rules."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("; ".join(str(v) for v in report.violations))


def _clenshaw(coef: Sequence[float], t: float) -> float:
    # scalar Chebyshev evaluation; used inside the ODE right-hand side
    n = len(coef)
    if n == 1:
        return coef[0]
    if n == 2:
        return coef[0] + coef[1] * t
    b1 = 0.0
    b2 = 0.0
    t2 = 2.0 * t
    for k in range(n - 1, 0, -1):
        b1, b2 = coef[k] + t2 * b1 - b2, b1
    return coef[0] + t * b1 - b2


def _trim(coef: np.ndarray) -> np.ndarray:
    coef = np.asarray(coef, dtype=float)
    if coef.size == 0:
        return np.zeros(1)
    nz = np.nonzero(coef)[0]
    if nz.size == 0:
        return np.zeros(1)
    return coef[: nz[-1] + 1].copy()


def _cheb_from_values(func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, deg: int) -> np.ndarray:
    """Chebyshev interpolant of degree ``deg`` on ``[lo, hi]`` (first-kind points)."""
    k = np.arange(deg + 1)
    t = np.cos(np.pi * (k + 0.5) / (deg + 1))
    x = 0.5 * (hi + lo) + 0.5 * (hi - lo) * t
    vals = np.asarray(func(x), dtype=float)
    if vals.shape == ():
        vals = np.full(deg + 1, float(vals))
    return C.chebfit(t, vals, deg)


@dataclass(frozen=True, eq=False)
class PiecewiseCoefficient:
    """Piecewise polynomial on ``[breakpoints[0], breakpoints[-1]]``.

    ``pieces[i]`` holds Chebyshev coefficients of the restriction to
    ``[breakpoints[i], breakpoints[i+1]]`` in the variable mapped to ``[-1, 1]``.
    """

    breakpoints: np.ndarray
    pieces: tuple

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if not np.all(np.isfinite(bp)):
            raise ValueError("breakpoints must be finite")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        pieces = tuple(_trim(np.asarray(c, dtype=float)) for c in self.pieces)
        if len(pieces) != bp.size - 1:
            raise ValueError(f"expected {bp.size - 1} pieces, got {len(pieces)}")
        for c in pieces:
            if not np.all(np.isfinite(c)):
                raise ValueError("piece coefficients must be finite")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", pieces)

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value: float, interval: Sequence[float]) -> "PiecewiseCoefficient":
        a, b = map(float, interval)
        return cls(np.array([a, b]), (np.array([float(value)]),))

    @classmethod
    def from_power(cls, breakpoints: Sequence[float], coeffs: Sequence[Sequence[float]]) -> "PiecewiseCoefficient":
        """Build from ascending power-basis coefficients in the absolute variable ``x``."""
        bp = np.asarray(breakpoints, dtype=float)
        pieces = []
        for lo, hi, c in zip(bp[:-1], bp[1:], coeffs):
            poly = np.polynomial.Polynomial(np.asarray(c, dtype=float))
            pieces.append(poly.convert(kind=np.polynomial.Chebyshev, domain=[lo, hi]).coef)
        return cls(bp, tuple(pieces))

    @classmethod
    def step(cls, interval: Sequence[float], x0: float, left: float, right: float) -> "PiecewiseCoefficient":
        """``left`` on ``[a, x0)`` and ``right`` on ``[x0, b]``."""
        a, b = map(float, interval)
        if not a < x0 < b:
            raise ValueError("step location must lie strictly inside the interval")
        return cls(np.array([a, x0, b]), (np.array([float(left)]), np.array([float(right)])))

    @classmethod
    def bump(
        cls, interval: Sequence[float], center: float, radius: float, amplitude: float = 1.0, order: int = 3
    ) -> "PiecewiseCoefficient":
        """``amplitude (1 - t^2)^order`` for ``|t| < 1``, ``t = (x - center)/radius``, zero elsewhere.

        The support must lie strictly inside the interval; the result has
        ``order - 1`` continuous derivatives.
        """
        a, b = map(float, interval)
        lo, hi = center - radius, center + radius
        if not (radius > 0 and a < lo and hi < b):
            raise ValueError("bump support must lie strictly inside the interval")
        t = C.Chebyshev([0.0, 1.0])
        core = (amplitude * (1 - t * t) ** order).coef
        zero = np.zeros(1)
        return cls(np.array([a, lo, hi, b]), (zero, core, zero))

    @classmethod
    def fit(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        breakpoints: Sequence[float],
        tol: float = 1e-13,
        max_degree: int = 96,
        accept: Optional[float] = None,
    ) -> "PiecewiseCoefficient":
        """Adaptive Chebyshev interpolation of ``func`` on each subinterval.

        The degree is doubled until the interpolant matches ``func`` on a
        check grid to ``tol`` (relative to the piece's sup norm, floor 1).
        A residual up to ``accept`` is tolerated at ``max_degree``; otherwise
        ``ValueError`` is raised.
        """
        bp = np.asarray(breakpoints, dtype=float)
        pieces = []
        for lo, hi in zip(bp[:-1], bp[1:]):
            pieces.append(_fit_piece(func, lo, hi, tol, max_degree, accept))
        return cls(bp, tuple(pieces))

    # -- basic queries ----------------------------------------------------

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def n_pieces(self) -> int:
        return len(self.pieces)

    @property
    def degree(self) -> int:
        return max(len(c) - 1 for c in self.pieces)

    def is_constant(self, value: float | None = None, atol: float = 1e-12) -> bool:
        """Constant up to ``atol`` (relative to the level, floor 1) on every piece."""
        vals = []
        for c in self.pieces:
            level = 1.0 + abs(c[0])
            if np.sum(np.abs(c[1:])) > atol * level:
                return False
            vals.append(c[0])
        vals = np.asarray(vals)
        ref = vals[0] if value is None else value
        return bool(np.all(np.abs(vals - ref) <= atol * (1.0 + abs(ref))))

    def piece_index(self, x, side: str = "right"):
        k = np.searchsorted(self.breakpoints, x, side=side) - 1
        return np.clip(k, 0, self.n_pieces - 1)

    def _eval_piece(self, i: int, x):
        lo, hi = self.breakpoints[i], self.breakpoints[i + 1]
        t = (2.0 * np.asarray(x, dtype=float) - lo - hi) / (hi - lo)
        return C.chebval(t, self.pieces[i])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.piece_index(x)
        if x.ndim == 0:
            return float(self._eval_piece(int(idx), x))
        out = np.empty(x.shape)
        for i in np.unique(idx):
            m = idx == i
            out[m] = self._eval_piece(int(i), x[m])
        return out

    def left_limit(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.piece_index(x, side="left")
        if x.ndim == 0:
            return float(self._eval_piece(int(idx), x))
        out = np.empty(x.shape)
        for i in np.unique(idx):
            m = idx == i
            out[m] = self._eval_piece(int(i), x[m])
        return out

    def scalar_evaluator(self, i: int) -> Callable[[float], float]:
        """Fast scalar evaluator of piece ``i`` (continuous extension to its closed subinterval)."""
        lo, hi = float(self.breakpoints[i]), float(self.breakpoints[i + 1])
        coef = [float(v) for v in self.pieces[i]]
        if len(coef) == 1:
            v = coef[0]
            return lambda x: v
        mid = 0.5 * (lo + hi)
        inv = 2.0 / (hi - lo)
        return lambda x: _clenshaw(coef, (x - mid) * inv)

    def piece_samples(self, i: int, n: int = 33) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.breakpoints[i], self.breakpoints[i + 1]
        x = np.linspace(lo, hi, n)
        return x, self._eval_piece(i, x)

    def jumps(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior breakpoints and the jump ``f(x+) - f(x-)`` across each."""
        xs = self.breakpoints[1:-1]
        right = np.array([self._eval_piece(i + 1, x) for i, x in enumerate(xs)])
        left = np.array([self._eval_piece(i, x) for i, x in enumerate(xs)])
        return xs, right - left

    # -- calculus ---------------------------------------------------------

    def deriv(self) -> "PiecewiseCoefficient":
        """Pointwise derivative on each piece (jumps are discarded)."""
        pieces = []
        for i, c in enumerate(self.pieces):
            lo, hi = self.breakpoints[i], self.breakpoints[i + 1]
            pieces.append(C.chebder(c) * (2.0 / (hi - lo)) if len(c) > 1 else np.zeros(1))
        return PiecewiseCoefficient(self.breakpoints, tuple(pieces))

    def antiderivative(self, x0: float | None = None) -> "PiecewiseCoefficient":
        """Continuous antiderivative vanishing at ``x0`` (default: left endpoint)."""
        pieces = []
        acc = 0.0
        for i, c in enumerate(self.pieces):
            lo, hi = self.breakpoints[i], self.breakpoints[i + 1]
            ci = C.chebint(c, lbnd=-1) * (0.5 * (hi - lo))
            ci[0] += acc
            pieces.append(ci)
            acc = C.chebval(1.0, ci)
        out = PiecewiseCoefficient(self.breakpoints, tuple(pieces))
        if x0 is not None:
            shift = out(x0)
            out = out - shift
        return out

    def integral(self, lo: float | None = None, hi: float | None = None) -> float:
        F = self.antiderivative()
        a, b = self.interval
        lo = a if lo is None else lo
        hi = b if hi is None else hi
        return float(F(hi) - F(lo))

    # -- algebra ----------------------------------------------------------

    def refine(self, breakpoints: Iterable[float]) -> "PiecewiseCoefficient":
        """Same function re-expressed on a finer breakpoint set (must contain the current one)."""
        new_bp = np.union1d(self.breakpoints, np.asarray(list(breakpoints), dtype=float))
        a, b = self.interval
        new_bp = new_bp[(new_bp >= a) & (new_bp <= b)]
        if new_bp.size == self.breakpoints.size:
            return self
        pieces = []
        for lo, hi in zip(new_bp[:-1], new_bp[1:]):
            i = int(self.piece_index(0.5 * (lo + hi)))
            deg = len(self.pieces[i]) - 1
            if deg == 0:
                pieces.append(self.pieces[i].copy())
            else:
                pieces.append(_cheb_from_values(lambda x, i=i: self._eval_piece(i, x), lo, hi, deg))
        return PiecewiseCoefficient(new_bp, tuple(pieces))

    def _binary(self, other, op) -> "PiecewiseCoefficient":
        if isinstance(other, Real):
            other = PiecewiseCoefficient.constant(float(other), self.interval)
        if not isinstance(other, PiecewiseCoefficient):
            return NotImplemented
        if not np.allclose(self.interval, other.interval, rtol=0, atol=1e-12 * (1 + np.abs(self.interval).max())):
            raise ValueError("coefficients live on different intervals")
        bp = np.union1d(self.breakpoints, other.breakpoints)
        lhs = self.refine(bp)
        rhs = other.refine(bp)
        return PiecewiseCoefficient(lhs.breakpoints, tuple(op(u, v) for u, v in zip(lhs.pieces, rhs.pieces)))

    def __add__(self, other):
        return self._binary(other, C.chebadd)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, C.chebsub)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._binary(other, C.chebmul)

    __rmul__ = __mul__

    def __neg__(self):
        return PiecewiseCoefficient(self.breakpoints, tuple(-c for c in self.pieces))

    def shifted(self, offset: float) -> "PiecewiseCoefficient":
        """The function ``x -> self(x - offset)`` on the shifted interval."""
        return PiecewiseCoefficient(self.breakpoints + offset, tuple(c.copy() for c in self.pieces))

    def reflected(self) -> "PiecewiseCoefficient":
        """The function ``y -> self(-y)`` on ``[-b, -a]``."""
        bp = -self.breakpoints[::-1]
        sign = lambda c: c * (-1.0) ** np.arange(len(c))
        return PiecewiseCoefficient(bp, tuple(sign(c) for c in self.pieces[::-1]))

    def restricted(self, lo: float, hi: float) -> "PiecewiseCoefficient":
        a, b = self.interval
        if not (a <= lo < hi <= b):
            raise ValueError(f"[{lo}, {hi}] is not inside [{a}, {b}]")
        fine = self.refine([lo, hi])
        i0 = int(np.searchsorted(fine.breakpoints, lo))
        i1 = int(np.searchsorted(fine.breakpoints, hi))
        return PiecewiseCoefficient(fine.breakpoints[i0 : i1 + 1], fine.pieces[i0:i1])

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "basis": "chebyshev",
            "breakpoints": [float(x) for x in self.breakpoints],
            "pieces": [[float(v) for v in c] for c in self.pieces],
        }

    @classmethod
    def from_spec(cls, spec, interval: Sequence[float]) -> "PiecewiseCoefficient":
        """Parse a config entry: a number, or ``{"breakpoints", "pieces", "basis"}``."""
        if isinstance(spec, bool):
            raise ValueError("coefficient must be a number or a piecewise table")
        if isinstance(spec, Real):
            return cls.constant(float(spec), interval)
        if not isinstance(spec, dict):
            raise ValueError("coefficient must be a number or a piecewise table")
        unknown = set(spec) - {"breakpoints", "pieces", "basis"}
        if unknown:
            raise ValueError(f"unknown keys {sorted(unknown)}")
        try:
            bp = spec["breakpoints"]
            pieces = spec["pieces"]
        except KeyError as exc:
            raise ValueError(f"missing key {exc.args[0]!r}") from None
        basis = spec.get("basis", "power")
        if basis == "power":
            out = cls.from_power(bp, pieces)
        elif basis == "chebyshev":
            out = cls(np.asarray(bp, dtype=float), tuple(np.asarray(c, dtype=float) for c in pieces))
        else:
            raise ValueError(f"unknown basis {basis!r}")
        a, b = map(float, interval)
        if not (np.isclose(out.breakpoints[0], a) and np.isclose(out.breakpoints[-1], b)):
            raise ValueError("breakpoints must start at a and end at b")
        return out


def _fit_piece(func, lo, hi, tol, max_degree, accept=None):
    """Chebyshev coefficients on ``[lo, hi]``, doubling the degree until ``tol`` is met.

    At ``max_degree`` a residual up to ``accept`` (default ``tol``) is still
    taken; beyond that ``ValueError`` is raised.
    """
    xc = np.linspace(lo, hi, 257)
    xc = 0.5 * (xc[:-1] + xc[1:])
    ref = np.asarray(func(xc), dtype=float)
    if ref.shape == ():
        return np.array([float(ref)])
    if not np.all(np.isfinite(ref)):
        raise ValueError(f"non-finite values on piece [{lo:.6g}, {hi:.6g}]")
    scale = max(1.0, float(np.max(np.abs(ref))))
    accept = tol if accept is None else max(accept, tol)
    deg = 8
    t = (2.0 * xc - lo - hi) / (hi - lo)
    while True:
        coef = _cheb_from_values(func, lo, hi, deg)
        err = float(np.max(np.abs(C.chebval(t, coef) - ref)))
        if err <= tol * scale or (deg >= max_degree and err <= accept * scale):
            return _chop(coef, tol * scale)
        if deg >= max_degree:
            raise ValueError(
                f"piece [{lo:.6g}, {hi:.6g}]: residual {err:.3g} above {accept * scale:.3g} at degree {deg}"
            )
        deg = min(2 * deg, max_degree)


def _chop(coef: np.ndarray, tol: float) -> np.ndarray:
    # drop a negligible tail; the sum of dropped magnitudes bounds the change
    tail = np.cumsum(np.abs(coef[::-1]))[::-1]
    keep = np.nonzero(tail > 0.1 * tol)[0]
    n = keep[-1] + 1 if keep.size else 1
    return coef[:n].copy()


@dataclass(frozen=True)
class EnergyPoint:
    """Spectral parameter ``z`` together with the principal root of ``-z``."""

    z: complex

    @property
    def sqrt_minus_z(self) -> complex:
        w = np.sqrt(-complex(self.z))
        if w.real < 0:
            w = -w
        return complex(w)


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """Coefficients of ``tau f = (-(p[f' + s f])' + s p[f' + s f] + q f) / r`` on ``(a, b)``."""

    interval: tuple
    p: PiecewiseCoefficient
    q: PiecewiseCoefficient
    r: PiecewiseCoefficient
    s: PiecewiseCoefficient
    name: str = field(default="", compare=False)

    def __post_init__(self):
        a, b = map(float, self.interval)
        if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
            raise ValueError("interval must be finite with a < b")
        object.__setattr__(self, "interval", (a, b))

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def coefficients(self) -> dict[str, PiecewiseCoefficient]:
        return {"p": self.p, "q": self.q, "r": self.r, "s": self.s}

    def breakpoints(self) -> np.ndarray:
        bp = np.unique(np.concatenate([c.breakpoints for c in self.coefficients.values()]))
        return bp[(bp >= self.a) & (bp <= self.b)]

    def is_schroedinger(self) -> bool:
        return self.p.is_constant(1.0) and self.r.is_constant(1.0)

    def is_impedance(self) -> bool:
        if not (self.q.is_constant(0.0) and self.s.is_constant(0.0)):
            return False
        bp = self.breakpoints()
        x = np.concatenate([np.linspace(lo, hi, 9) for lo, hi in zip(bp[:-1], bp[1:])])
        return bool(np.allclose(self.p(x), self.r(x), rtol=1e-12, atol=0))

    def to_dict(self) -> dict:
        return {
            "interval": [self.a, self.b],
            "coefficients": {k: v.to_dict() for k, v in self.coefficients.items()},
        }


@dataclass(frozen=True)
class Violation:
    coefficient: str
    piece: tuple
    message: str

    def __str__(self):
        lo, hi = self.piece
        return f"{self.message} on piece [{lo:.6g},{hi:.6g}]"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __len__(self):
        return len(self.violations)


def _real_roots_in(coef: np.ndarray, closed: bool = True) -> np.ndarray:
    if len(coef) <= 1:
        return np.empty(0)
    roots = C.chebroots(coef)
    tol = 1e-9
    keep = np.abs(roots.imag) <= tol * (1 + np.abs(roots.real))
    re = roots.real[keep]
    lim = 1.0 + tol if closed else 1.0 - tol
    return re[np.abs(re) <= lim]


def validate(c: CoefficientSet) -> ValidationReport:
    """List every violation of the admissibility conditions for ``c``.

    Checks: each coefficient spans exactly ``[a, b]``; ``p`` has no zero on
    any (closed) piece, so ``1/p`` is integrable; ``r`` is strictly positive
    on every piece.  Violations are returned, never raised.
    """
    out: list[Violation] = []
    a, b = c.interval
    span_tol = 1e-12 * (1.0 + max(abs(a), abs(b)))
    for name, coef in c.coefficients.items():
        lo, hi = coef.interval
        if abs(lo - a) > span_tol or abs(hi - b) > span_tol:
            out.append(Violation(name, (lo, hi), f"{name} breakpoints do not span [{a:.6g},{b:.6g}]"))
    for i, coef in enumerate(c.p.pieces):
        lo, hi = c.p.breakpoints[i], c.p.breakpoints[i + 1]
        _, vals = c.p.piece_samples(i)
        zero = _real_roots_in(coef).size > 0 or np.any(vals == 0) or (vals.min() < 0 < vals.max())
        if zero:
            out.append(Violation("p", (lo, hi), "p has interior zero"))
    for i, coef in enumerate(c.r.pieces):
        lo, hi = c.r.breakpoints[i], c.r.breakpoints[i + 1]
        _, vals = c.r.piece_samples(i)
        if np.any(vals <= 0) or _real_roots_in(coef).size > 0:
            out.append(Violation("r", (lo, hi), "r not positive"))
    return ValidationReport(tuple(out))


def _as_coefficient(value, interval) -> PiecewiseCoefficient:
    if isinstance(value, PiecewiseCoefficient):
        return value
    if isinstance(value, Real):
        return PiecewiseCoefficient.constant(float(value), interval)
    if callable(value):
        return PiecewiseCoefficient.fit(value, interval)
    raise TypeError(f"cannot interpret {value!r} as a coefficient")


def make_problem(interval, p=1.0, q=0.0, r=1.0, s=0.0, name: str = "") -> CoefficientSet:
    """General constructor; raises :class:`InvalidCoefficientsError` on violations."""
    interval = tuple(map(float, interval))
    c = CoefficientSet(
        interval,
        _as_coefficient(p, interval),
        _as_coefficient(q, interval),
        _as_coefficient(r, interval),
        _as_coefficient(s, interval),
        name=name,
    )
    report = validate(c)
    if not report:
        raise InvalidCoefficientsError(report)
    return c


def make_schroedinger(interval, q=0.0, s=0.0, name: str = "") -> CoefficientSet:
    """Schroedinger case ``p = r = 1``."""
    return make_problem(interval, 1.0, q, 1.0, s, name=name)


def make_impedance(interval, p, name: str = "") -> CoefficientSet:
    """Impedance form ``q = s = 0``, ``r = p``."""
    interval = tuple(map(float, interval))
    p = _as_coefficient(p, interval)
    return make_problem(interval, p, 0.0, p, 0.0, name=name)


def restrict(c: CoefficientSet, lo: float, hi: float) -> CoefficientSet:
    """The same expression on the subinterval ``(lo, hi)``."""
    return CoefficientSet(
        (lo, hi), *(coef.restricted(lo, hi) for coef in (c.p, c.q, c.r, c.s)), name=c.name
    )


def reflect(c: CoefficientSet) -> CoefficientSet:
    """Mirror image ``x -> -x``.

    ``f~(y) = f(-y)`` solves the reflected equation with ``s~(y) = -s(-y)``,
    and its quasi-derivative is ``-f^[1](-y)``.
    """
    return CoefficientSet(
        (-c.b, -c.a), c.p.reflected(), c.q.reflected(), c.r.reflected(), -c.s.reflected(), name=c.name
    )


# -- test functions and the formal potential ---------------------------------


@dataclass(frozen=True)
class BumpFunction:
    """Smooth bump ``amplitude * exp(1 - 1/(1 - t^2))``, ``t = (x - center)/radius``."""

    center: float
    radius: float
    amplitude: float = 1.0

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.radius, self.center + self.radius

    def __call__(self, x):
        t = (np.asarray(x, dtype=float) - self.center) / self.radius
        out = np.zeros_like(t)
        m = np.abs(t) < 1
        out[m] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - t[m] ** 2))
        return out if out.ndim else float(out)

    def derivative(self, x):
        t = (np.asarray(x, dtype=float) - self.center) / self.radius
        out = np.zeros_like(t)
        m = np.abs(t) < 1
        tm = t[m]
        out[m] = (
            self.amplitude * np.exp(1.0 - 1.0 / (1.0 - tm**2)) * (-2.0 * tm / (1.0 - tm**2) ** 2) / self.radius
        )
        return out if out.ndim else float(out)

    def __add__(self, other):
        return _CombinedTest(((1.0, self), (1.0, other)))

    def __mul__(self, k: float):
        return _CombinedTest(((float(k), self),))

    __rmul__ = __mul__


@dataclass(frozen=True)
class _CombinedTest:
    terms: tuple

    @property
    def support(self):
        lo = min(t.support[0] for _, t in self.terms)
        hi = max(t.support[1] for _, t in self.terms)
        return lo, hi

    def __call__(self, x):
        return sum(k * t(x) for k, t in self.terms)

    def derivative(self, x):
        return sum(k * t.derivative(x) for k, t in self.terms)

    def __add__(self, other):
        other_terms = other.terms if isinstance(other, _CombinedTest) else ((1.0, other),)
        return _CombinedTest(self.terms + other_terms)

    def __mul__(self, k: float):
        return _CombinedTest(tuple((k * kk, t) for kk, t in self.terms))

    __rmul__ = __mul__


def _quad_pieces(func, nodes, **kw) -> float:
    total = 0.0
    for lo, hi in zip(nodes[:-1], nodes[1:]):
        val, _ = _integrate.quad(func, lo, hi, limit=200, epsabs=1e-13, epsrel=1e-13, **kw)
        total += val
    return total


def formal_potential_pairing(c: CoefficientSet, test_fn) -> float:
    """Pair the formal potential ``-(sp)' + s^2 p + q`` with a test function.

    Computed in weak form as ``integral(s p chi' + (s^2 p + q) chi)``, so
    jumps in ``s`` contribute point masses.  ``test_fn`` must expose
    ``__call__``, ``derivative`` and ``support`` (e.g. :class:`BumpFunction`)
    with the support strictly inside ``(a, b)``.
    """
    lo, hi = test_fn.support
    if not (c.a < lo < hi < c.b):
        raise ValueError(f"test function support [{lo:.6g}, {hi:.6g}] not strictly inside ({c.a:.6g}, {c.b:.6g})")
    bp = c.breakpoints()
    nodes = np.unique(np.concatenate([[lo, hi], bp[(bp > lo) & (bp < hi)]]))
    p, q, s = c.p, c.q, c.s

    def integrand(x):
        sx = s(x)
        px = p(x)
        return sx * px * test_fn.derivative(x) + (sx * sx * px + q(x)) * test_fn(x)

    return _quad_pieces(integrand, nodes)


def formal_potential_density(c: CoefficientSet) -> PiecewiseCoefficient:
    """Pointwise part ``-(sp)' + s^2 p + q`` (jumps of ``sp`` are *not* included)."""
    sp = c.s * c.p
    return -sp.deriv() + c.s * c.s * c.p + c.q


# -- presets -------------------------------------------------------------------


def preset(name: str, **params) -> CoefficientSet:
    """Named example problems.

    ``free``: ``p = r = 1``, ``q = s = 0`` on ``(0, pi)``.
    ``step_s``: free plus ``s = sigma`` on ``[x0, b)`` (a point interaction at ``x0``).
    ``impedance_linear``: ``p = r = (1 + x)^2`` on ``(0, 1)``.
    """
    if name == "free":
        interval = params.pop("interval", (0.0, np.pi))
        _no_extra(name, params)
        return make_schroedinger(interval, name="free")
    if name == "step_s":
        interval = tuple(params.pop("interval", (0.0, np.pi)))
        sigma = float(params.pop("sigma", 1.0))
        x0 = float(params.pop("x0", 1.0))
        _no_extra(name, params)
        s = PiecewiseCoefficient.step(interval, x0, 0.0, sigma)
        return make_schroedinger(interval, s=s, name="step_s")
    if name == "impedance_linear":
        interval = tuple(params.pop("interval", (0.0, 1.0)))
        _no_extra(name, params)
        p = PiecewiseCoefficient.from_power(interval, [[1.0, 2.0, 1.0]])
        return make_impedance(interval, p, name="impedance_linear")
    raise ValueError(f"unknown preset {name!r}")


def _no_extra(name, params):
    if params:
        raise ValueError(f"unknown parameters for preset {name!r}: {sorted(params)}")
