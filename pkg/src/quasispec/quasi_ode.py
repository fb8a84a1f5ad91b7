"""Integration of ``(tau - z) f = g`` as a first-order system in ``(f, f^[1])``.

The state is the pair ``(f, f^[1])`` with ``f^[1] = p (f' + s f)``.  It obeys

    (f, f^[1])' = [[-s, 1/p], [q - z r, s]] (f, f^[1]) - (0, r g)

so it is continuous across every coefficient breakpoint; the integrator
restarts there with the same state.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import _dop853
from ._dop853 import IntegrationError
from .coefficients import CoefficientSet, EnergyPoint

__all__ = [
    "QuasiState",
    "SolutionTrace",
    "IntegrationError",
    "DEFAULT_RTOL",
    "DEFAULT_ATOL",
    "integrate",
    "integrate_columns",
    "wronskian",
    "lagrange_defect",
    "apply_tau",
    "gauss_quadrature",
]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
_GAUSS_ORDER = 8


@dataclass(frozen=True)
class QuasiState:
    """Value of ``(f, f^[1])`` at position ``x``."""

    x: float
    f: complex
    f_quasi: complex

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.f) and np.isfinite(self.f_quasi)):
            raise ValueError("QuasiState entries must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.f, self.f_quasi], dtype=complex)


def _energy(z) -> EnergyPoint:
    return z if isinstance(z, EnergyPoint) else EnergyPoint(complex(z))


# -- coefficient evaluation per smooth subinterval ---------------------------------


def _subintervals(c: CoefficientSet, lo: float, hi: float) -> np.ndarray:
    bp = c.breakpoints()
    inner = bp[(bp > lo) & (bp < hi)]
    return np.concatenate([[lo], inner, [hi]])


def _piece_values(coef, mid: float):
    """Vectorised evaluator of the polynomial piece containing ``mid``."""
    i = int(coef.piece_index(mid))
    pc = coef.pieces[i]
    if len(pc) == 1:
        v = float(pc[0])
        return lambda xs: np.full(len(xs), v), v
    return (lambda xs: coef._eval_piece(i, xs)), None


def _piece_omega(c: CoefficientSet, zmax: float, lo: float, hi: float) -> float:
    """Oscillation/growth rate bound on ``[lo, hi]`` for ``|z| <= zmax``.

    With ``A = max(|z| r + |q|)`` the scaled angle ``atan2(w f, f^[1])``,
    ``w = sqrt(A min|p|)``, turns at most ``2 sqrt(A/min|p|) + max|s|`` per
    unit length; the same rate bounds exponential growth.
    """
    xs = np.linspace(lo, hi, 17)
    p = np.abs(c.p(xs))
    r = c.r(xs)
    q = np.abs(c.q(xs))
    s = np.abs(c.s(xs))
    big = float(np.max(zmax * r + q))
    return 1.1 * (np.sqrt(big / float(np.min(p))) + float(np.max(s)))


def _coef_fn(c: CoefficientSet, z: np.ndarray, lo: float, hi: float, forcing):
    """Matrix entries ``(-s, 1/p, q - z r, s)`` per node and column on one smooth piece."""
    mid = 0.5 * (lo + hi)
    p_fn, p_const = _piece_values(c.p, mid)
    q_fn, q_const = _piece_values(c.q, mid)
    r_fn, r_const = _piece_values(c.r, mid)
    s_fn, s_const = _piece_values(c.s, mid)
    n_nodes = len(_dop853._STEP_NODES)
    m = z.size
    if None not in (p_const, q_const, r_const, s_const):
        M0 = np.empty((4, m), dtype=complex)
        M0[0] = -s_const
        M0[1] = 1.0 / p_const
        M0[2] = q_const - z * r_const
        M0[3] = s_const
        M_all = np.broadcast_to(M0, (n_nodes, 4, m))
    else:
        M_all = None

    def coef_fn(xs):
        if M_all is not None:
            M = M_all
        else:
            sv = s_fn(xs)[:, None]
            M = np.empty((len(xs), 4, m), dtype=complex)
            M[:, 0] = -sv
            M[:, 1] = 1.0 / p_fn(xs)[:, None]
            M[:, 2] = q_fn(xs)[:, None] - z[None, :] * r_fn(xs)[:, None]
            M[:, 3] = sv
        F = None if forcing is None else forcing(xs, r_fn)
        return M, F

    return coef_fn


# -- traces ---------------------------------------------------------------------------


class _Run:
    """Accepted steps of one integration (possibly several solution columns)."""

    def __init__(self, c, energies, x0, x1, steps, y0, rtol, atol, error_estimate):
        self.c = c
        self.energies = energies
        self.x0 = float(x0)
        self.x1 = float(x1)
        self.steps = steps
        self.rtol = rtol
        self.atol = atol
        self.error_estimate = error_estimate
        xs = [x0] + [s.x + s.h for s in steps]
        ys = [y0] + [s.y_new for s in steps]
        self.xs = np.asarray(xs, dtype=float)
        self.ys = np.asarray(ys)
        self.forward = x1 >= x0
        # step starts sorted ascending, for lookup
        if self.forward:
            self._lo = self.xs[:-1]
            self._order = np.arange(len(steps))
        else:
            self._lo = self.xs[1:][::-1]
            self._order = np.arange(len(steps))[::-1]

    @property
    def lo(self) -> float:
        return min(self.x0, self.x1)

    @property
    def hi(self) -> float:
        return max(self.x0, self.x1)

    def evaluate(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        tol = 1e-12 * (1.0 + abs(self.lo) + abs(self.hi))
        if np.any(x < self.lo - tol) or np.any(x > self.hi + tol):
            raise ValueError(f"trace covers [{self.lo:.6g}, {self.hi:.6g}] only")
        out = np.empty((x.size,) + self.ys.shape[1:], dtype=complex)
        if not self.steps:
            out[:] = self.ys[0]
            return out
        k = np.clip(np.searchsorted(self._lo, x, side="right") - 1, 0, len(self.steps) - 1)
        for j in np.unique(k):
            m = k == j
            out[m] = self.steps[self._order[j]].evaluate(x[m])
        return out

    def mesh(self, lo: float, hi: float) -> np.ndarray:
        xs = np.sort(self.xs)
        inner = xs[(xs > lo) & (xs < hi)]
        return np.concatenate([[lo], inner, [hi]])


class SolutionTrace:
    """One solution ``(f, f^[1])`` along ``[x0, x1]`` at fixed energy, with dense output.

    A trace is a fixed linear combination (``weights``) of the columns of an
    integration run, so rescaled or recombined solutions share the steps.
    """

    def __init__(self, run: _Run, weights=None):
        self._run = run
        m = run.ys.shape[2]
        if weights is None:
            weights = np.zeros(m, dtype=complex)
            weights[0] = 1.0
        elif isinstance(weights, (int, np.integer)):
            col = int(weights)
            weights = np.zeros(m, dtype=complex)
            weights[col] = 1.0
        self.weights = np.asarray(weights, dtype=complex)

    def combine(self, weights) -> "SolutionTrace":
        return SolutionTrace(self._run, weights)

    def __mul__(self, k) -> "SolutionTrace":
        return SolutionTrace(self._run, self.weights * complex(k))

    __rmul__ = __mul__

    def __add__(self, other: "SolutionTrace") -> "SolutionTrace":
        if other._run is not self._run:
            raise ValueError("traces from different integrations cannot be added")
        return SolutionTrace(self._run, self.weights + other.weights)

    def __sub__(self, other: "SolutionTrace") -> "SolutionTrace":
        return self + other * -1.0

    @property
    def energy(self) -> EnergyPoint:
        used = self._run.energies[self.weights != 0]
        if used.size == 0:
            used = self._run.energies[:1]
        if np.any(used != used[0]):
            raise ValueError("trace mixes solutions at different energies")
        return EnergyPoint(complex(used[0]))

    @property
    def coefficients(self) -> CoefficientSet:
        return self._run.c

    @property
    def x(self) -> np.ndarray:
        return self._run.xs

    @property
    def f(self) -> np.ndarray:
        return self._run.ys[:, 0, :] @ self.weights

    @property
    def f_quasi(self) -> np.ndarray:
        return self._run.ys[:, 1, :] @ self.weights

    @property
    def x_start(self) -> float:
        return self._run.x0

    @property
    def x_end(self) -> float:
        return self._run.x1

    @property
    def interval(self) -> tuple[float, float]:
        return self._run.lo, self._run.hi

    @property
    def error_estimate(self) -> float:
        return self._run.error_estimate * float(np.sum(np.abs(self.weights)))

    @property
    def n_steps(self) -> int:
        return len(self._run.steps)

    @property
    def samples(self) -> list[QuasiState]:
        return [QuasiState(float(x), complex(f), complex(g)) for x, f, g in zip(self.x, self.f, self.f_quasi)]

    def __call__(self, x) -> np.ndarray:
        """``(f, f^[1])`` at ``x``; shape ``(2,)`` for scalar ``x``, ``(2, n)`` otherwise."""
        scalar = np.ndim(x) == 0
        vals = (self._run.evaluate(x) @ self.weights).T
        return vals[:, 0] if scalar else vals

    def state(self, x: float) -> QuasiState:
        f, g = self(x)
        return QuasiState(float(x), complex(f), complex(g))

    def start_state(self) -> QuasiState:
        return QuasiState(float(self.x[0]), complex(self.f[0]), complex(self.f_quasi[0]))

    def end_state(self) -> QuasiState:
        return QuasiState(float(self.x[-1]), complex(self.f[-1]), complex(self.f_quasi[-1]))

    def mesh(self, lo: float, hi: float) -> np.ndarray:
        return self._run.mesh(lo, hi)

    def derivative(self, x) -> np.ndarray:
        """Classical derivative ``f' = f^[1]/p - s f`` (right limits at breakpoints)."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        f, g = self(xs)
        c = self.coefficients
        out = g / c.p(xs) - c.s(xs) * f
        return out[0] if np.ndim(x) == 0 else out

    def to_csv(self, path_or_file) -> None:
        """Write ``x, Re f, Im f, Re f^[1], Im f^[1]`` rows."""
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["x", "re_f", "im_f", "re_fq", "im_fq"])
            for x, f, g in zip(self.x, self.f, self.f_quasi):
                w.writerow([f"{v:.16e}" for v in (x, f.real, f.imag, g.real, g.imag)])
        finally:
            if own:
                fh.close()


def _direction_ok(direction, x0, x1):
    if direction is None:
        return
    if direction not in ("left", "right"):
        raise ValueError("direction must be 'left' or 'right'")
    if (direction == "right") != (x1 >= x0):
        raise ValueError(f"direction {direction!r} inconsistent with x0={x0}, x1={x1}")


def integrate_columns(
    c: CoefficientSet,
    z,
    x0: float,
    y0: np.ndarray,
    x1: float,
    forcing: Optional[Callable] = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    coefficient_override: Optional[Callable] = None,
) -> _Run:
    """Integrate several solution columns with shared steps.

    ``y0`` has shape ``(2, m)``; ``z`` is one energy or one per column.
    ``forcing(xs, r_fn)`` returns the additive term of shape
    ``(len(xs), 2, m)``.  ``coefficient_override(lo, hi)`` replaces the
    per-piece matrix function (used for difference systems).
    """
    if isinstance(z, EnergyPoint):
        z = z.z
    y = np.array(y0, dtype=complex)
    if y.ndim == 1:
        y = y[:, None]
    m = y.shape[1]
    zs = np.asarray(z, dtype=complex).reshape(-1)
    if zs.size == 1 and m > 1:
        zs = np.full(m, zs[0])
    elif zs.size != m:
        raise ValueError(f"{zs.size} energies for {m} solution columns")
    zmax = float(np.max(np.abs(zs)))
    a, b = c.interval
    span = 1e-12 * (1.0 + abs(a) + abs(b))
    if not (a - span <= x0 <= b + span and a - span <= x1 <= b + span):
        raise ValueError(f"integration limits must lie in [{a}, {b}]")
    x0 = min(max(float(x0), a), b)
    x1 = min(max(float(x1), a), b)
    y_start = y.copy()
    steps: list = []
    err_total = 0.0
    lo, hi = min(x0, x1), max(x0, x1)
    nodes = _subintervals(c, lo, hi)
    pieces = list(zip(nodes[:-1], nodes[1:]))
    if x1 < x0:
        pieces = [(v, u) for u, v in reversed(pieces)]
    h_prev = None
    for u, v in pieces:
        plo, phi = min(u, v), max(u, v)
        if coefficient_override is None:
            fn = _coef_fn(c, zs, plo, phi, forcing)
        else:
            fn = coefficient_override(plo, phi)
        omega = _piece_omega(c, zmax, plo, phi)
        h_max = np.inf if omega == 0 else 0.5 / omega
        y, h_prev, err = _dop853.integrate_piece(fn, u, v, y, h_max, h_prev, rtol, atol, steps)
        err_total += err
    return _Run(c, zs, x0, x1, steps, y_start, rtol, atol, err_total)


def _source_forcing(g: Callable):
    def forcing(xs, r_fn):
        out = np.zeros((len(xs), 2, 1), dtype=complex)
        out[:, 1, 0] = -r_fn(xs) * np.asarray(g(xs), dtype=complex)
        return out

    return forcing


def integrate(
    c: CoefficientSet,
    z,
    init: QuasiState,
    x1: float,
    g: Optional[Callable] = None,
    direction: Optional[str] = None,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> SolutionTrace:
    """Solve ``(tau - z) f = g`` from ``init`` (at ``init.x``) to ``x1``.

    ``g`` is an optional vectorised function of ``x``.  Raises
    :class:`IntegrationError` (with the failing position) on step underflow.
    """
    x0 = float(init.x)
    _direction_ok(direction, x0, x1)
    forcing = None if g is None else _source_forcing(g)
    run = integrate_columns(c, z, x0, init.as_array(), x1, forcing, rtol, atol)
    return SolutionTrace(run, 0)


def wronskian(u: QuasiState, v: QuasiState) -> complex:
    """``u v^[1] - u^[1] v``; both states must sit at the same position."""
    if not np.isclose(u.x, v.x, rtol=0, atol=1e-12 * (1 + abs(u.x))):
        raise ValueError(f"Wronskian of states at different positions {u.x} and {v.x}")
    return complex(u.f * v.f_quasi - u.f_quasi * v.f)


def _gauss(order: int = _GAUSS_ORDER):
    return np.polynomial.legendre.leggauss(order)


def gauss_quadrature(integrand: Callable, mesh: Sequence[float], order: int = _GAUSS_ORDER) -> complex:
    """Composite Gauss-Legendre over consecutive mesh cells; ``integrand`` is vectorised."""
    t, w = _gauss(order)
    mesh = np.asarray(mesh, dtype=float)
    lo, hi = mesh[:-1], mesh[1:]
    half = 0.5 * (hi - lo)
    xs = (0.5 * (hi + lo))[:, None] + half[:, None] * t[None, :]
    vals = np.asarray(integrand(xs.ravel())).reshape(xs.shape)
    return complex(np.sum(vals * w[None, :] * half[:, None]))


def gauss_quadrature_columns(integrand: Callable, mesh: Sequence[float], order: int = _GAUSS_ORDER) -> np.ndarray:
    """Like :func:`gauss_quadrature` for an integrand returning ``(len(xs), k)`` columns."""
    t, w = _gauss(order)
    mesh = np.asarray(mesh, dtype=float)
    lo, hi = mesh[:-1], mesh[1:]
    half = 0.5 * (hi - lo)
    xs = (0.5 * (hi + lo))[:, None] + half[:, None] * t[None, :]
    vals = np.asarray(integrand(xs.ravel()))
    vals = vals.reshape(xs.shape + vals.shape[1:])
    weights = (w[None, :] * half[:, None])[..., None]
    return np.sum(vals * weights, axis=(0, 1))


def merged_mesh(traces, lo: float, hi: float, c: CoefficientSet) -> np.ndarray:
    parts = [t.mesh(lo, hi) for t in traces] + [_subintervals(c, lo, hi)]
    mesh = np.unique(np.concatenate(parts))
    keep = np.concatenate([[True], np.diff(mesh) > 1e-14 * (1 + abs(hi) + abs(lo))])
    mesh = mesh[keep]
    mesh[-1] = hi
    return mesh


def apply_tau(trace: SolutionTrace, x, g: Optional[Callable] = None) -> np.ndarray:
    """``tau f`` at ``x`` for a trace solving ``(tau - z) f = g``: equals ``z f + g``."""
    f = trace(np.atleast_1d(x))[0]
    out = trace.energy.z * f
    if g is not None:
        out = out + np.asarray(g(np.atleast_1d(x)), dtype=complex)
    return out


def lagrange_defect(
    c: CoefficientSet,
    f: SolutionTrace,
    g: SolutionTrace,
    alpha: float,
    beta: float,
    f_rhs: Optional[Callable] = None,
    g_rhs: Optional[Callable] = None,
) -> float:
    """``| int (g tau f - f tau g) r dx - [W(f,g)(beta) - W(f,g)(alpha)] |`` over ``[alpha, beta]``.

    ``tau f`` is read off from the equation each trace solves
    (``tau f = z f + rhs``), so no second derivatives are formed.
    """
    if not alpha < beta:
        raise ValueError("need alpha < beta")
    for t in (f, g):
        lo, hi = t.interval
        tol = 1e-12 * (1 + abs(lo) + abs(hi))
        if alpha < lo - tol or beta > hi + tol:
            raise ValueError(f"trace covers [{lo:.6g}, {hi:.6g}], not [{alpha:.6g}, {beta:.6g}]")

    def integrand(xs):
        fv = f(xs)[0]
        gv = g(xs)[0]
        return (gv * apply_tau(f, xs, f_rhs) - fv * apply_tau(g, xs, g_rhs)) * c.r(xs)

    mesh = merged_mesh([f, g], alpha, beta, c)
    lhs = gauss_quadrature(integrand, mesh)
    w_beta = wronskian(f.state(beta), g.state(beta))
    w_alpha = wronskian(f.state(alpha), g.state(alpha))
    return float(abs(lhs - (w_beta - w_alpha)))
