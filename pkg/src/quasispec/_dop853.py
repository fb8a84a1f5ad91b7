"""Explicit Runge-Kutta 8(5,3) stepping for linear systems ``y' = M(x) y + F(x)``.

The Butcher tableau is taken from SciPy; the step loop, error control and
dense output live here so that steps can be split at coefficient
breakpoints and capped by the local oscillation scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _tab

A = _tab.A
B = _tab.B
C_NODES = _tab.C
E3 = _tab.E3
E5 = _tab.E5
D = _tab.D
N_STAGES = _tab.N_STAGES
N_EXT = _tab.N_STAGES_EXTENDED

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERR_EXPONENT = -1.0 / 8.0

# nodes at which the coefficients are needed for one step (incl. the dense-output stages)
_STEP_NODES = np.concatenate([C_NODES[:N_STAGES], [1.0], C_NODES[N_STAGES + 1 : N_EXT]])


class IntegrationError(RuntimeError):
    """Step size underflow or non-finite state."""

    def __init__(self, message: str, position: float):
        self.position = position
        super().__init__(f"{message} at x = {position:.16g}")


# coef_fn(xs) -> (M, F): M has shape (len(xs), 4, m) holding the entries
# (a, b, c, d) of each column's 2x2 matrix (m may be 1 for broadcasting);
# F is None or (len(xs), 2, m)
CoefFn = Callable[[np.ndarray], tuple]


def _apply(M_s: np.ndarray, F_s, y: np.ndarray, out: np.ndarray) -> None:
    f = y[0]
    g = y[1]
    out[0] = M_s[0] * f + M_s[1] * g
    out[1] = M_s[2] * f + M_s[3] * g
    if F_s is not None:
        out += F_s


@dataclass
class Step:
    x: float
    h: float
    y_old: np.ndarray
    y_new: np.ndarray
    K: np.ndarray
    M: np.ndarray
    F: Optional[np.ndarray]
    _dense: Optional[np.ndarray] = field(default=None, repr=False)

    def dense(self) -> np.ndarray:
        if self._dense is None:
            K = self.K
            h = self.h
            Kf = K.reshape(N_EXT, -1)
            shape = self.y_old.shape
            for s in range(N_STAGES + 1, N_EXT):
                ys = self.y_old + (h * (A[s, :s] @ Kf[:s])).reshape(shape)
                _apply(self.M[s], None if self.F is None else self.F[s], ys, K[s])
            out = np.empty((7,) + shape, dtype=K.dtype)
            delta = self.y_new - self.y_old
            out[0] = delta
            out[1] = h * K[0] - delta
            out[2] = 2 * delta - h * (K[N_STAGES] + K[0])
            out[3:] = h * (D @ Kf).reshape((4,) + shape)
            self._dense = out
        return self._dense

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        """Dense output at points ``t`` inside the step; result shape ``(len(t),) + y.shape``."""
        F = self.dense()
        u = (np.asarray(t, dtype=float) - self.x) / self.h
        u = u.reshape((-1,) + (1,) * self.y_old.ndim)
        acc = np.zeros((u.shape[0],) + self.y_old.shape, dtype=F.dtype)
        for i, coef in enumerate(reversed(F)):
            acc = acc + coef
            acc = acc * (u if i % 2 == 0 else (1 - u))
        return acc + self.y_old


def _error_norm(Kf: np.ndarray, h: float, y: np.ndarray, y_new: np.ndarray, rtol: float, atol: float):
    """Blended 5th/3rd order error norm, worst column; plus an absolute local error estimate."""
    shape = y.shape
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    err5_abs = (E5 @ Kf).reshape(shape)
    err5 = err5_abs / scale
    err3 = (E3 @ Kf).reshape(shape) / scale
    e5 = np.sum(err5.real**2 + err5.imag**2, axis=0)
    e3 = np.sum(err3.real**2 + err3.imag**2, axis=0)
    denom = e5 + 0.01 * e3
    nz = denom > 0
    if not np.any(nz):
        return 0.0, 0.0
    ratio = np.zeros_like(e5)
    ratio[nz] = e5[nz] / np.sqrt(denom[nz] * shape[0])
    norm = abs(h) * float(np.max(ratio))
    blend = np.zeros_like(e5)
    blend[nz] = np.sqrt(e5[nz] / denom[nz])
    est = abs(h) * float(np.max(np.abs(err5_abs) * blend))
    return norm, est


def integrate_piece(
    coef_fn: CoefFn,
    x0: float,
    x1: float,
    y0: np.ndarray,
    h_max: float,
    h_init: Optional[float],
    rtol: float,
    atol: float,
    steps: list,
) -> tuple[np.ndarray, float, float]:
    """Advance ``y`` of shape ``(2, m)`` from ``x0`` to ``x1`` (either direction) on one smooth piece.

    Accepted steps are appended to ``steps``.  Returns the end state, the
    last accepted step length (for warm starts) and the accumulated local
    error estimate.
    """
    direction = 1.0 if x1 > x0 else -1.0
    length = abs(x1 - x0)
    h_abs = min(h_max, length) if h_init is None else min(h_init, h_max, length)
    if h_abs <= 0:
        h_abs = length
    x = x0
    y = np.array(y0, dtype=complex)
    shape = y.shape
    err_total = 0.0
    last_h = h_abs
    while direction * (x1 - x) > 0:
        min_step = 10 * np.spacing(max(abs(x), abs(x1), 1.0))
        remaining = abs(x1 - x)
        h_abs = min(h_abs, h_max)
        if h_abs >= remaining or remaining - h_abs < min_step:
            h_abs = remaining
        while True:
            if h_abs < min_step:
                raise IntegrationError("step size underflow", x)
            h = direction * h_abs
            x_new = x1 if h_abs == remaining else x + h
            nodes = x + _STEP_NODES * h
            nodes[N_STAGES] = x_new
            M, F = coef_fn(nodes)
            K = np.empty((N_EXT,) + shape, dtype=complex)
            Kf = K.reshape(N_EXT, -1)
            _apply(M[0], None if F is None else F[0], y, K[0])
            for s in range(1, N_STAGES):
                ys = y + (h * (A[s, :s] @ Kf[:s])).reshape(shape)
                _apply(M[s], None if F is None else F[s], ys, K[s])
            y_new = y + (h * (B @ Kf[:N_STAGES])).reshape(shape)
            _apply(M[N_STAGES], None if F is None else F[N_STAGES], y_new, K[N_STAGES])
            err, est = _error_norm(Kf[: N_STAGES + 1], h, y, y_new, rtol, atol)
            if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
                h_abs *= MIN_FACTOR
                if h_abs < min_step:
                    raise IntegrationError("non-finite state", x)
                continue
            if err < 1.0:
                factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err**ERR_EXPONENT)
                steps.append(Step(x, x_new - x, y, y_new, K, M, F))
                err_total += est
                last_h = h_abs
                x = x_new
                y = y_new
                h_abs = h_abs * factor
                break
            h_abs *= max(MIN_FACTOR, SAFETY * err**ERR_EXPONENT)
    return y, last_h, err_total
