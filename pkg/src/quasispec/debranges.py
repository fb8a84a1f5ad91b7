"""De Branges function ``E(z, c) = phi_z(c) + i phi_z^[1](c)`` and its reproducing kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coefficients import CoefficientSet, EnergyPoint
from .quasi_ode import DEFAULT_ATOL, DEFAULT_RTOL, SolutionTrace, gauss_quadrature, integrate_columns, merged_mesh
from .spectral import SpectralMeasure, as_angle

__all__ = [
    "DeBrangesSample",
    "KernelSample",
    "ElagResult",
    "e_function",
    "kernel",
    "elag_check",
    "elag_defect",
    "embedding_defect",
    "EmbeddingResult",
]


@dataclass(frozen=True)
class DeBrangesSample:
    c: float
    z: complex
    E: complex


@dataclass(frozen=True)
class KernelSample:
    c: float
    zeta: complex
    z: complex
    K: complex


def _check_point(c: CoefficientSet, cpt: float) -> float:
    cpt = float(cpt)
    if not c.a < cpt < c.b:
        raise ValueError(f"point {cpt} not inside ({c.a}, {c.b})")
    return cpt


def _phi_trace(c, z, cpt, phi_a, rtol, atol) -> SolutionTrace:
    angle = as_angle(phi_a)
    y0 = np.array([math.sin(angle), math.cos(angle)], dtype=complex)
    return SolutionTrace(integrate_columns(c, complex(z), c.a, y0, cpt, rtol=rtol, atol=atol), 0)


def e_function(c: CoefficientSet, z, cpt: float, phi_a=0.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> DeBrangesSample:
    cpt = _check_point(c, cpt)
    z = complex(z.z if isinstance(z, EnergyPoint) else z)
    st = _phi_trace(c, z, cpt, phi_a, rtol, atol).end_state()
    return DeBrangesSample(cpt, z, complex(st.f + 1j * st.f_quasi))


def _pair_integral(c: CoefficientSet, u: SolutionTrace, v: SolutionTrace, cpt: float) -> complex:
    """``int_a^cpt u conj(v) r dx`` along the two traces."""

    def integrand(xs):
        return u(xs)[0] * np.conj(v(xs)[0]) * c.r(xs)

    return gauss_quadrature(integrand, merged_mesh([u, v], c.a, cpt, c))


def kernel(
    c: CoefficientSet,
    zeta,
    z,
    cpt: float,
    phi_a=0.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> KernelSample:
    """``K(zeta, z, c) = int_a^c phi_z conj(phi_zeta) r dx`` by quadrature along both traces."""
    cpt = _check_point(c, cpt)
    zeta, z = complex(zeta), complex(z)
    u = _phi_trace(c, z, cpt, phi_a, rtol, atol)
    v = u if zeta == z else _phi_trace(c, zeta, cpt, phi_a, rtol, atol)
    return KernelSample(cpt, zeta, z, _pair_integral(c, u, v, cpt))


@dataclass(frozen=True)
class ElagResult:
    lhs: complex
    kernel: complex
    defect: float
    scale: float


def elag_check(
    c: CoefficientSet,
    zeta,
    z,
    cpt: float,
    phi_a=0.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    guard: float = 1e-10,
) -> ElagResult:
    """Compare the kernel integral with its closed form through ``E``.

    ``(E(z) conj E(zeta) - E(conj zeta) conj E(conj z)) / (2i (conj zeta - z))``
    must equal ``K(zeta, z, c)``.  ``scale`` is the size of the terms in the
    numerator over the denominator, for relative comparisons.
    """
    cpt = _check_point(c, cpt)
    zeta, z = complex(zeta), complex(z)
    denom = 2j * (zeta.conjugate() - z)
    if abs(denom) < guard * (1.0 + abs(z) + abs(zeta)):
        raise ZeroDivisionError("conj(zeta) - z too small for the identity to be evaluated")
    traces = {}
    for w in {z, zeta, z.conjugate(), zeta.conjugate()}:
        traces[w] = _phi_trace(c, w, cpt, phi_a, rtol, atol)

    def E(w):
        st = traces[w].end_state()
        return st.f + 1j * st.f_quasi

    t1 = E(z) * np.conj(E(zeta))
    t2 = E(zeta.conjugate()) * np.conj(E(z.conjugate()))
    lhs = (t1 - t2) / denom
    K = _pair_integral(c, traces[z], traces[zeta], cpt)
    scale = max(abs(t1), abs(t2)) / abs(denom)
    return ElagResult(complex(lhs), complex(K), float(abs(lhs - K)), float(max(scale, abs(K))))


def elag_defect(c: CoefficientSet, zeta, z, cpt: float, phi_a=0.0, **kw) -> float:
    return elag_check(c, zeta, z, cpt, phi_a, **kw).defect


@dataclass(frozen=True)
class EmbeddingResult:
    inner_product: float
    measure_form: float
    defect: float


def embedding_defect(
    c: CoefficientSet,
    lam1: float,
    lam2: float,
    cpt: float,
    measure,
    phi_a=0.0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    full: bool = False,
):
    """Defect between ``K(lam1, lam2, c)`` and ``sum K(lam1, lam_n, c) K(lam2, lam_n, c) mu_n``.

    ``measure`` is a :class:`SpectralMeasure` (or :class:`Spectrum`) from the
    same boundary angle at ``a``; the sum runs over its window, so the
    defect shrinks as the window grows.
    """
    cpt = _check_point(c, cpt)
    spec = measure.spectrum if isinstance(measure, SpectralMeasure) else measure
    if spec is None or not spec.traces:
        raise ValueError("measure carries no eigenfunction traces")
    if not np.isclose(spec.angles[0], as_angle(phi_a)):
        raise ValueError("measure and phi_a use different boundary angles at a")
    u1 = _phi_trace(c, lam1, cpt, phi_a, rtol, atol)
    u2 = u1 if lam2 == lam1 else _phi_trace(c, lam2, cpt, phi_a, rtol, atol)
    direct = _pair_integral(c, u1, u2, cpt).real
    total = 0.0
    for trace, norm in zip(spec.traces, spec.norming):
        k1 = _pair_integral(c, u1, trace, cpt).real
        k2 = k1 if u2 is u1 else _pair_integral(c, u2, trace, cpt).real
        total += k1 * k2 / norm
    result = EmbeddingResult(float(direct), float(total), float(abs(direct - total)))
    return result if full else result.defect
