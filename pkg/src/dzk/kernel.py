"""
The frequency-localized kernel of the Schrodinger-transport group.

    J(x, t) = J1(x1, t) J2(x2, t) J3(x3, t),
    Ji(s, t) = int exp(i(-t xi^2 + s xi)) psi(2^(k+1) - |xi|) dxi   (i = 1, 2)
    J3(s, t) = int exp(i(s - t) xi) psi(2^(k+1) - |xi|) dxi

The integrands are even in xi, so each factor is twice an integral over
[0, R], R = 2^(k+1). Quadrature is composite Gauss-Legendre on unit-aligned
panels, doubled until two successive values agree.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .propagators import smooth_step
from .reports import RatioReport, SlopeFit, fit_slope

__all__ = [
    "KernelQuadratureError",
    "cutoff_integral",
    "transverse_factor",
    "transport_factor",
    "kernel",
    "kernel_envelope",
    "kernel_tail_fit",
    "MAX_LEVEL",
]

MAX_LEVEL = 6
RTOL = 1e-6
GL_ORDER = 16
MAX_PANELS_PER_UNIT = 1 << 14


class KernelQuadratureError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def _gauss(order: int):
    return np.polynomial.legendre.leggauss(order)


def _check_level(k: int) -> int:
    if int(k) != k or not 0 <= k <= MAX_LEVEL:
        raise ValueError(f"level k={k} outside 0..{MAX_LEVEL}")
    return int(k)


def _panel_sum(fn, R: int, per_unit: int) -> complex:
    nodes, weights = _gauss(GL_ORDER)
    edges = np.linspace(0.0, R, R * per_unit + 1)
    a, b = edges[:-1, None], edges[1:, None]
    xi = 0.5 * (a + b) + 0.5 * (b - a) * nodes
    w = 0.5 * (b - a) * weights
    return complex(np.sum(w * fn(xi)))


def _adaptive(fn, R: int, rate: float, scale: float) -> complex:
    """Double the panel density until successive sums agree to ``RTOL``.

    ``rate`` bounds the phase speed of the integrand; ``scale`` sets the
    absolute floor for values that cancel to nearly zero.
    """
    per_unit = max(2, int(np.ceil(rate / np.pi)) + 1)
    prev = _panel_sum(fn, R, per_unit)
    while per_unit <= MAX_PANELS_PER_UNIT:
        per_unit *= 2
        cur = _panel_sum(fn, R, per_unit)
        if abs(cur - prev) <= RTOL * abs(cur) + 1e-13 * scale:
            return cur
        prev = cur
    raise KernelQuadratureError(f"kernel quadrature did not converge (rate={rate:g})")


def cutoff_integral(k: int) -> float:
    """``int psi(2^(k+1) - |xi|) dxi = 2^(k+2) - 1``, from the symmetry of the step."""
    return 2.0 ** (_check_level(k) + 2) - 1.0


def transverse_factor(s: float, t: float, k: int) -> complex:
    """``J1(s, t)`` (equivalently ``J2``)."""
    R = 2 ** (_check_level(k) + 1)

    def fn(xi):
        return 2.0 * np.cos(s * xi) * np.exp(-1j * t * xi**2) * smooth_step(R - xi)

    return _adaptive(fn, R, abs(s) + 2 * abs(t) * R, cutoff_integral(k))


def transport_factor(s: float, t: float, k: int) -> complex:
    """``J3(s, t)``: the cutoff's transform evaluated at ``s - t``."""
    R = 2 ** (_check_level(k) + 1)

    def fn(xi):
        return 2.0 * np.cos((s - t) * xi) * smooth_step(R - xi) + 0j

    return _adaptive(fn, R, abs(s - t), cutoff_integral(k))


def kernel(x, t: float, k: int) -> complex:
    x1, x2, x3 = x
    return transverse_factor(x1, t, k) * transverse_factor(x2, t, k) * transport_factor(x3, t, k)


def _envelope_rhs(k: int, x1: float) -> float:
    return 2.0 ** (3 * k) * min(1.0, abs(x1) ** -2.0) if x1 != 0 else 2.0 ** (3 * k)


def kernel_envelope(k: int, T: float, x1_list, t_list, x2_list=None) -> RatioReport:
    """``sup_{x2, x3} |J(x, t)|`` against ``2^(3k) min(1, |x1|^-2)`` at each ``(x1, t)``.

    The supremum over ``x3`` is attained at ``x3 = t``; the supremum over
    ``x2`` is taken over ``x2_list`` (default: 33 points spanning the
    stationary region ``[0, 2^(k+3) T]``). ``extras["C_fit"]`` is the largest
    ratio; ``extras["H_integral"]`` is the integral over ``rho >= 0`` of the
    fitted envelope ``C_fit 2^(3k) min(1, rho^-2)``.
    """
    k = _check_level(k)
    t_list = [float(t) for t in t_list]
    if any(abs(t) > T for t in t_list):
        raise ValueError("sample times must satisfy |t| <= T")
    if x2_list is None:
        x2_list = np.linspace(0.0, 2.0 ** (k + 3) * T, 33)
    rep = RatioReport("kernel-envelope", {"k": k, "T": T}, "pointwise samples")
    for t in t_list:
        s2 = max(abs(transverse_factor(float(x2), t, k)) for x2 in x2_list)
        s3 = abs(transport_factor(t, t, k))
        for x1 in x1_list:
            lhs = abs(transverse_factor(float(x1), t, k)) * s2 * s3
            rep.add(f"x1={float(x1):.6g},t={t:.6g}", lhs, _envelope_rhs(k, float(x1)))
    c_fit = rep.max_ratio
    origin = abs(kernel((0.0, 0.0, 0.0), 0.0, k))
    rep.extras.update({
        "C_fit": c_fit,
        "H_integral": 2.0 * c_fit * 2.0 ** (3 * k),
        "origin_value": origin,
        "origin_closed_form": cutoff_integral(k) ** 3,
    })
    return rep


def kernel_tail_fit(k: int, x1_list=None, t: float = 0.0) -> SlopeFit:
    """Log-log slope of the decreasing envelope of ``|J(x1, 0, 0, t)|`` in ``x1``.

    The envelope at ``x1`` is the largest sampled value at or beyond ``x1``,
    which removes the zeros of the oscillating factor.
    """
    k = _check_level(k)
    if x1_list is None:
        x1_list = np.geomspace(1.0, 100.0, 41)
    x1 = np.asarray(x1_list, dtype=float)
    vals = np.array([abs(kernel((s, 0.0, t), t, k)) for s in x1])
    env = np.maximum.accumulate(vals[::-1])[::-1]
    fit = fit_slope(np.log2(x1), np.log2(env), f"kernel tail k={k}", {"k": k, "t": t})
    fit.extras["raw_slope"] = float(np.polyfit(np.log2(x1), np.log2(vals), 1)[0])
    return fit
