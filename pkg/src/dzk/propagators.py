"""
Linear flows and fractional operators as Fourier multipliers.

The Schrodinger-transport group has symbol ``exp(-i t (xi1^2 + xi2^2 + xi3))``;
the wave propagators act only through the transverse radius
``r = (xi1^2 + xi2^2)^(1/2)``.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np
from scipy.special import expit

from .field import (
    FieldSeries,
    Grid3,
    ScalarField,
    TimeGrid,
    fft3,
    ifft3,
)

__all__ = [
    "smooth_step",
    "schrodinger_symbol",
    "schrodinger_group",
    "schrodinger_evolve",
    "schrodinger_duhamel",
    "wave_sine",
    "wave_cosine",
    "wave_sine_symbol",
    "wave_cosine_symbol",
    "riesz_derivative",
    "riesz_symbol",
    "bessel_potential",
    "bessel_symbol",
    "perp_sqrt_laplacian",
    "perp_radius",
    "partial_symbol",
    "dyadic_symbol",
    "dyadic_projection",
    "cube_cutoff",
]

AXES = {"x": 0, "y": 1, "z": 2}


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, ``s(x)/(s(x)+s(1-x))`` between.

    Here ``s(x) = exp(-1/x)``. The identity ``smooth_step(x) + smooth_step(1-x) = 1``
    holds for every x.
    """
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1, 1.0, 0.0)
    inner = (x > 0) & (x < 1)
    if np.any(inner):
        xi = x[inner]
        out[inner] = expit(1.0 / (1.0 - xi) - 1.0 / xi)
    return out if out.ndim else float(out)


def _apply(f: ScalarField, symbol: np.ndarray) -> ScalarField:
    if not np.all(np.isfinite(symbol)):
        raise ValueError("multiplier is not finite on the grid")
    return ScalarField(f.grid, ifft3(fft3(f.values) * symbol))


def _axis(axis) -> int:
    try:
        return AXES[axis] if isinstance(axis, str) else int(axis)
    except KeyError:
        raise ValueError(f"unknown axis {axis!r}") from None


def dispersion(grid: Grid3) -> np.ndarray:
    kx, ky, kz = grid.wavenumbers()
    return kx**2 + ky**2 + kz


def perp_radius(grid: Grid3) -> np.ndarray:
    kx, ky, _ = grid.wavenumbers()
    return np.broadcast_to(np.sqrt(kx**2 + ky**2), grid.shape)


def schrodinger_symbol(grid: Grid3, t: float) -> np.ndarray:
    return np.exp(-1j * t * dispersion(grid))


def schrodinger_group(f: ScalarField, t: float) -> ScalarField:
    """Apply the unitary group at time ``t``."""
    return _apply(f, schrodinger_symbol(f.grid, t))


def schrodinger_evolve(f: ScalarField, timegrid: TimeGrid) -> FieldSeries:
    """Free evolution sampled on every node of ``timegrid``; frame 0 is ``f`` itself."""
    grid = f.grid
    fh = fft3(f.values)
    omega = dispersion(grid)
    data = np.empty((timegrid.nt, *grid.shape), dtype=complex)
    data[0] = f.values
    for j, t in enumerate(timegrid.nodes[1:], start=1):
        data[j] = ifft3(fh * np.exp(-1j * t * omega))
    return FieldSeries(grid, timegrid, data)


def schrodinger_duhamel(G: FieldSeries) -> FieldSeries:
    """``u(t_j) = int_0^{t_j} U(t_j - s) G(s) ds`` on the nodes of ``G``.

    The phase is integrated in the interaction picture ``U(-s) G(s)`` and the
    cumulative Simpson weights of the time grid are applied to it.
    """
    grid, tg = G.grid, G.timegrid
    W = tg.cumulative_simpson()
    omega = dispersion(grid)
    t = tg.nodes
    acc = np.zeros((tg.nt, *grid.shape), dtype=complex)
    for i in range(tg.nt):
        col = W[:, i]
        if not np.any(col):
            continue
        h = np.exp(1j * t[i] * omega) * fft3(G.data[i])
        for j in np.nonzero(col)[0]:
            acc[j] += col[j] * h
    for j in range(tg.nt):
        acc[j] = ifft3(acc[j] * np.exp(-1j * t[j] * omega))
    return FieldSeries(grid, tg, acc)


def wave_sine_symbol(grid: Grid3, t: float) -> np.ndarray:
    """``t sinc(t r)``: the removable singularity at r = 0 evaluates to ``t``."""
    r = perp_radius(grid)
    return t * np.sinc(t * r / np.pi)


def wave_cosine_symbol(grid: Grid3, t: float) -> np.ndarray:
    return np.cos(t * perp_radius(grid))


def wave_sine(f: ScalarField, t: float) -> ScalarField:
    """``(-Lap_perp)^(-1/2) sin((-Lap_perp)^(1/2) t) f``."""
    return _apply(f, wave_sine_symbol(f.grid, t))


def wave_cosine(f: ScalarField, t: float) -> ScalarField:
    return _apply(f, wave_cosine_symbol(f.grid, t))


def riesz_symbol(grid: Grid3, s: float, axis) -> np.ndarray:
    if s < 0:
        raise ValueError(f"negative order s={s} is singular at the zero mode")
    k = grid.wavenumbers()[_axis(axis)]
    return np.broadcast_to(np.abs(k) ** s, grid.shape)


def riesz_derivative(f: ScalarField, s: float, axis="x") -> ScalarField:
    """Per-axis Riesz derivative with symbol ``|xi_axis|^s``."""
    return _apply(f, riesz_symbol(f.grid, s, axis))


def bessel_symbol(grid: Grid3, s: float, axes: Iterable = ("x", "y", "z")) -> np.ndarray:
    k = grid.wavenumbers()
    sq = sum(k[_axis(a)] ** 2 for a in axes)
    return np.broadcast_to((1.0 + sq) ** (s / 2), grid.shape)


def bessel_potential(f: ScalarField, s: float, axes: Iterable = ("x", "y", "z")) -> ScalarField:
    """Bessel potential ``(1 + |xi_axes|^2)^(s/2)`` over the listed axes."""
    return _apply(f, bessel_symbol(f.grid, s, axes))


def perp_sqrt_laplacian(f: ScalarField) -> ScalarField:
    return _apply(f, perp_radius(f.grid))


def partial_symbol(grid: Grid3, alpha) -> np.ndarray:
    """Symbol of ``d^alpha`` for a multi-index ``alpha = (a1, a2, a3)``."""
    kx, ky, kz = grid.wavenumbers()
    a1, a2, a3 = alpha
    return np.broadcast_to((1j * kx) ** a1 * (1j * ky) ** a2 * (1j * kz) ** a3, grid.shape)


def cube_cutoff(grid: Grid3, k: int) -> np.ndarray:
    """``prod_i psi(2^(k+1) - |xi_i|)``: 1 on the cube ``|xi_i| <= 2^(k+1) - 1``."""
    edge = 2.0 ** (k + 1)
    kx, ky, kz = grid.wavenumbers()
    return smooth_step(edge - np.abs(kx)) * smooth_step(edge - np.abs(ky)) * smooth_step(edge - np.abs(kz))


def dyadic_symbol(grid: Grid3, k: int) -> np.ndarray:
    """Shell weight for level ``k``; the weights over all ``k`` sum to one.

    Level 0 is the cube cutoff itself; level ``k >= 1`` is the difference of
    the cutoffs at levels ``k`` and ``k - 1``.
    """
    if int(k) != k or k < 0:
        raise ValueError(f"dyadic index k={k} must be a nonnegative integer")
    k = int(k)
    outer = cube_cutoff(grid, k)
    if k == 0:
        return outer
    return np.clip(outer - cube_cutoff(grid, k - 1), 0.0, None)


def dyadic_projection(f: ScalarField, k: int, power: int = 1) -> ScalarField:
    """``B_k`` (``power=1``, symbol ``sqrt(shell)``) or ``B_k^2`` (``power=2``)."""
    w = dyadic_symbol(f.grid, k)
    return _apply(f, np.sqrt(w) if power == 1 else w ** (power / 2))
