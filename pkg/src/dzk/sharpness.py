"""
Growth of the maximal function on frequency-dilated data.

For ``E0_k`` with transform ``theta_hat(|xi| / 2^k)`` the free solution
stays coherent on the window

    |x| <= d 2^-k,  y, z in [d 2^-k / 2, 2 d 2^-k],  t in [d 2^-2k / 2, 2 d 2^-2k],

so ``||U(t) E0_k||_{L^2_x L^inf_{yzt}}`` grows like ``2^(5k/2)`` while
``||E0_k||_{H^s}`` grows like ``2^(3k/2 + ks)``. The windows are far below the
grid spacing, so the solution is evaluated there as a trigonometric
polynomial by a separable (per-axis) DFT.
"""
from __future__ import annotations

import numpy as np

from .families import dyadic_theta
from .field import Grid3, ScalarField, make_grid, spectral_array
from .norms import sobolev_norm
from .reports import SlopeFit, fit_slope

__all__ = ["DEFAULT_DELTA", "default_grid", "evaluate_at", "window_maximal", "counterexample_growth"]

DEFAULT_DELTA = 0.1


def default_grid() -> Grid3:
    """128^3 on a box of side pi: wavenumbers are the even integers up to 126."""
    return make_grid(128, 128, 128, np.pi, np.pi, np.pi)


def evaluate_at(f: ScalarField, xs, ys, zs, t: float) -> np.ndarray:
    """``U(t) f`` at the tensor-product points ``xs x ys x zs`` (any real coordinates)."""
    g = f.grid
    kx, ky, kz = (k.reshape(-1) for k in g.wavenumbers())
    F = spectral_array(g, f.values)
    A = F * np.exp(-1j * t * (kx[:, None, None] ** 2 + ky[None, :, None] ** 2 + kz[None, None, :]))
    Ex = np.exp(1j * np.outer(np.asarray(xs, float), kx))
    Ey = np.exp(1j * np.outer(np.asarray(ys, float), ky))
    Ez = np.exp(1j * np.outer(np.asarray(zs, float), kz))
    out = np.tensordot(Ex, A, axes=(1, 0))
    out = np.tensordot(out, Ey, axes=(1, 1))
    out = np.tensordot(out, Ez, axes=(1, 1))
    return out / g.volume


def window_maximal(f: ScalarField, k: int, delta: float = DEFAULT_DELTA,
                   samples: tuple = (17, 9, 9, 9)) -> float:
    """``L^2_x`` (trapezoid) of the maximum of ``|U(t) f|`` over the sampled (y, z, t) window."""
    nxs, nys, nzs, nts = samples
    a = delta * 2.0**-k
    xs = np.linspace(-a, a, nxs)
    ys = np.linspace(a / 2, 2 * a, nys)
    zs = np.linspace(a / 2, 2 * a, nzs)
    ts = np.linspace(delta * 4.0**-k / 2, 2 * delta * 4.0**-k, nts)
    sup = np.zeros(nxs)
    for t in ts:
        sup = np.maximum(sup, np.abs(evaluate_at(f, xs, ys, zs, t)).max(axis=(1, 2)))
    return float(np.sqrt(np.trapezoid(sup**2, xs)))


def counterexample_growth(s: float, k_list=(2, 3, 4, 5), grid: Grid3 | None = None,
                          delta: float = DEFAULT_DELTA, samples: tuple = (17, 9, 9, 9)) -> SlopeFit:
    """Slope of ``log2`` of the windowed maximal norm against k.

    ``extras`` holds the fits of ``log2(LHS / ||E0_k||_{H^s})`` (``ratio_fit``),
    ``log2(LHS / ||E0_k||_{L^2})`` (``ratio_h0_fit``) and ``log2 ||E0_k||_{H^s}``
    (``hs_fit``).
    """
    grid = default_grid() if grid is None else grid
    k_list = [int(k) for k in k_list]
    lhs, hs, h0 = [], [], []
    for k in k_list:
        f = dyadic_theta(grid, k)
        lhs.append(window_maximal(f, k, delta, samples))
        hs.append(sobolev_norm(f, s).value)
        h0.append(f.l2_norm())
    lhs, hs, h0 = map(np.asarray, (lhs, hs, h0))
    params = {"s": s, "delta": delta, "k_list": k_list}
    fit = fit_slope(k_list, np.log2(lhs), "counterexample LHS", params)
    fit.extras.update({
        "ratio_fit": fit_slope(k_list, np.log2(lhs / hs), f"counterexample ratio to H^{s:g}", params),
        "ratio_h0_fit": fit_slope(k_list, np.log2(lhs / h0), "counterexample ratio to L2", params),
        "hs_fit": fit_slope(k_list, np.log2(hs), f"H^{s:g} norm growth", params),
    })
    return fit
