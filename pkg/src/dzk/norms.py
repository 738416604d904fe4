"""
Iterated Lebesgue norms over (x, y, z, t) and the composite norms built on them.

A norm is written outer stage first, e.g. ``"Linf:x | L2:y,z,t"`` for
sup over x of the joint L^2 norm in (y, z, t). Space integrals use the
rectangle rule on the periodic box, time integrals the trapezoid rule on the
time grid, and L^inf stages take the maximum over samples.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.fft as sfft

from .field import FieldSeries, Grid3, ScalarField, fft3
from .propagators import bessel_symbol, partial_symbol, riesz_symbol

__all__ = [
    "MixedNormSpec",
    "NormValue",
    "parse_norm",
    "mixed_norm",
    "sobolev_norm",
    "tilde_h2_norm",
    "x_T_norm",
    "contraction_norm",
    "DEFAULT_EPSILON",
]

DEFAULT_EPSILON = 0.05
AXIS_POS = {"t": 0, "x": 1, "y": 2, "z": 3}
INF = float("inf")


@dataclass(frozen=True)
class MixedNormSpec:
    """Ordered stages ``((axes, p), ...)``, outermost first."""

    stages: tuple

    def __post_init__(self):
        seen = []
        norm = []
        for axes, p in self.stages:
            axes = tuple(axes)
            if not axes:
                raise ValueError("empty stage")
            for a in axes:
                if a not in AXIS_POS:
                    raise ValueError(f"unknown axis {a!r}")
                if a in seen:
                    raise ValueError(f"axis {a!r} covered twice")
                seen.append(a)
            p = float(p)
            if not (p >= 1):
                raise ValueError(f"exponent {p} outside [1, inf]")
            norm.append((axes, p))
        object.__setattr__(self, "stages", tuple(norm))

    @property
    def axes(self) -> set:
        return {a for axes, _ in self.stages for a in axes}

    def __str__(self) -> str:
        def fmt(p):
            if p == INF:
                return "inf"
            fr = Fraction(p).limit_denominator(64)
            return str(fr.numerator) if fr.denominator == 1 else f"{fr.numerator}/{fr.denominator}"

        return " | ".join(f"L{fmt(p)}:{','.join(axes)}" for axes, p in self.stages)


def parse_norm(text: str) -> MixedNormSpec:
    """Parse ``"Linf:x | L2:y,z,t"``; exponents may be fractions such as ``L8/3``."""
    stages = []
    for chunk in text.split("|"):
        chunk = chunk.strip()
        if not chunk.startswith("L") or ":" not in chunk:
            raise ValueError(f"malformed stage {chunk!r}")
        exp, axes = chunk[1:].split(":", 1)
        exp = exp.strip().lower()
        p = INF if exp in ("inf", "infty", "oo") else float(Fraction(exp))
        stages.append((tuple(a.strip() for a in axes.split(",") if a.strip()), p))
    return MixedNormSpec(tuple(stages))


@dataclass(frozen=True)
class NormValue:
    value: float
    spec: object
    horizon: float | None = None
    epsilon: float | None = None
    terms: dict = field(default_factory=dict, repr=False, compare=False)

    def __float__(self) -> float:
        return self.value


def _reduce(a: np.ndarray, weights: dict, stages) -> float:
    """Apply stages innermost first to a nonnegative array.

    ``weights`` maps an axis position of ``a`` to a 1-D quadrature weight vector.
    """
    for axes, p in reversed(stages):
        pos = tuple(axes)
        if p == INF:
            a = np.max(a, axis=pos, keepdims=True)
            continue
        w = np.ones((1,) * a.ndim)
        for ax in pos:
            shape = [1] * a.ndim
            shape[ax] = -1
            w = w * weights[ax].reshape(shape)
        a = np.sum(w * a**p, axis=pos, keepdims=True) ** (1.0 / p)
    return float(a.reshape(-1)[0])


def _weights(grid: Grid3, series: FieldSeries) -> dict:
    dx, dy, dz = grid.spacing
    w = {
        1: np.full(grid.nx, dx),
        2: np.full(grid.ny, dy),
        3: np.full(grid.nz, dz),
    }
    if series.timegrid is not None:
        w[0] = series.timegrid.trapezoid_weights()
    else:
        w[0] = np.ones(1)
    return w


def _check_cover(spec: MixedNormSpec, has_time: bool) -> None:
    need = {"x", "y", "z"} | ({"t"} if has_time else set())
    if "t" in spec.axes and not has_time:
        raise ValueError("norm covers t but the series has a single frame")
    missing = need - spec.axes
    if missing:
        raise ValueError(f"norm does not cover axes {sorted(missing)}")


def mixed_norm(series, spec) -> NormValue:
    """Iterated norm of a :class:`FieldSeries` (or a single :class:`ScalarField`)."""
    if isinstance(series, ScalarField):
        series = FieldSeries.static(series)
    if isinstance(spec, str):
        spec = parse_norm(spec)
    has_time = series.nt > 1
    _check_cover(spec, has_time)
    stages = [(tuple(AXIS_POS[a] for a in axes), p) for axes, p in spec.stages]
    value = _reduce(np.abs(series.data), _weights(series.grid, series), stages)
    horizon = series.timegrid.t_end if series.timegrid is not None else None
    return NormValue(value, spec, horizon)


def sobolev_norm(f: ScalarField, s: float) -> NormValue:
    """``(sum (1 + |xi|^2)^s |f_hat|^2 / V)^(1/2)``."""
    g = f.grid
    weight = bessel_symbol(g, 2 * s)
    F = fft3(f.values)
    value = np.sqrt(g.cell_volume * np.sum(weight * np.abs(F) ** 2) / F.size)
    return NormValue(float(value), f"H^{s}")


def _multi_indices(order: int) -> list:
    return [a for a in itertools.product(range(order + 1), repeat=3) if sum(a) == order]


def _spectral_l2_sq(grid: Grid3, F: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Squared L^2 norm per leading index of the field with raw FFT ``F`` times ``symbol``."""
    n = grid.nx * grid.ny * grid.nz
    return grid.cell_volume / n * np.sum(np.abs(symbol * F) ** 2, axis=(-3, -2, -1))


def tilde_h2_norm(f: ScalarField) -> NormValue:
    """H^2 norm with the half-derivative terms ``D_x^(1/2) d^a f``, ``D_y^(1/2) d^a f`` (|a| = 2)."""
    g = f.grid
    F = fft3(f.values)
    total = sobolev_norm(f, 2).value ** 2
    for alpha in _multi_indices(2):
        d = partial_symbol(g, alpha)
        for axis in ("x", "y"):
            total += float(_spectral_l2_sq(g, F, riesz_symbol(g, 0.5, axis) * d))
    return NormValue(float(np.sqrt(total)), "tilde H^2")


class _BundleEvaluator:
    """Shared machinery for the Strichartz bundle and the contraction norm.

    Holds the raw spectrum of a series and evaluates norms whose innermost
    stage is L^2 in z from the z-profile obtained by Parseval in z.
    """

    def __init__(self, series: FieldSeries):
        if series.timegrid is None or series.nt < 2:
            raise ValueError("space-time norms need a series with a time grid")
        self.series = series
        self.grid = series.grid
        self.F = fft3(series.data)
        dx, dy, _ = self.grid.spacing
        self.wt = series.timegrid.trapezoid_weights()
        self.wx = np.full(self.grid.nx, dx)
        self.wy = np.full(self.grid.ny, dy)

    def z_profile(self, symbol: np.ndarray) -> np.ndarray:
        """``||(symbol f_hat)^vee (t, x, y, .)||_{L^2_z}`` with shape (nt, nx, ny)."""
        g = self.grid
        partial = sfft.ifftn(self.F * symbol, axes=(1, 2))
        return np.sqrt(g.lz / g.nz**2 * np.sum(np.abs(partial) ** 2, axis=-1))

    def _w(self):
        return {0: self.wt, 1: self.wx, 2: self.wy}

    def l4_xyt(self, P: np.ndarray) -> float:
        return _reduce(P, self._w(), [((0, 1, 2), 4.0)])

    def l83_t_l8_xy(self, P: np.ndarray) -> float:
        return _reduce(P, self._w(), [((0,), 8.0 / 3.0), ((1, 2), 8.0)])

    def smoothing(self, P: np.ndarray, axis: str) -> float:
        # L^inf in one transverse axis, joint L^2 over the other, z and t
        if axis == "x":
            return _reduce(P, self._w(), [((1,), INF), ((0, 2), 2.0)])
        return _reduce(P, self._w(), [((2,), INF), ((0, 1), 2.0)])

    def maximal(self, axis: str) -> float:
        g = self.grid
        A = np.abs(self.series.data)
        if axis == "x":
            sup = np.max(A, axis=(0, 2, 3))
            return float(np.sqrt(g.spacing[0] * np.sum(sup**2)))
        sup = np.max(A, axis=(0, 1, 3))
        return float(np.sqrt(g.spacing[1] * np.sum(sup**2)))

    def strichartz_terms(self, eps: float) -> dict:
        g = self.grid
        terms = {}
        dx_half = riesz_symbol(g, 0.5, "x")
        for alpha in _multi_indices(1):
            d = partial_symbol(g, alpha)
            terms[f"J_z^(1/4+)D_x^(1/2)d{alpha} L4xyT L2z"] = self.l4_xyt(
                self.z_profile(bessel_symbol(g, 0.25 + eps, "z") * dx_half * d))
            terms[f"J_z^(3/8+)d{alpha} L8/3T L8xy L2z"] = self.l83_t_l8_xy(
                self.z_profile(bessel_symbol(g, 0.375 + eps, "z") * d))
            terms[f"J_z^(1/2+)d{alpha} L4xyT L2z"] = self.l4_xyt(
                self.z_profile(bessel_symbol(g, 0.5 + eps, "z") * d))
        for alpha in [(0, 0, 0)] + _multi_indices(1):
            for name, e in (("x", (1, 0, 0)), ("y", (0, 1, 0))):
                beta = tuple(a + b for a, b in zip(alpha, e))
                terms[f"d_{name}d{alpha} L4xyT L2z"] = self.l4_xyt(
                    self.z_profile(partial_symbol(g, beta)))
        return terms

    def contraction_extra_terms(self) -> dict:
        g = self.grid
        terms = {}
        h2 = bessel_symbol(g, 2.0)
        terms["LinfT H2"] = float(np.sqrt(np.max(_spectral_l2_sq(g, self.F, h2))))
        for alpha in _multi_indices(2):
            d = partial_symbol(g, alpha)
            for axis in ("x", "y"):
                sym = riesz_symbol(g, 0.5, axis) * d
                terms[f"D_{axis}^(1/2)d{alpha} LinfT L2"] = float(
                    np.sqrt(np.max(_spectral_l2_sq(g, self.F, sym))))
        terms["L2x LinfyzT"] = self.maximal("x")
        terms["L2y LinfxzT"] = self.maximal("y")
        for alpha in _multi_indices(2):
            for axis, e in (("x", (1, 0, 0)), ("y", (0, 1, 0))):
                beta = tuple(a + b for a, b in zip(alpha, e))
                terms[f"d_{axis}d{alpha} Linf{axis} L2"] = self.smoothing(
                    self.z_profile(partial_symbol(g, beta)), axis)
        return terms


def x_T_norm(series: FieldSeries, epsilon: float = DEFAULT_EPSILON) -> NormValue:
    """Sum of the Strichartz-type norms; ``epsilon`` instantiates the ``+`` exponents."""
    terms = _BundleEvaluator(series).strichartz_terms(epsilon)
    return NormValue(float(sum(terms.values())), "X_T", series.timegrid.t_end, epsilon, terms)


def contraction_norm(series: FieldSeries, epsilon: float = DEFAULT_EPSILON) -> NormValue:
    """Norm of the fixed-point space: X_T plus energy, smoothing and maximal terms."""
    ev = _BundleEvaluator(series)
    terms = ev.strichartz_terms(epsilon)
    terms.update(ev.contraction_extra_terms())
    return NormValue(float(sum(terms.values())), "contraction", series.timegrid.t_end, epsilon, terms)
