"""
Local solutions of the reduced Zakharov equation by Picard iteration.

The equation ``i(E_t + E_z) + Lap_perp E = n E`` with

    n(t) = N'(t) n0 + N(t) n1 + int_0^t N(t - s) Lap_perp |E(s)|^2 ds

is solved as the fixed point of

    Psi(E)(t) = U(t) E0 - i int_0^t U(t - s) (E n)(s) ds

on a uniform time grid. Time integrals use the cumulative Simpson weights of
the grid, the Schrodinger phase is integrated in the interaction picture and
every physical-space product is 2/3-dealiased.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .field import (
    FieldSeries,
    Grid3,
    ScalarField,
    TimeGrid,
    fft3,
    ifft3,
    make_timegrid,
)
from .norms import DEFAULT_EPSILON, contraction_norm, sobolev_norm, tilde_h2_norm
from .propagators import (
    dispersion,
    perp_radius,
    wave_cosine_symbol,
    wave_sine_symbol,
)

__all__ = [
    "InitialData",
    "SolverConfig",
    "IterationDiagnostics",
    "SolutionBundle",
    "ContractionError",
    "QuadratureError",
    "wave_forcing",
    "wave_duhamel",
    "picard_map",
    "solve_picard",
    "reconstruct_n",
    "reference_step",
    "mass",
    "boundary_fraction",
]

log = logging.getLogger(__name__)

IMAG_TOL = 1e-10
BOUNDARY_TOL = 1e-8


class ContractionError(RuntimeError):
    """The Picard iteration stopped contracting; use a shorter horizon or smaller data."""


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class InitialData:
    E0: ScalarField
    n0: ScalarField
    n1: ScalarField

    def __post_init__(self):
        g = self.E0.grid
        for name in ("n0", "n1"):
            f = getattr(self, name)
            if not f.grid.same_as(g):
                raise ValueError(f"{name} is on a different grid")
            if not f.is_real(1e-12):
                raise ValueError(f"{name} must be real-valued")

    @property
    def grid(self) -> Grid3:
        return self.E0.grid

    @property
    def dz_n1(self) -> ScalarField:
        kz = self.grid.wavenumbers()[2]
        return ScalarField(self.grid, ifft3(1j * kz * fft3(self.n1.values)).real)

    def norms(self) -> dict:
        return {
            "E0 tilde H2": tilde_h2_norm(self.E0).value,
            "n0 H2": sobolev_norm(self.n0, 2).value,
            "n1 H1": sobolev_norm(self.n1, 1).value,
            "dz n1 H1": sobolev_norm(self.dz_n1, 1).value,
        }

    def swapped_xy(self) -> "InitialData":
        return InitialData(self.E0.swapped_xy(), self.n0.swapped_xy(), self.n1.swapped_xy())


@dataclass(frozen=True)
class SolverConfig:
    T: float = 0.1
    nt: int = 17
    picard_tol: float = 1e-8
    max_iters: int = 30
    duhamel_quadrature_order: int = 4
    dealias_rule: str = "2/3"
    epsilon: float = DEFAULT_EPSILON
    max_halvings: int = 4
    reference_substeps: int = 8

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.nt < 9:
            raise ValueError("nt must be at least 9")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.duhamel_quadrature_order != 4:
            raise ValueError("only the order-4 (Simpson) Duhamel quadrature is implemented")
        if self.dealias_rule != "2/3":
            raise ValueError("only the 2/3 dealiasing rule is implemented")

    @property
    def timegrid(self) -> TimeGrid:
        return make_timegrid(self.T, self.nt)


@dataclass
class IterationDiagnostics:
    differences: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    residual: float = float("nan")
    mass_drift: float = float("nan")
    boundary_mass: float = float("nan")
    converged: bool = False
    iterations: int = 0
    halvings: int = 0
    achieved_T: float = float("nan")


@dataclass(frozen=True, eq=False)
class SolutionBundle:
    E: FieldSeries
    n: FieldSeries
    diagnostics: IterationDiagnostics
    config: SolverConfig


def _real(a: np.ndarray, what: str) -> np.ndarray:
    scale = max(float(np.max(np.abs(a))), 1.0)
    residue = float(np.max(np.abs(a.imag))) if np.iscomplexobj(a) else 0.0
    if residue > IMAG_TOL * scale:
        raise QuadratureError(f"{what} has imaginary residue {residue:.3e}")
    return np.real(a).copy()


def mass(E: ScalarField) -> float:
    """``||E||^2`` in L^2, conserved by the exact flow."""
    return float(E.grid.cell_volume * np.sum(np.abs(E.values) ** 2))


def boundary_fraction(grid: Grid3, values: np.ndarray, axes=("x", "y", "z")) -> float:
    """Share of ``|values|^2`` within 10% of the box boundary along any of ``axes``."""
    band = []
    for name, n in zip("xyz", grid.shape):
        idx = np.arange(n)
        w = max(1, int(np.ceil(0.1 * n)))
        band.append(((idx < w) | (idx >= n - w)) if name in axes else np.zeros(n, bool))
    mask = band[0][:, None, None] | band[1][None, :, None] | band[2][None, None, :]
    dens = np.abs(values) ** 2
    total = float(np.sum(dens))
    return float(np.sum(dens[..., mask]) / total) if total > 0 else 0.0


def wave_forcing(data: InitialData, t: float) -> ScalarField:
    """``F(t) = N'(t) n0 + N(t) n1``."""
    g = data.grid
    Fh = wave_cosine_symbol(g, t) * fft3(data.n0.values) + wave_sine_symbol(g, t) * fft3(data.n1.values)
    return ScalarField(g, _real(ifft3(Fh), "F(t)"))


class _WaveIntegrator:
    """Cumulative ``int_0^{t_j} N(t_j - s) Lap_perp Q(s) ds`` on a uniform grid.

    ``N(tau) Lap_perp`` has symbol ``-r sin(tau r)``; on a uniform grid it only
    depends on the lag ``j - i``.
    """

    def __init__(self, grid: Grid3, timegrid: TimeGrid):
        self.grid = grid
        self.timegrid = timegrid
        self.W = timegrid.cumulative_simpson()
        r = perp_radius(grid)
        self.lag = [-r * np.sin(d * timegrid.dt * r) for d in range(timegrid.nt)]

    def __call__(self, Qh: np.ndarray, upto: int | None = None) -> np.ndarray:
        nt = self.timegrid.nt if upto is None else upto + 1
        out = np.zeros((nt, *self.grid.shape), dtype=complex)
        for j in range(1, nt):
            for i in range(j + 1):
                w = self.W[j, i]
                if w:
                    out[j] += w * self.lag[j - i] * Qh[i]
        return out


def _density_hat(grid: Grid3, E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Dealiased truncation of E and the dealiased spectrum of |E|^2, per frame."""
    mask = grid.dealias_mask()
    Et = ifft3(fft3(E) * mask)
    Qh = fft3(np.abs(Et) ** 2) * mask
    return Et, Qh


def wave_duhamel(E: FieldSeries, t: float) -> ScalarField:
    """``L(t) = int_0^t N(t - s) Lap_perp |E(s)|^2 ds`` at a node ``t`` of ``E``'s time grid."""
    j = E.timegrid.index_of(t)
    grid = E.grid
    if j == 0:
        return ScalarField(grid, np.zeros(grid.shape))
    _, Qh = _density_hat(grid, E.data[: max(j + 1, 3)])
    if Qh.shape[0] < E.timegrid.nt:
        Qh = np.concatenate([Qh, np.zeros((E.timegrid.nt - Qh.shape[0], *grid.shape), complex)])
    Lh = _WaveIntegrator(grid, E.timegrid)(Qh, upto=j)[j]
    return ScalarField(grid, _real(ifft3(Lh), "L(t)"))


class _PicardContext:
    def __init__(self, data: InitialData, timegrid: TimeGrid):
        self.data = data
        self.grid = g = data.grid
        self.timegrid = timegrid
        self.t = timegrid.nodes
        self.omega = dispersion(g)
        self.W = timegrid.cumulative_simpson()
        self.waves = _WaveIntegrator(g, timegrid)
        n0h, n1h = fft3(data.n0.values), fft3(data.n1.values)
        self.Fh = np.stack([
            wave_cosine_symbol(g, t) * n0h + wave_sine_symbol(g, t) * n1h for t in self.t
        ])
        E0h = fft3(data.E0.values)
        linear = np.empty((timegrid.nt, *g.shape), dtype=complex)
        linear[0] = data.E0.values
        for j in range(1, timegrid.nt):
            linear[j] = ifft3(E0h * np.exp(-1j * self.t[j] * self.omega))
        self.linear = linear

    def density(self, E: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Dealiased E and the real field n = F + L, per frame."""
        g = self.grid
        Et, Qh = _density_hat(g, E)
        nh = (self.Fh + self.waves(Qh)) * g.dealias_mask()
        return Et, _real(ifft3(nh), "n")

    def apply(self, E: np.ndarray) -> np.ndarray:
        g = self.grid
        mask = g.dealias_mask()
        Et, n = self.density(E)
        Gh = -1j * fft3(Et * n) * mask
        acc = np.zeros_like(Gh)
        for i in range(self.timegrid.nt):
            col = self.W[:, i]
            h = np.exp(1j * self.t[i] * self.omega) * Gh[i]
            for j in np.nonzero(col)[0]:
                acc[j] += col[j] * h
        out = self.linear.copy()
        for j in range(1, self.timegrid.nt):
            out[j] += ifft3(acc[j] * np.exp(-1j * self.t[j] * self.omega))
        out[0] = self.data.E0.values
        return out


def picard_map(E: FieldSeries, data: InitialData, config: SolverConfig) -> FieldSeries:
    """One application of the Duhamel map; frame 0 is ``E0`` bit for bit."""
    tg = config.timegrid
    if not E.grid.same_as(data.grid):
        raise ValueError("grid mismatch between iterate and data")
    if E.timegrid is None or E.timegrid.nt != tg.nt or not np.isclose(E.timegrid.t_end, tg.t_end):
        raise ValueError("iterate is not on the configured time grid")
    ctx = _PicardContext(data, tg)
    return FieldSeries(data.grid, tg, ctx.apply(E.data))


def _series_mass_drift(grid: Grid3, data: np.ndarray) -> float:
    m = grid.cell_volume * np.sum(np.abs(data) ** 2, axis=(1, 2, 3))
    return float(np.max(np.abs(m - m[0])) / m[0]) if m[0] > 0 else 0.0


def _iterate(data: InitialData, config: SolverConfig) -> SolutionBundle:
    tg = config.timegrid
    ctx = _PicardContext(data, tg)
    grid = data.grid
    diag = IterationDiagnostics(achieved_T=config.T)

    def norm(a):
        return contraction_norm(FieldSeries(grid, tg, a), config.epsilon).value

    current = ctx.linear
    streak = 0
    for m in range(config.max_iters):
        nxt = ctx.apply(current)
        d = norm(nxt - current)
        diag.differences.append(d)
        if len(diag.differences) > 1 and diag.differences[-2] > 0:
            ratio = d / diag.differences[-2]
            diag.ratios.append(ratio)
            streak = streak + 1 if ratio >= 1 else 0
            if streak >= 3:
                raise ContractionError(
                    f"contraction ratio >= 1 for 3 iterations at T={config.T}; "
                    "shorten the horizon or reduce the data")
        log.debug("picard iteration %d: difference %.3e", m + 1, d)
        current = nxt
        diag.iterations = m + 1
        if d <= config.picard_tol:
            diag.converged = True
            break
    diag.residual = norm(current - ctx.apply(current))
    diag.mass_drift = _series_mass_drift(grid, current)
    diag.boundary_mass = max(boundary_fraction(grid, current[j]) for j in range(tg.nt))
    if diag.boundary_mass > BOUNDARY_TOL:
        warnings.warn(f"boundary mass fraction {diag.boundary_mass:.2e} exceeds {BOUNDARY_TOL:g}",
                      RuntimeWarning, stacklevel=3)
    _, n = ctx.density(current)
    E = FieldSeries(grid, tg, current)
    return SolutionBundle(E, FieldSeries(grid, tg, n), diag, config)


def solve_picard(data: InitialData, config: SolverConfig) -> SolutionBundle:
    """Iterate ``E <- Psi(E)`` from the free evolution until the step is below ``picard_tol``.

    When the iteration stops contracting the horizon is halved, at most
    ``config.max_halvings`` times; the achieved horizon is in the diagnostics.
    """
    cfg = config
    for halving in range(config.max_halvings + 1):
        try:
            bundle = _iterate(data, cfg)
        except ContractionError:
            if halving == config.max_halvings:
                raise
            cfg = replace(cfg, T=cfg.T / 2)
            log.info("no contraction; retrying with T=%g", cfg.T)
            continue
        bundle.diagnostics.halvings = halving
        return bundle
    raise AssertionError("unreachable")


def reconstruct_n(E: FieldSeries, data: InitialData, t: float) -> ScalarField:
    """``n(t) = F(t) + L(t)`` at a node ``t`` of ``E``'s time grid."""
    return ScalarField(E.grid, (wave_forcing(data, t).values + wave_duhamel(E, t).values).real)


def reference_step(data: InitialData, config: SolverConfig, nonlinear: bool = True,
                   substeps: int | None = None) -> FieldSeries:
    """Strang splitting of the coupled Schrodinger/wave system.

    The linear part advances E by the exact group and the Duhamel wave term
    ``L`` (with ``L_t = V``) by the exact free wave; the nonlinear part applies
    ``E <- exp(-i h n) E`` with ``n = F(t + h/2) + L`` and kicks
    ``V <- V + h Lap_perp |E|^2``. Output is sampled on the configured grid.
    """
    tg = config.timegrid
    grid = data.grid
    sub = config.reference_substeps if substeps is None else substeps
    h = tg.dt / sub
    omega = dispersion(grid)
    r = perp_radius(grid)
    half_E = np.exp(-1j * (h / 2) * omega)
    c, s = np.cos(r * h / 2), np.sin(r * h / 2)
    sinc = wave_sine_symbol(grid, h / 2)
    n0h, n1h = fft3(data.n0.values), fft3(data.n1.values)

    def half_linear(Eh, Lh, Vh):
        return Eh * half_E, c * Lh + sinc * Vh, -r * s * Lh + c * Vh

    Eh = fft3(data.E0.values)
    Lh = np.zeros(grid.shape, dtype=complex)
    Vh = np.zeros(grid.shape, dtype=complex)
    out = np.empty((tg.nt, *grid.shape), dtype=complex)
    out[0] = data.E0.values
    t = 0.0
    for j in range(1, tg.nt):
        for _ in range(sub):
            Eh, Lh, Vh = half_linear(Eh, Lh, Vh)
            if nonlinear:
                tm = t + h / 2
                Fh = wave_cosine_symbol(grid, tm) * n0h + wave_sine_symbol(grid, tm) * n1h
                n = _real(ifft3(Fh + Lh), "n")
                E = ifft3(Eh)
                m_before = float(np.sum(np.abs(E) ** 2))
                E = np.exp(-1j * h * n) * E
                m_after = float(np.sum(np.abs(E) ** 2))
                if m_before > 0 and abs(m_after - m_before) / m_before > 1e-6:
                    raise QuadratureError("reference step rejected: local mass drift above 1e-6")
                Vh = Vh - h * r**2 * fft3(np.abs(E) ** 2)
                Eh = fft3(E)
            Eh, Lh, Vh = half_linear(Eh, Lh, Vh)
            t += h
        out[j] = ifft3(Eh)
    return FieldSeries(grid, tg, out)
