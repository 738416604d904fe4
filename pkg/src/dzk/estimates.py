"""
Empirical checks of the linear estimates for the Schrodinger-transport group
and the wave propagators.

Each check evaluates a left-hand side and a right-hand side per input and
returns a :class:`RatioReport` (or a :class:`SlopeFit` for growth and decay
exponents). Constants are never assumed; they are read off the ratios.
"""
from __future__ import annotations

import numpy as np

from .families import InputFamily
from .field import (
    FieldSeries,
    Grid3,
    ScalarField,
    TimeGrid,
    dealiased_product_array,
    fft3,
    ifft3,
    make_timegrid,
)
from .norms import mixed_norm, sobolev_norm
from .propagators import (
    bessel_symbol,
    dispersion,
    dyadic_symbol,
    partial_symbol,
    perp_radius,
    riesz_symbol,
    schrodinger_duhamel,
    schrodinger_evolve,
    schrodinger_group,
    wave_cosine_symbol,
    wave_sine_symbol,
)
from .reports import RatioReport, SlopeFit, check_admissible, fit_slope
from .solver import boundary_fraction

__all__ = [
    "BoundaryContaminationError",
    "xy_lp_l2z",
    "check_unitarity",
    "check_decay",
    "strichartz_lhs",
    "check_strichartz",
    "check_smoothing",
    "check_maximal",
    "check_wave_maximal",
    "leibniz_commutator",
    "check_leibniz_commutator",
    "shell_noise",
    "bk_ratio_table",
    "check_bk_bound",
    "constant_spread",
]

INF = float("inf")


class BoundaryContaminationError(RuntimeError):
    pass


def _other(axis: str) -> str:
    if axis not in ("x", "y"):
        raise ValueError(f"distinguished axis must be x or y, got {axis!r}")
    return "y" if axis == "x" else "x"


def _series_apply(series: FieldSeries, symbol: np.ndarray) -> FieldSeries:
    return FieldSeries(series.grid, series.timegrid, ifft3(fft3(series.data) * symbol))


def xy_lp_l2z(grid: Grid3, values: np.ndarray, p: float) -> float:
    """``|| ||u||_{L^2_z} ||_{L^p_{xy}}`` of one frame."""
    dx, dy, dz = grid.spacing
    prof = np.sqrt(dz * np.sum(np.abs(values) ** 2, axis=-1))
    if p == INF:
        return float(prof.max())
    return float((dx * dy * np.sum(prof**p)) ** (1.0 / p))


def check_unitarity(family: InputFamily, grid: Grid3, t: float = 1.0) -> RatioReport:
    """``||U(t) f|| / ||f||`` per member; identically one."""
    rep = RatioReport("unitarity", {"t": t}, family.describe())
    for i, f in family.fields(grid):
        rep.add(i, schrodinger_group(f, t).l2_norm(), f.l2_norm())
    return rep


def check_decay(p: float, family: InputFamily, grid: Grid3, times, threshold: float = 1e-2) -> SlopeFit:
    """Decay of ``||U(t) f||_{L^p_{xy} L^2_z}`` in t for the first family member.

    The fitted log-log slope is compared with ``-(1/p' - 1/p) = -(1 - 2/p)``.
    ``extras["constant"]`` is the largest ``t^(1-2/p) ||U(t) f|| / ||f||_{L^p'_{xy} L^2_z}``.
    Raises :class:`BoundaryContaminationError` when the share of mass in the
    boundary band exceeds ``threshold`` at any sampled time.
    """
    p = float(p)
    if p < 2:
        raise ValueError("decay exponent p must be >= 2")
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0):
        raise ValueError("decay times must be positive")
    _, f = family.fields(grid)[0]
    pdual = INF if p == 2 else (1.0 if p == INF else p / (p - 1))
    expo = 1.0 - 2.0 / p if p != INF else 1.0
    base = xy_lp_l2z(grid, f.values, pdual)
    # a periodic z profile never meets the z boundary
    monitored = ("x", "y") if family.params.get("z_periodic") else ("x", "y", "z")
    vals, consts, contamination = [], [], []
    for t in times:
        u = schrodinger_group(f, float(t)).values
        frac = boundary_fraction(grid, u, monitored)
        contamination.append(frac)
        if frac > threshold:
            raise BoundaryContaminationError(
                f"boundary mass share {frac:.2e} at t={t:g} exceeds {threshold:g}; enlarge the box or shorten times")
        v = xy_lp_l2z(grid, u, p)
        vals.append(v)
        consts.append(t**expo * v / base)
    fit = fit_slope(np.log2(times), np.log2(vals), f"decay p={p:g}", {"p": p})
    fit.extras.update({
        "expected_slope": -expo,
        "constant": float(max(consts)),
        "boundary_share": float(max(contamination)),
    })
    return fit


def strichartz_lhs(f: ScalarField, q: float, p: float, timegrid: TimeGrid) -> float:
    """``||U(t) f||_{L^q_t L^p_{xy} L^2_z}`` over the nodes of ``timegrid``, one frame at a time."""
    g = f.grid
    fh = fft3(f.values)
    omega = dispersion(g)
    prof = np.array([xy_lp_l2z(g, ifft3(fh * np.exp(-1j * t * omega)), p) for t in timegrid.nodes])
    if q == INF:
        return float(prof.max())
    return float(np.sum(timegrid.trapezoid_weights() * prof**q) ** (1.0 / q))


def check_strichartz(q: float, p: float, family: InputFamily, grid: Grid3, T: float = 1.0,
                     nt: int = 17) -> RatioReport:
    """``||U(t) f||_{L^q_T L^p_{xy} L^2_z} / ||f||_{L^2}`` per member.

    For a ``rescaled`` family member ``lambda`` the time window is ``T / lambda^2``,
    which makes the ratio scale invariant; ``extras["slope"]`` holds the
    log-log fit of ratio against lambda.
    """
    q, p = float(q), float(p)
    check_admissible(q, p)
    rep = RatioReport("strichartz", {"q": q, "p": p, "T": T, "nt": nt}, family.describe())
    rescaled = family.kind == "rescaled"
    for i, f in family.fields(grid):
        window = T / float(i) ** 2 if rescaled else T
        rep.add(i, strichartz_lhs(f, q, p, make_timegrid(window, nt)), f.l2_norm())
    if rescaled and len(rep.ratios) >= 3:
        fit = fit_slope(np.log2(rep.input_ids), np.log2(rep.ratios), "strichartz rescaling", rep.params)
        rep.extras["slope"] = fit.slope
        rep.extras["fit"] = fit
    return rep


def check_smoothing(variant: str, family: InputFamily, grid: Grid3, T: float = 1.0, nt: int = 17,
                    axis: str = "x") -> RatioReport:
    """Local smoothing ratios.

    ``hom``: ``||D^(1/2)_a U(t) f||_{L^inf_a L^2} / ||f||_{L^2}``;
    ``inhom-L2``: ``||D^(1/2)_a Duh(G)||_{L^inf_T L^2} / ||G||_{L^1_a L^2}``;
    ``inhom-Linf``: ``||d_a Duh(G)||_{L^inf_a L^2} / ||G||_{L^1_a L^2}``,
    where ``a`` is the distinguished axis and ``Duh`` the Duhamel integral.
    """
    b = _other(axis)
    tg = make_timegrid(T, nt)
    rep = RatioReport(f"smoothing-{variant}", {"T": T, "nt": nt, "axis": axis}, family.describe())
    sup_a = f"Linf:{axis} | L2:{b},z,t"
    l1_a = f"L1:{axis} | L2:{b},z,t"
    if variant == "hom":
        half = riesz_symbol(grid, 0.5, axis)
        for i, f in family.fields(grid):
            u = _series_apply(schrodinger_evolve(f, tg), half)
            rep.add(i, mixed_norm(u, sup_a).value, f.l2_norm())
    elif variant in ("inhom-L2", "inhom-Linf"):
        if variant == "inhom-L2":
            sym, spec = riesz_symbol(grid, 0.5, axis), "Linf:t | L2:x,y,z"
        else:
            sym, spec = partial_symbol(grid, (1, 0, 0) if axis == "x" else (0, 1, 0)), sup_a
        for i, G in family.forcings(grid, tg):
            u = _series_apply(schrodinger_duhamel(G), sym)
            rep.add(i, mixed_norm(u, spec).value, mixed_norm(G, l1_a).value)
    else:
        raise ValueError(f"unknown smoothing variant {variant!r}")
    return rep


def check_maximal(s: float, family: InputFamily, grid: Grid3, T: float = 1.0, nt: int = 17,
                  axis: str = "x") -> RatioReport:
    """``||U(t) f||_{L^2_a L^inf} / ||f||_{H^s}`` per member."""
    if s < 0:
        raise ValueError("regularity s must be nonnegative")
    b = _other(axis)
    tg = make_timegrid(T, nt)
    rep = RatioReport("maximal", {"s": s, "T": T, "nt": nt, "axis": axis}, family.describe(),
                      extras={"branch": "bounded" if s > 1.5 else "unresolved"})
    for i, f in family.fields(grid):
        u = schrodinger_evolve(f, tg)
        rep.add(i, mixed_norm(u, f"L2:{axis} | Linf:{b},z,t").value, sobolev_norm(f, s).value)
    return rep


def _wave_series(f: ScalarField, tg: TimeGrid, variant: str) -> FieldSeries:
    g = f.grid
    fh = fft3(f.values)
    r = perp_radius(g)
    frames = np.empty((tg.nt, *g.shape), dtype=complex)
    for j, t in enumerate(tg.nodes):
        if variant == "cos":
            sym = wave_cosine_symbol(g, t)
        elif variant == "sin-H2":
            sym = r * wave_sine_symbol(g, t)
        else:
            sym = wave_sine_symbol(g, t)
        frames[j] = ifft3(fh * sym)
    return FieldSeries(g, tg, frames)


def check_wave_maximal(variant: str, family: InputFamily, grid: Grid3, T: float = 1.0, nt: int = 17,
                       axis: str = "x") -> RatioReport:
    """Maximal bounds for the wave propagators on real data.

    ``cos``: ``||N'(t) n||_{L^2_a L^inf} / ||n||_{H^2}``;
    ``sin-H2``: ``||(-Lap_perp)^(1/2) N(t) n||_{L^2_a L^inf} / (T ||n||_{H^2})``;
    ``sin-H1``: ``||N(t) n||_{L^2_a L^inf} / (T (||n||_{H^1} + ||d_z n||_{H^1}))``.
    """
    if variant not in ("cos", "sin-H2", "sin-H1"):
        raise ValueError(f"unknown wave variant {variant!r}")
    b = _other(axis)
    tg = make_timegrid(T, nt)
    rep = RatioReport(f"wave-maximal-{variant}", {"T": T, "nt": nt, "axis": axis}, family.describe())
    kz = grid.wavenumbers()[2]
    for i, f in family.fields(grid):
        n = ScalarField(grid, f.values.real)
        lhs = mixed_norm(_wave_series(n, tg, variant), f"L2:{axis} | Linf:{b},z,t").value
        if variant == "cos":
            rhs = sobolev_norm(n, 2).value
        elif variant == "sin-H2":
            rhs = T * sobolev_norm(n, 2).value
        else:
            dzn = ScalarField(grid, ifft3(1j * kz * fft3(n.values)).real)
            rhs = T * (sobolev_norm(n, 1).value + sobolev_norm(dzn, 1).value)
        rep.add(i, lhs, rhs)
    return rep


def leibniz_commutator(f: FieldSeries, g: FieldSeries, rho: float, axis: str = "x") -> FieldSeries:
    """``D^rho(f g) - f D^rho g - (D^rho f) g`` with every product 2/3-dealiased."""
    grid = f.grid
    D = riesz_symbol(grid, rho, axis)
    Df = ifft3(fft3(f.data) * D)
    Dg = ifft3(fft3(g.data) * D)
    fg = dealiased_product_array(grid, f.data, g.data)
    out = ifft3(fft3(fg) * D) - dealiased_product_array(grid, f.data, Dg) - dealiased_product_array(grid, Df, g.data)
    return FieldSeries(grid, f.timegrid, out)


def _check_leibniz_exponents(rho, rho1, rho2, p1, p2, q1, q2):
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    if not (0 <= rho1 <= rho and 0 <= rho2 <= rho) or abs(rho1 + rho2 - rho) > 1e-12:
        raise ValueError("need rho1, rho2 in [0, rho] with rho1 + rho2 = rho")
    for e in (p1, p2, q1, q2):
        if not 2 <= e < INF:
            raise ValueError("Lebesgue exponents must lie in [2, inf)")
    if abs(1 / p1 + 1 / p2 - 0.5) > 1e-12 or abs(1 / q1 + 1 / q2 - 0.5) > 1e-12:
        raise ValueError("need 1/p1 + 1/p2 = 1/q1 + 1/q2 = 1/2")


def check_leibniz_commutator(rho: float, rho1: float, rho2: float, p1: float, p2: float, q1: float,
                             q2: float, family: InputFamily, grid: Grid3, T: float = 0.5, nt: int = 9,
                             axis: str = "x", pairs=None) -> RatioReport:
    """Commutator ``||.||_{L^2_a L^2}`` against ``||D^rho1 f||_{L^p1_a L^q1} ||D^rho2 g||_{L^p2_a L^q2}``.

    The other three variables (transverse axis, z and t on ``[0, T]``) form the
    inner space. Unless ``pairs`` is given, member ``i`` is paired with member
    ``i + 1`` (cyclically) and both are evolved by the free group.
    """
    _check_leibniz_exponents(rho, rho1, rho2, p1, p2, q1, q2)
    b = _other(axis)
    params = {"rho": rho, "rho1": rho1, "rho2": rho2, "p1": p1, "p2": p2, "q1": q1, "q2": q2,
              "T": T, "nt": nt, "axis": axis}
    rep = RatioReport("leibniz-commutator", params, family.describe())
    if pairs is None:
        tg = make_timegrid(T, nt)
        members = family.fields(grid)
        evolved = [(i, schrodinger_evolve(f, tg)) for i, f in members]
        pairs = [(i, evolved[j][1], evolved[(j + 1) % len(evolved)][1]) for j, (i, _) in enumerate(evolved)]
    D1 = riesz_symbol(grid, rho1, axis)
    D2 = riesz_symbol(grid, rho2, axis)
    for i, f, g in pairs:
        lhs = mixed_norm(leibniz_commutator(f, g, rho, axis), f"L2:{axis} | L2:{b},z,t").value
        nf = mixed_norm(_series_apply(f, D1), f"L{p1}:{axis} | L{q1}:{b},z,t").value
        ng = mixed_norm(_series_apply(g, D2), f"L{p2}:{axis} | L{q2}:{b},z,t").value
        rep.add(i, lhs, nf * ng)
    return rep


def shell_noise(grid: Grid3, k: int, rng: np.random.Generator) -> ScalarField:
    """Complex white noise on the modes where the level-``k`` shell weight is positive."""
    support = dyadic_symbol(grid, k) > 0
    m = int(np.count_nonzero(support))
    if m == 0:
        raise ValueError(f"level k={k} has no modes on this grid")
    modes = np.zeros(grid.shape, dtype=complex)
    modes[support] = rng.normal(size=m) + 1j * rng.normal(size=m)
    return ScalarField(grid, ifft3(modes))


def _check_resolved(grid: Grid3, k_list) -> None:
    edge = np.pi / max(grid.spacing)
    for k in k_list:
        if 2.0 ** (k + 1) > edge * 1.0001:
            raise ValueError(f"level k={k} is not resolved: needs |xi| up to {2 ** (k + 1)}, grid reaches {edge:.1f}")


def bk_ratio_table(s_values, k_list, family: InputFamily, grid: Grid3) -> dict:
    """``{s: array (levels, count)}`` of ``||B_k f|| / ||f||_{H^s}`` for white-in-shell ``f``.

    Member ``i`` at level ``k`` is drawn with the generator seeded by
    ``(family.seed, k, i)``. Both norms are read off one forward transform of
    ``f`` by Parseval, so every ``s`` shares the same draws.
    """
    k_list = [int(k) for k in k_list]
    s_values = [float(s) for s in s_values]
    _check_resolved(grid, k_list)
    scale = grid.cell_volume / (grid.nx * grid.ny * grid.nz)
    weights = {s: bessel_symbol(grid, 2 * s) for s in s_values}
    table = {s: np.empty((len(k_list), family.count)) for s in s_values}
    for a, k in enumerate(k_list):
        shell = dyadic_symbol(grid, k)
        for i in range(family.count):
            f = shell_noise(grid, k, np.random.default_rng((family.seed, k, i)))
            power = np.abs(fft3(f.values)) ** 2
            bk = np.sqrt(scale * np.sum(shell * power))
            for s in s_values:
                table[s][a, i] = bk / np.sqrt(scale * np.sum(weights[s] * power))
    return table


def check_bk_bound(s: float, k_list, family: InputFamily, grid: Grid3, table: dict | None = None) -> SlopeFit:
    """Slope of the mean of ``log2(||B_k f|| / ||f||_{H^s})`` against k for white-in-shell data.

    The family supplies the seed and member count. ``extras["constants"]``
    holds ``2^(k s)`` times the largest ratio at each level. A precomputed
    :func:`bk_ratio_table` containing ``s`` may be passed as ``table``.
    """
    k_list = [int(k) for k in k_list]
    if table is None:
        table = bk_ratio_table([s], k_list, family, grid)
    logs = np.log2(table[float(s)])
    ords = logs.mean(axis=1)
    consts = [float(2.0 ** (k * s + row.max())) for k, row in zip(k_list, logs)]
    fit = fit_slope(k_list, ords, f"B_k bound s={s:g}", {"s": s})
    fit.extras["constants"] = consts
    return fit


def constant_spread(constants) -> tuple[float, float]:
    """``(C, spread)``: the single constant closest to all of ``constants`` in the max
    relative sense, and the largest relative deviation from it."""
    c = np.asarray(constants, dtype=float)
    C = 0.5 * (c.max() + c.min())
    return float(C), float(np.max(np.abs(c / C - 1)))
