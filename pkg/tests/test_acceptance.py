"""
Acceptance criteria, one test per criterion at its stated tolerance.

Each test prints a single ``CRITERION n PASS|FAIL: ...`` line before asserting.
Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline.
"""
import time
import numpy as np
import pytest

from dzk.estimates import (
    bk_ratio_table,
    check_bk_bound,
    check_decay,
    check_leibniz_commutator,
    check_maximal,
    check_smoothing,
    check_strichartz,
    constant_spread,
    leibniz_commutator,
)
from dzk.families import InputFamily
from dzk.field import FieldSeries, ScalarField, fft3, ifft3, make_grid, make_timegrid
from dzk.kernel import kernel_envelope, kernel_tail_fit
from dzk.norms import sobolev_norm
from dzk.propagators import (
    dyadic_symbol,
    perp_sqrt_laplacian,
    schrodinger_evolve,
    schrodinger_group,
    wave_cosine,
    wave_cosine_symbol,
    wave_sine_symbol,
    wave_sine,
)
from dzk.runner import parse_config, run, solver_data
from dzk.sharpness import counterexample_growth
from dzk.solver import InitialData, SolverConfig, _density_hat, _WaveIntegrator, reference_step, solve_picard

INF = float("inf")

pytestmark = pytest.mark.filterwarnings("ignore:boundary mass fraction:RuntimeWarning")


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}")
        return ok

    return emit


def rel_dev(a, b):
    return abs(a / b - 1)


def test_criterion_01_exact_identities(verdict):
    g = make_grid(64, 64, 64, 24.0, 24.0, 24.0)
    t0 = time.perf_counter()
    worst = {"isometry": 0.0, "group law": 0.0, "energy": 0.0, "LE4": 0.0, "LE5": 0.0, "LE6": 0.0}
    for seed in range(100):
        rng = np.random.default_rng(seed)
        f = ScalarField(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
        nf = f.l2_norm()
        t, s = rng.uniform(-3, 3, 2)
        u = schrodinger_group(f, t)
        worst["isometry"] = max(worst["isometry"], rel_dev(u.l2_norm(), nf))
        lhs = schrodinger_group(schrodinger_group(f, s), t).values
        rhs = schrodinger_group(f, t + s).values
        worst["group law"] = max(worst["group law"], np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))
        c, sn = wave_cosine(f, t), wave_sine(f, t)
        rs = perp_sqrt_laplacian(sn)
        worst["energy"] = max(worst["energy"], rel_dev(c.l2_norm() ** 2 + rs.l2_norm() ** 2, nf**2))
        # excess over the constant-one bounds, relative to the bound
        worst["LE4"] = max(worst["LE4"], c.l2_norm() / nf - 1)
        worst["LE5"] = max(worst["LE5"], sn.l2_norm() / (abs(t) * nf) - 1)
        worst["LE6"] = max(worst["LE6"], rs.l2_norm() / nf - 1)
    elapsed = time.perf_counter() - t0
    ok = all(v <= 1e-12 for v in worst.values()) and elapsed < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    verdict(1, ok, f"{detail}; {elapsed:.1f} s")
    assert ok


def test_criterion_02_dispersive_decay(verdict):
    g = make_grid(1024, 1024, 4, 64.0, 64.0, 4.0)
    fam = InputFamily("gaussian", scales=(0.15,), params={"z_periodic": True})
    times = np.geomspace(0.05, 0.8, 9)
    inf_fit = check_decay(INF, fam, g, times)
    four_fit = check_decay(4, fam, g, times)
    bound = 1.05 / (4 * np.pi)
    ok_inf = rel_dev(inf_fit.slope, -1.0) <= 0.02
    ok_four = rel_dev(four_fit.slope, -0.5) <= 0.05
    ok_const = inf_fit.extras["constant"] <= bound
    ok = ok_inf and ok_four and ok_const
    verdict(2, ok, f"slope p=inf {inf_fit.slope:.4f} (target -1 +-2%), p=4 {four_fit.slope:.4f} "
                   f"(target -0.5 +-5%), constant {inf_fit.extras['constant']:.5f} <= {bound:.5f}")
    assert ok


def test_criterion_03_strichartz(verdict):
    g = make_grid(64, 64, 64, 24.0, 24.0, 24.0)
    fam = InputFamily("random-bandlimited", count=50, seed=7)
    fine_fam = InputFamily("random-bandlimited", count=3, seed=7)
    rg = make_grid(256, 256, 64, 24.0, 24.0, 8.0)
    rfam = InputFamily("rescaled", seed=3, scales=(1, 2, 4), params={"z_periodic": True})
    lines, ok = [], True
    for q, p in [(INF, 2.0), (4.0, 4.0), (8.0 / 3.0, 8.0)]:
        rep = check_strichartz(q, p, fam, g, T=1.0, nt=17)
        coarse = check_strichartz(q, p, fine_fam, g, T=1.0, nt=17)
        fine = check_strichartz(q, p, fine_fam, g.refined(2), T=1.0, nt=17)
        refine = max(rel_dev(b, a) for a, b in zip(coarse.ratios, fine.ratios))
        slope = check_strichartz(q, p, rfam, rg, T=1.0, nt=17).extras["slope"]
        this = np.isfinite(rep.max_ratio) and rep.spread < 5 and abs(slope) <= 0.1 and refine <= 0.2
        ok &= this
        lines.append(f"(q,p)=({q:g},{p:g}) max {rep.max_ratio:.3f} spread {rep.spread:.3f} "
                     f"rescale slope {slope:+.4f} refine {refine:.1e}")
    verdict(3, ok, "; ".join(lines))
    assert ok


def test_criterion_04_smoothing_and_maximal(verdict):
    g = make_grid(64, 64, 64, 24.0, 24.0, 24.0)
    fam = InputFamily("random-bandlimited", count=10, seed=7)
    small = InputFamily("random-bandlimited", count=2, seed=7)
    swapped = _SwappedFamily("random-bandlimited", count=10, seed=7)

    def run_variant(name, family, grid, axis="x", nt=17):
        if name == "maximal":
            return check_maximal(2.0, family, grid, 1.0, nt, axis)
        return check_smoothing(name, family, grid, 1.0, nt, axis)

    lines, ok = [], True
    for name in ("hom", "inhom-L2", "inhom-Linf", "maximal"):
        rep = run_variant(name, fam, g)
        sym = run_variant(name, swapped, g, axis="y")
        sym_err = max(rel_dev(b, a) for a, b in zip(rep.ratios, sym.ratios))
        coarse = run_variant(name, small, g, nt=9)
        fine = run_variant(name, small, g.refined(2), nt=9)
        refine = max(rel_dev(b, a) for a, b in zip(coarse.ratios, fine.ratios))
        this = np.isfinite(rep.max_ratio) and sym_err <= 1e-10 and refine <= 0.2
        ok &= this
        lines.append(f"{name} max {rep.max_ratio:.4f} x<->y {sym_err:.1e} refine {refine:.1e}")
    verdict(4, ok, "; ".join(lines))
    assert ok


class _SwappedFamily(InputFamily):
    def fields(self, grid):
        return [(i, f.swapped_xy()) for i, f in super().fields(grid)]

    def forcings(self, grid, timegrid):
        return [(i, s.swapped_xy()) for i, s in super().forcings(grid, timegrid)]


def test_criterion_05_sharpness(verdict):
    t0 = time.perf_counter()
    fit = counterexample_growth(2.0, (2, 3, 4, 5))
    elapsed = time.perf_counter() - t0
    r0 = fit.extras["ratio_h0_fit"].slope
    r2 = fit.extras["ratio_fit"].slope
    ok = abs(fit.slope - 2.5) <= 0.3 and abs(r0 - 1.0) <= 0.3 and r2 <= 0.15 and elapsed < 600
    verdict(5, ok, f"LHS slope {fit.slope:.4f} (2.5 +-0.3), ratio-to-L2 slope {r0:.4f} (1 +-0.3), "
                   f"ratio-to-H2 slope {r2:.4f} (<= 0.15); {elapsed:.1f} s")
    assert ok


def test_criterion_06_kernel_envelope(verdict):
    lines, ok = [], True
    for k in (2, 4, 6):
        tail = kernel_tail_fit(k, np.geomspace(1.0, 100.0, 41))
        T = 1.0
        fit_rep = kernel_envelope(k, T, np.geomspace(0.25, 100.0, 13), np.linspace(0.0, T, 5))
        check = kernel_envelope(k, T, np.geomspace(0.3, 90.0, 17), np.linspace(T / 8, T, 6))
        c_fit = fit_rep.extras["C_fit"]
        env_ok = check.max_ratio <= 1.25 * c_fit
        tail_ok = abs(tail.slope + 2.0) <= 0.2
        ok &= env_ok and tail_ok
        lines.append(f"k={k} tail exponent {tail.slope:.3f} (target -2 +-0.2) C_fit {c_fit:.1f} "
                     f"held-out max ratio {check.max_ratio:.1f}")
    verdict(6, ok, "; ".join(lines))
    assert ok


def test_criterion_07_dyadic_calculus(verdict):
    pg = make_grid(64, 64, 64, 8.0, 8.0, 8.0)
    K = 4
    total = sum(dyadic_symbol(pg, k) for k in range(K + 1))
    kx, ky, kz = pg.wavenumbers()
    inside = (np.abs(kx) < 2**K) & (np.abs(ky) < 2**K) & (np.abs(kz) < 2**K)
    part_err = float(np.max(np.abs(total - 1)[inside]))
    n = 176
    side = 2 * np.pi * n / 132
    g = make_grid(n, n, n, side, side, side)
    fam = InputFamily("random-bandlimited", count=50, seed=0)
    levels = [1, 2, 3, 4, 5]
    table = bk_ratio_table([0.0, 1.0, 2.0], levels, fam, g)
    slopes = {s: check_bk_bound(s, levels, fam, g, table=table).slope for s in (0.0, 1.0, 2.0)}
    ok = part_err <= 1e-12 and all(abs(v + s) <= 0.2 for s, v in slopes.items())
    detail = ", ".join(f"s={s:g} slope {v:+.3f}" for s, v in slopes.items())
    verdict(7, ok, f"partition error {part_err:.1e}; {detail}")
    _BK_CACHE["table"] = (table, levels, fam, g)
    assert ok


_BK_CACHE = {}


def test_bk_constant_stable_across_levels(verdict):
    # dyadic-projection example: one C for all k in 1..5 within +-10%, s in {1, 2}, 50 random f
    if "table" not in _BK_CACHE:
        n = 176
        side = 2 * np.pi * n / 132
        g = make_grid(n, n, n, side, side, side)
        fam = InputFamily("random-bandlimited", count=50, seed=0)
        levels = [1, 2, 3, 4, 5]
        _BK_CACHE["table"] = (bk_ratio_table([0.0, 1.0, 2.0], levels, fam, g), levels, fam, g)
    table, levels, fam, g = _BK_CACHE["table"]
    lines, ok = [], True
    for s in (1.0, 2.0):
        consts = check_bk_bound(s, levels, fam, g, table=table).extras["constants"]
        C, spread = constant_spread(consts)
        ok &= spread <= 0.1
        lines.append(f"s={s:g} C {C:.3f} constants {np.round(consts, 3).tolist()} max deviation {spread:.1%}")
    verdict("7b (B_k constant)", ok, "; ".join(lines))
    assert ok


def _solver_config(extra=""):
    return parse_config("grid.nx = 64\ngrid.ny = 64\ngrid.nz = 64\ngrid.lx = 16\ngrid.ly = 16\ngrid.lz = 16\n" + extra)


def _z_free(data):
    g = data.grid
    def flat(f):
        # z-average keeps the transverse profile and removes all z dependence
        v = np.broadcast_to(f.values.mean(axis=2, keepdims=True), g.shape).copy()
        return ScalarField(g, v)
    return InitialData(flat(data.E0), flat(data.n0), flat(data.n1))


def test_criterion_08_solver(verdict):
    cfg = _solver_config()
    data = solver_data(cfg)
    scfg = SolverConfig(T=0.1, nt=17, picard_tol=1e-8)
    t0 = time.perf_counter()
    bundle = solve_picard(data, scfg)
    elapsed = time.perf_counter() - t0
    d = bundle.diagnostics
    ratios_ok = d.converged and len(d.ratios) > 0 and all(r <= 0.5 for r in d.ratios)
    ref = reference_step(data, scfg).data[-1]
    ET = bundle.E.data[-1]
    ref_err = float(np.linalg.norm(ref - ET) / np.linalg.norm(ET))

    # n(T) from the spectral pieces before any real projection
    g = data.grid
    _, Qh = _density_hat(g, bundle.E.data)
    Lh = _WaveIntegrator(g, scfg.timegrid)(Qh)[-1]
    T = scfg.T
    Fh = wave_cosine_symbol(g, T) * fft3(data.n0.values) + wave_sine_symbol(g, T) * fft3(data.n1.values)
    raw = ifft3((Fh + Lh) * g.dealias_mask())
    imag = float(np.max(np.abs(raw.imag)) / np.max(np.abs(raw.real)))
    h2 = sobolev_norm(ScalarField(g, raw.real), 2).value

    sw = solve_picard(data.swapped_xy(), scfg)
    sym_err = float(np.max(np.abs(bundle.E.swapped_xy().data - sw.E.data)) / np.max(np.abs(ET)))
    zf = solve_picard(_z_free(data), scfg)
    z_err = float(max(np.max(np.abs(a - a[..., :1])) / np.max(np.abs(a)) for a in (zf.E.data, zf.n.data)))

    ok = (ratios_ok and d.residual <= 2 * scfg.picard_tol and d.mass_drift <= 1e-6 and ref_err <= 1e-4
          and sym_err <= 1e-10 and z_err <= 1e-10 and imag <= 1e-10 and np.isfinite(h2) and elapsed < 300)
    verdict(8, ok, f"{d.iterations} iterations, ratios {np.round(d.ratios, 4).tolist()}, residual {d.residual:.1e}, "
                   f"mass drift {d.mass_drift:.1e}, reference {ref_err:.1e}, x<->y {sym_err:.1e}, "
                   f"z-free {z_err:.1e}, Im n(T) {imag:.1e}, |n(T)|_H2 {h2:.3f}; {elapsed:.0f} s")
    assert ok


def test_criterion_09_leibniz(verdict):
    g = make_grid(64, 64, 64, 24.0, 24.0, 24.0)
    tg = make_timegrid(0.5, 9)
    fam = InputFamily("random-bandlimited", count=10, seed=7)
    f = schrodinger_evolve(fam.fields(g)[0][1], tg)
    c = FieldSeries(g, tg, np.full((tg.nt, *g.shape), 1.3 + 0.2j))
    const_err = float(np.max(np.abs(leibniz_commutator(f, c, 0.5).data)) / np.max(np.abs(f.data)))
    rep = check_leibniz_commutator(0.5, 0.25, 0.25, 4, 4, 4, 4, fam, g)
    small = InputFamily("random-bandlimited", count=2, seed=7)
    coarse = check_leibniz_commutator(0.5, 0.25, 0.25, 4, 4, 4, 4, small, g)
    fine = check_leibniz_commutator(0.5, 0.25, 0.25, 4, 4, 4, 4, small, g.refined(2))
    refine = max(rel_dev(b, a) for a, b in zip(coarse.ratios, fine.ratios))
    ok = const_err <= 1e-12 and np.isfinite(rep.max_ratio) and refine <= 0.2
    verdict(9, ok, f"constant-g commutator {const_err:.1e}, max ratio {rep.max_ratio:.4f}, refine {refine:.1e}")
    assert ok


def test_criterion_10_reproducibility(verdict, tmp_path, monkeypatch):
    text = ("grid.nx = 32\ngrid.ny = 32\ngrid.nz = 32\ngrid.lx = 16\ngrid.ly = 16\ngrid.lz = 16\n"
            "family.count = 4\nrun.seed = 3\noutput.dir = out\n"
            "estimate.cases = unitarity,strichartz,smoothing-hom,smoothing-inhom-L2,maximal,"
            "wave-maximal-cos,leibniz-commutator\n")
    dirs = []
    for name in ("first", "second"):
        (tmp_path / name).mkdir()
        monkeypatch.chdir(tmp_path / name)
        run(parse_config(text))
        dirs.append(tmp_path / name / "out")
    names = sorted(p.name for p in dirs[0].iterdir())
    same = names == sorted(p.name for p in dirs[1].iterdir()) and all(
        (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes() for n in names)
    verdict(10, same, f"{len(names)} report files compared byte for byte")
    assert same
