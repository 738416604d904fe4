import warnings

import numpy as np
import pytest

from dzk.field import FieldSeries, ScalarField, make_grid, make_timegrid
from dzk.propagators import schrodinger_group
from dzk.solver import (
    ContractionError,
    InitialData,
    SolverConfig,
    mass,
    picard_map,
    reconstruct_n,
    reference_step,
    solve_picard,
    wave_duhamel,
    wave_forcing,
)

pytestmark = pytest.mark.filterwarnings("ignore:boundary mass fraction:RuntimeWarning")

G = make_grid(16, 16, 16, 2 * np.pi, 2 * np.pi, 2 * np.pi)
CFG = SolverConfig(T=0.2, nt=9)


def lowmode(grid, amp, seed, real=False, zdep=True):
    """Random trigonometric polynomial in the modes |m| <= 2 (inside the 2/3 band)."""
    rng = np.random.default_rng(seed)
    x, y, z = grid.mesh()
    out = np.zeros(grid.shape, complex)
    for _ in range(4):
        m = rng.integers(-2, 3, 3)
        if not zdep:
            m[2] = 0
        c = complex(rng.normal(), rng.normal())
        out = out + c * np.exp(1j * (m[0] * x + m[1] * y + m[2] * z))
    if real:
        out = out.real
    return ScalarField(grid, amp * out / np.max(np.abs(out)))


def data(E=0.1, n0=0.1, n1=0.1, zdep=True, grid=G):
    return InitialData(lowmode(grid, E, 1, zdep=zdep), lowmode(grid, n0, 2, True, zdep),
                       lowmode(grid, n1, 3, True, zdep))


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(nt=5)
    with pytest.raises(ValueError):
        SolverConfig(T=0.0)
    with pytest.raises(ValueError):
        SolverConfig(duhamel_quadrature_order=2)
    with pytest.raises(ValueError):
        SolverConfig(dealias_rule="3/2")


def test_initial_data_validation():
    with pytest.raises(ValueError, match="real"):
        InitialData(lowmode(G, 1, 0), lowmode(G, 1, 1), lowmode(G, 1, 2, real=True))
    other = make_grid(8, 8, 8, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="grid"):
        InitialData(lowmode(G, 1, 0), lowmode(other, 1, 1, True), lowmode(G, 1, 2, True))


def test_zero_data_gives_zero_solution():
    z = ScalarField(G, np.zeros(G.shape))
    b = solve_picard(InitialData(z, z, z), CFG)
    assert b.diagnostics.converged
    assert np.all(b.E.data == 0) and np.all(b.n.data == 0)


def test_picard_map_keeps_initial_frame():
    d = data()
    tg = CFG.timegrid
    rng = np.random.default_rng(0)
    E = FieldSeries(G, tg, rng.normal(size=(tg.nt, *G.shape)) + 0j)
    out = picard_map(E, d, CFG)
    assert np.array_equal(out.data[0], d.E0.values)


def test_vanishing_envelope_gives_free_wave():
    z = ScalarField(G, np.zeros(G.shape))
    d = InitialData(z, lowmode(G, 0.3, 2, True), lowmode(G, 0.3, 3, True))
    b = solve_picard(d, CFG)
    assert np.all(b.E.data == 0)
    for j, t in enumerate(CFG.timegrid.nodes):
        assert np.allclose(b.n.data[j], wave_forcing(d, t).values, atol=1e-14)


def test_small_envelope_follows_free_group():
    amp = 1e-4
    z = ScalarField(G, np.zeros(G.shape))
    E0 = lowmode(G, amp, 1)
    b = solve_picard(InitialData(E0, z, z), CFG)
    free = schrodinger_group(E0, CFG.T).values
    # the cubic coupling enters at order amp^3 T^2
    assert np.max(np.abs(b.E.data[-1] - free)) < 10 * amp**3


def test_z_independent_data_stay_z_independent():
    b = solve_picard(data(zdep=False), CFG)
    for a in (b.E.data, b.n.data):
        assert np.max(np.abs(a - a[..., :1])) <= 1e-12 * np.max(np.abs(a))


def test_xy_swap_symmetry():
    d = data()
    a = solve_picard(d, CFG)
    b = solve_picard(d.swapped_xy(), CFG)
    assert np.max(np.abs(a.E.swapped_xy().data - b.E.data)) <= 1e-10 * np.max(np.abs(a.E.data))
    assert np.max(np.abs(a.n.swapped_xy().data - b.n.data)) <= 1e-10 * np.max(np.abs(a.n.data))


def test_diagnostics_on_small_data():
    b = solve_picard(data(), CFG)
    d = b.diagnostics
    assert d.converged and d.halvings == 0 and d.achieved_T == CFG.T
    assert all(r < 0.1 for r in d.ratios)
    assert d.residual < 1e-10 and d.mass_drift < 1e-7
    assert b.E.nt == CFG.nt and np.all(np.imag(b.n.data) == 0)


def test_mass_of_plane_wave():
    f = ScalarField.from_function(G, lambda x, y, z: 2 * np.exp(1j * (x - z)) + 0 * y)
    assert mass(f) == pytest.approx(4 * G.volume, rel=1e-14)


def test_forcing_bound():
    d = data(n0=0.5, n1=0.7)
    for t in (0.0, 0.3, 1.0, 4.0):
        assert wave_forcing(d, t).l2_norm() <= d.n0.l2_norm() + t * d.n1.l2_norm() + 1e-12


def test_wave_duhamel_closed_form():
    # |E|^2 = q constant in time: int_0^t N(t-s) Lap q ds has symbol -(1 - cos(t r))
    tg = make_timegrid(0.5, 17)
    x, y, z = G.mesh()
    E = 1 + 0.3 * np.cos(x) + 0.2 * np.sin(2 * y) * np.cos(z)
    series = FieldSeries(G, tg, np.broadcast_to(E + 0j, (tg.nt, *G.shape)).copy())
    q = np.abs(E) ** 2
    kx, ky, _ = G.wavenumbers()
    r = np.sqrt(kx**2 + ky**2)
    for t in (0.25, 0.5):
        L = wave_duhamel(series, t).values
        expected = np.fft.ifftn(-(1 - np.cos(t * r)) * np.fft.fftn(q)).real
        assert np.max(np.abs(L - expected)) < 1e-6 * np.max(np.abs(expected))
    assert np.all(wave_duhamel(series, 0.0).values == 0)


def test_reconstruct_n_matches_bundle():
    d = data()
    b = solve_picard(d, CFG)
    for t in CFG.timegrid.nodes[[0, 4, 8]]:
        j = CFG.timegrid.index_of(t)
        assert np.allclose(reconstruct_n(b.E, d, t).values, b.n.data[j], atol=1e-12)


def test_reference_linear_is_free_group():
    d = data()
    ref = reference_step(d, CFG, nonlinear=False)
    for j, t in enumerate(CFG.timegrid.nodes):
        assert np.allclose(ref.data[j], schrodinger_group(d.E0, t).values, atol=1e-13)


def test_reference_agrees_with_picard():
    # 24^3 keeps the cubic cascade inside the dealiased band
    g = make_grid(24, 24, 24, 2 * np.pi, 2 * np.pi, 2 * np.pi)
    d = data(E=0.3, n0=0.3, n1=0.3, grid=g)
    cfg = SolverConfig(T=0.2, nt=17)
    b = solve_picard(d, cfg)
    ref = reference_step(d, cfg, substeps=16)
    err = np.max(np.abs(ref.data - b.E.data)) / np.max(np.abs(b.E.data))
    assert err < 5e-7


def test_large_data_fail_to_contract():
    d = data(E=40.0, n0=40.0, n1=40.0)
    cfg = SolverConfig(T=2.0, nt=9, max_halvings=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(ContractionError):
            solve_picard(d, cfg)


def test_halving_recovers_horizon():
    d = data(E=3.0, n0=3.0, n1=3.0)
    cfg = SolverConfig(T=2.0, nt=9, max_halvings=4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        b = solve_picard(d, cfg)
    assert b.diagnostics.halvings >= 1
    assert b.diagnostics.achieved_T == pytest.approx(2.0 / 2 ** b.diagnostics.halvings)
