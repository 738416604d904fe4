import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_field
from dzk.field import FieldSeries, ScalarField, fft3, ifft3, make_grid, make_timegrid
from dzk.propagators import (
    bessel_potential,
    cube_cutoff,
    dyadic_projection,
    dyadic_symbol,
    perp_sqrt_laplacian,
    riesz_derivative,
    schrodinger_duhamel,
    schrodinger_evolve,
    schrodinger_group,
    smooth_step,
    wave_cosine,
    wave_sine,
    wave_sine_symbol,
)

times = st.floats(-5, 5, allow_nan=False)
G = make_grid(12, 10, 8, 4.0, 5.0, 3.0)


def close(a, b, tol=1e-12):
    a = a.values if isinstance(a, ScalarField) else a
    b = b.values if isinstance(b, ScalarField) else b
    return np.max(np.abs(a - b)) <= tol * max(1.0, np.max(np.abs(b)))


def test_smooth_step_values():
    assert smooth_step(0.0) == 0.0 and smooth_step(1.0) == 1.0
    assert smooth_step(-3.0) == 0.0 and smooth_step(7.0) == 1.0
    assert smooth_step(0.5) == pytest.approx(0.5, abs=1e-15)
    x = np.linspace(-0.5, 1.5, 4001)
    s = smooth_step(x)
    assert np.all(np.diff(s) >= 0) and s.min() >= 0 and s.max() <= 1


def test_smooth_step_differences_converge():
    # bounded derivatives: difference quotients settle under refinement
    def peak(order, h):
        x = np.arange(-0.2, 1.2, h)
        d = np.diff(smooth_step(x), order) / h**order
        assert np.all(np.isfinite(d))
        return np.max(np.abs(d))

    for order in range(1, 5):
        assert peak(order, 5e-4) == pytest.approx(peak(order, 2.5e-4), rel=2e-2)


@given(st.floats(-2, 3, allow_nan=False))
def test_smooth_step_symmetry(x):
    assert smooth_step(x) + smooth_step(1 - x) == pytest.approx(1.0, abs=1e-15)


def test_group_identity_at_zero():
    f = random_field(G, 0)
    assert np.array_equal(schrodinger_group(f, 0.0).values, f.values) or close(schrodinger_group(f, 0.0), f, 1e-15)


@pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
def test_group_isometry(t):
    for seed in range(100):
        f = random_field(G, seed)
        assert schrodinger_group(f, t).l2_norm() == pytest.approx(f.l2_norm(), rel=1e-12)


@given(times, times, st.integers(0, 1000))
def test_group_law(t, s, seed):
    f = random_field(G, seed)
    assert close(schrodinger_group(schrodinger_group(f, s), t), schrodinger_group(f, t + s), 1e-11)


def test_factorization_against_slicewise_flow_and_shift():
    g = make_grid(16, 16, 16, 6.0, 6.0, 4.0)
    f = random_field(g, 5)
    t = 3 * g.spacing[2]
    kx = np.fft.fftfreq(16, 6.0 / 16) * 2 * np.pi
    sym = np.exp(-1j * t * (kx[:, None] ** 2 + kx[None, :] ** 2))
    slices = np.stack([np.fft.ifft2(np.fft.fft2(f.values[:, :, j]) * sym) for j in range(16)], axis=-1)
    expected = np.roll(slices, 3, axis=2)
    assert close(schrodinger_group(f, t), expected, 1e-12)


def test_gaussian_closed_form():
    g = make_grid(128, 128, 8, 40.0, 40.0, 8.0)
    t = 1.0

    def zf(z):
        return 1.0 + 0.3 * np.cos(2 * np.pi * z / 8.0)

    f = ScalarField.from_function(g, lambda x, y, z: np.exp(-(x**2 + y**2) / 2) * zf(z))
    u = schrodinger_group(f, t).values
    x, y, z = g.mesh()
    a = 1 + 2j * t
    exact = np.exp(-(x**2 + y**2) / (2 * a)) / a * zf(z - t)
    inner = (np.abs(x) < 10) & (np.abs(y) < 10) & np.ones_like(z, bool)
    assert np.max(np.abs(u - exact)[inner]) < 1e-8


def test_wave_sine_basics():
    f = random_field(G, 1)
    assert np.all(wave_sine(f, 0.0).values == 0)
    sym = wave_sine_symbol(G, 0.7)
    assert sym[0, 0, 0] == 0.7 and sym[0, 0, 3] == 0.7
    assert np.all(np.isfinite(sym))


@given(times, st.integers(0, 1000))
def test_wave_bounds_with_constant_one(t, seed):
    f = random_field(G, seed)
    n = f.l2_norm()
    assert wave_sine(f, t).l2_norm() <= abs(t) * n * (1 + 1e-12)
    assert wave_cosine(f, t).l2_norm() <= n * (1 + 1e-12)
    assert perp_sqrt_laplacian(wave_sine(f, t)).l2_norm() <= n * (1 + 1e-12)


@given(times, st.integers(0, 1000))
def test_wave_energy_identity(t, seed):
    f = random_field(G, seed)
    e = wave_cosine(f, t).l2_norm() ** 2 + perp_sqrt_laplacian(wave_sine(f, t)).l2_norm() ** 2
    assert e == pytest.approx(f.l2_norm() ** 2, rel=1e-12)


def test_wave_cosine_identity_at_zero():
    f = random_field(G, 2)
    assert close(wave_cosine(f, 0.0), f, 1e-15)


def test_riesz():
    f = random_field(G, 3)
    assert close(riesz_derivative(f, 0.0, "x"), f, 1e-15)
    half = riesz_derivative(riesz_derivative(f, 0.5, "y"), 0.5, "y")
    assert close(half, riesz_derivative(f, 1.0, "y"))
    k = G.kx[2]
    w = ScalarField.from_function(G, lambda x, y, z: np.exp(1j * k * x) + 0 * y * z)
    assert close(riesz_derivative(w, 0.7, "x"), abs(k) ** 0.7 * w.values)
    const = ScalarField(G, np.ones(G.shape))
    assert close(riesz_derivative(const, 0.3, "z"), np.zeros(G.shape))
    with pytest.raises(ValueError, match="negative"):
        riesz_derivative(f, -0.5)


def test_bessel():
    f = random_field(G, 4)
    const = ScalarField(G, 2.5 * np.ones(G.shape))
    assert close(bessel_potential(f, 0.0), f, 1e-15)
    assert close(bessel_potential(const, 1.3, ("z",)), const)
    assert close(bessel_potential(bessel_potential(f, 1.7, ("x", "y")), -1.7, ("x", "y")), f)


def test_perp_sqrt_laplacian():
    const = ScalarField(G, np.ones(G.shape))
    assert close(perp_sqrt_laplacian(const), np.zeros(G.shape))
    f = random_field(G, 5)
    kx, ky, _ = G.wavenumbers()
    lap = ifft3(fft3(f.values) * (kx**2 + ky**2))
    assert close(perp_sqrt_laplacian(perp_sqrt_laplacian(f)), lap)


@given(times, st.integers(0, 1000), st.integers(0, 3))
def test_group_commutes_with_multipliers(t, seed, k):
    f = random_field(G, seed)
    ops = [
        lambda h: riesz_derivative(h, 0.5, "x"),
        lambda h: bessel_potential(h, 0.75, ("z",)),
        lambda h: dyadic_projection(h, k),
    ]
    for op in ops:
        assert close(schrodinger_group(op(f), t), op(schrodinger_group(f, t)))


def test_dyadic_partition_of_unity():
    g = make_grid(64, 64, 64, 8.0, 8.0, 8.0)
    K = 4
    total = sum(dyadic_symbol(g, k) for k in range(K + 1))
    kx, ky, kz = g.wavenumbers()
    inside = (np.abs(kx) < 2**K) & (np.abs(ky) < 2**K) & (np.abs(kz) < 2**K)
    assert np.max(np.abs(total - 1)[inside]) <= 1e-12


def test_dyadic_plateau_mode_is_fixed():
    g = make_grid(32, 32, 32, 2 * np.pi, 2 * np.pi, 2 * np.pi)
    k = 2
    # |xi|_inf = 5 lies where the level-1 cutoff vanishes and the level-2 cutoff is one
    w = ScalarField.from_function(g, lambda x, y, z: np.exp(1j * (5 * x + 2 * y - z)))
    assert dyadic_symbol(g, k)[5, 2, -1] == 1.0
    assert close(dyadic_projection(w, k, power=2), w)


def test_dyadic_levels_far_apart_are_orthogonal():
    g = make_grid(64, 64, 64, 2 * np.pi * 4 / 3, 2 * np.pi * 4 / 3, 2 * np.pi * 4 / 3)
    rng = np.random.default_rng(0)
    k0 = 3
    modes = (rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape)) * dyadic_symbol(g, k0)
    f = ScalarField(g, ifft3(modes))
    for k in range(0, 6):
        if abs(k - k0) >= 2:
            assert dyadic_projection(f, k).l2_norm() <= 1e-12 * f.l2_norm()


def test_dyadic_rejects_bad_level():
    with pytest.raises(ValueError):
        dyadic_symbol(G, -1)
    with pytest.raises(ValueError):
        dyadic_symbol(G, 1.5)


def test_cube_cutoff_plateau():
    g = make_grid(32, 8, 8, 2 * np.pi, 2 * np.pi, 2 * np.pi)
    c = cube_cutoff(g, 2)
    kx = g.wavenumbers()[0][:, 0, 0]
    assert np.all(c[np.abs(kx) <= 7, 0, 0] == 1.0)
    assert np.all(c[np.abs(kx) >= 8, 0, 0] == 0.0)


def _duhamel_error(nt):
    g = make_grid(32, 32, 8, 16.0, 16.0, 6.0)
    base = ScalarField.from_function(
        g, lambda x, y, z: np.exp(-(x**2 + y**2) / 2) * (1 + 0.5 * np.sin(2 * np.pi * z / 6.0)))
    nu = 1.3
    tg = make_timegrid(0.5, nt)
    G_series = FieldSeries(g, tg, np.exp(1j * nu * tg.nodes)[:, None, None, None] * base.values[None])
    u = schrodinger_duhamel(G_series)
    kx, ky, kz = g.wavenumbers()
    phase = nu + kx**2 + ky**2 + kz
    gh = fft3(base.values)
    t = tg.nodes[-1]
    exact = ifft3(gh * np.exp(-1j * t * (phase - nu)) * (np.exp(1j * phase * t) - 1) / (1j * phase))
    return np.max(np.abs(u.data[-1] - exact)) / np.max(np.abs(exact))


def test_duhamel_matches_closed_form():
    assert _duhamel_error(33) < 2e-7


def test_duhamel_fourth_order():
    e1, e2 = _duhamel_error(17), _duhamel_error(33)
    assert 3.5 < np.log2(e1 / e2) < 4.5


def test_evolve_first_frame_is_data():
    f = random_field(G, 8)
    s = schrodinger_evolve(f, make_timegrid(1.0, 5))
    assert np.array_equal(s.data[0], f.values)
    assert close(s.frame(4), schrodinger_group(f, 1.0))
