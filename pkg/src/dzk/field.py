"""
Periodic grids, spectral transforms and dealiased products.

Whole space is approximated by the box [-lx/2, lx/2) x [-ly/2, ly/2) x
[-lz/2, lz/2) with rapidly decaying data centred at the origin. One Fourier
convention is used everywhere:

    f_hat(xi) = int exp(-i x.xi) f(x) dx,
    f(x)      = (2 pi)^-3 int exp(i x.xi) f_hat(xi) dxi,

discretised as ``f_hat = h * (-1)^(mx+my+mz) * fftn(f)`` with ``h`` the cell
volume; the sign factor accounts for the box origin sitting at the centre.
Under this convention Parseval reads ``h * sum|f|^2 == sum|f_hat|^2 / V``.

Arrays are indexed ``[..., ix, iy, iz]`` (z fastest) and spectral arrays use
FFT ordering of the wavenumbers.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid3",
    "ScalarField",
    "SpectralField",
    "TimeGrid",
    "FieldSeries",
    "Multiplier",
    "make_grid",
    "make_timegrid",
    "to_spectral",
    "from_spectral",
    "apply_multiplier",
    "dealiased_product",
    "dump_field",
    "load_field",
    "write_field",
    "read_field",
    "FieldFormatError",
]

SPATIAL_AXES = (-3, -2, -1)
MAGIC = b"DZK1"
_HEADER = struct.Struct("<4s3Q3d")


def fft3(a: np.ndarray) -> np.ndarray:
    return sfft.fftn(a, axes=SPATIAL_AXES)


def ifft3(a: np.ndarray) -> np.ndarray:
    return sfft.ifftn(a, axes=SPATIAL_AXES)


@dataclass(frozen=True, eq=False)
class Grid3:
    """Rectangular periodic box with per-axis resolution.

    Use :func:`make_grid` to construct; it validates the sizes.
    """

    nx: int
    ny: int
    nz: int
    lx: float
    ly: float
    lz: float
    kx: np.ndarray = field(repr=False)
    ky: np.ndarray = field(repr=False)
    kz: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def lengths(self) -> tuple[float, float, float]:
        return (self.lx, self.ly, self.lz)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.lx / self.nx, self.ly / self.ny, self.lz / self.nz)

    @property
    def cell_volume(self) -> float:
        return (self.lx * self.ly * self.lz) / (self.nx * self.ny * self.nz)

    @property
    def volume(self) -> float:
        return self.lx * self.ly * self.lz

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """1-D node coordinates ``-L/2 + j*L/N`` per axis."""
        return tuple(
            -l / 2 + np.arange(n) * (l / n)
            for n, l in zip(self.shape, self.lengths)
        )

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x, y, z = self.coords()
        return (x[:, None, None], y[None, :, None], z[None, None, :])

    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable (kx, ky, kz) views in FFT order."""
        return (
            self.kx[:, None, None],
            self.ky[None, :, None],
            self.kz[None, None, :],
        )

    def mode_indices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.rint(np.fft.fftfreq(n) * n).astype(int) for n in self.shape)

    @cached_property
    def _phase(self) -> np.ndarray:
        mx, my, mz = self.mode_indices()
        sx = 1 - 2 * (np.abs(mx) % 2)
        sy = 1 - 2 * (np.abs(my) % 2)
        sz = 1 - 2 * (np.abs(mz) % 2)
        phase = (sx[:, None, None] * sy[None, :, None] * sz[None, None, :]).astype(float)
        phase.setflags(write=False)
        return phase

    def origin_phase(self) -> np.ndarray:
        """The (-1)^(mx+my+mz) factor moving the transform origin to the box centre."""
        return self._phase

    @cached_property
    def _mask(self) -> np.ndarray:
        mx, my, mz = self.mode_indices()
        keep = [3 * np.abs(m) < n for m, n in zip((mx, my, mz), self.shape)]
        mask = keep[0][:, None, None] & keep[1][None, :, None] & keep[2][None, None, :]
        mask.setflags(write=False)
        return mask

    def dealias_mask(self) -> np.ndarray:
        """Boolean 2/3-rule mask: keep modes with 3|m| < N on every axis."""
        return self._mask

    def refined(self, factor: int = 2) -> "Grid3":
        """Same box, ``factor`` times more samples per axis."""
        return make_grid(self.nx * factor, self.ny * factor, self.nz * factor,
                         self.lx, self.ly, self.lz)

    def same_as(self, other: "Grid3") -> bool:
        return self.shape == other.shape and self.lengths == other.lengths

    def swapped_xy(self) -> "Grid3":
        return make_grid(self.ny, self.nx, self.nz, self.ly, self.lx, self.lz)


def make_grid(nx: int, ny: int, nz: int, lx: float, ly: float, lz: float) -> Grid3:
    """Build a periodic grid.

    Parameters
    ----------
    nx, ny, nz : int
        Samples per axis; each must be even and at least 4.
    lx, ly, lz : float
        Box side lengths, positive.

    Returns
    -------
    Grid3
        Wavenumbers ``(2 pi / L) * {-N/2, ..., N/2 - 1}`` stored in FFT order.
    """
    sizes = (nx, ny, nz)
    for name, n in zip("xyz", sizes):
        if int(n) != n:
            raise ValueError(f"resolution n{name}={n} is not an integer")
        if n % 2:
            raise ValueError(f"odd resolution n{name}={n}")
        if n < 4:
            raise ValueError(f"resolution n{name}={n} is below 4")
    lengths = (float(lx), float(ly), float(lz))
    for name, length in zip("xyz", lengths):
        if not np.isfinite(length) or length <= 0:
            raise ValueError(f"box length l{name}={length} must be positive")
    ks = []
    for n, length in zip(sizes, lengths):
        k = 2 * np.pi / length * np.rint(np.fft.fftfreq(int(n)) * n)
        k.setflags(write=False)
        ks.append(k)
    return Grid3(int(nx), int(ny), int(nz), *lengths, *ks)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _check_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"non-finite values in {what}")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Complex samples on a grid, ``values[ix, iy, iz]``."""

    grid: Grid3
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        _check_finite(v, "field")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid3, fn: Callable) -> "ScalarField":
        x, y, z = grid.mesh()
        return cls(grid, np.broadcast_to(fn(x, y, z), grid.shape))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self.grid, other.grid)
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self.grid, other.grid)
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c) -> "ScalarField":
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__

    def l2_norm(self) -> float:
        """Rectangle-rule L^2 norm over the box."""
        return float(np.sqrt(self.grid.cell_volume * np.sum(np.abs(self.values) ** 2)))

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(np.max(np.abs(self.values)), 1.0)
        return bool(np.max(np.abs(self.values.imag)) <= tol * scale)

    def swapped_xy(self) -> "ScalarField":
        return ScalarField(self.grid.swapped_xy(), np.swapaxes(self.values, 0, 1))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients ``modes[mx, my, mz]`` in FFT order."""

    grid: Grid3
    modes: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.modes)
        if m.shape != self.grid.shape:
            raise ValueError(f"modes shape {m.shape} does not match grid {self.grid.shape}")
        _check_finite(m, "spectral field")
        object.__setattr__(self, "modes", m)

    def l2_norm(self) -> float:
        """Parseval side of the L^2 norm: ``(sum |f_hat|^2 / V)^(1/2)``."""
        return float(np.sqrt(np.sum(np.abs(self.modes) ** 2) / self.grid.volume))


def _same_grid(a: Grid3, b: Grid3) -> None:
    if not a.same_as(b):
        raise ValueError("grid mismatch")


def spectral_array(grid: Grid3, values: np.ndarray) -> np.ndarray:
    """Forward transform of raw samples with leading batch axes allowed."""
    return grid.cell_volume * grid.origin_phase() * fft3(values)


def physical_array(grid: Grid3, modes: np.ndarray) -> np.ndarray:
    return ifft3(modes * grid.origin_phase()) / grid.cell_volume


def to_spectral(f: ScalarField) -> SpectralField:
    return SpectralField(f.grid, spectral_array(f.grid, f.values))


def from_spectral(F: SpectralField) -> ScalarField:
    return ScalarField(F.grid, physical_array(F.grid, F.modes))


@dataclass(frozen=True)
class Multiplier:
    """Fourier multiplier given by ``symbol(kx, ky, kz)`` on broadcast wavenumbers."""

    symbol: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    name: str = "multiplier"

    def on(self, grid: Grid3) -> np.ndarray:
        values = np.broadcast_to(np.asarray(self.symbol(*grid.wavenumbers())), grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError(f"symbol {self.name!r} is not finite on every grid mode")
        return values

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        a, b = self.symbol, other.symbol
        return Multiplier(lambda kx, ky, kz: a(kx, ky, kz) * b(kx, ky, kz),
                          f"{self.name}*{other.name}")


def apply_multiplier(F: SpectralField, m: Multiplier) -> SpectralField:
    return SpectralField(F.grid, F.modes * m.on(F.grid))


def multiply_physical(grid: Grid3, values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    """Apply a multiplier array to physical samples (batch axes allowed)."""
    return ifft3(fft3(values) * symbol)


def dealias_array(grid: Grid3, values: np.ndarray) -> np.ndarray:
    return ifft3(fft3(values) * grid.dealias_mask())


def dealiased_product_array(grid: Grid3, f: np.ndarray, g: np.ndarray) -> np.ndarray:
    mask = grid.dealias_mask()
    ft = ifft3(fft3(f) * mask)
    gt = ifft3(fft3(g) * mask)
    return ifft3(fft3(ft * gt) * mask)


def dealiased_product(f: ScalarField, g: ScalarField) -> ScalarField:
    """Product of the 2/3-truncations of ``f`` and ``g``, truncated likewise.

    Modes with ``3|m| < N`` on each axis are kept; for those the pointwise
    product equals the exact discrete convolution of the truncated spectra.
    """
    _same_grid(f.grid, g.grid)
    return ScalarField(f.grid, dealiased_product_array(f.grid, f.values, g.values))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Uniform nodes ``t_j = j * t_end / (nt - 1)``."""

    t_end: float
    nt: int

    def __post_init__(self):
        if not (np.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end={self.t_end} must be positive")
        if self.nt < 2:
            raise ValueError(f"nt={self.nt} must be at least 2")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.nt)

    @property
    def dt(self) -> float:
        return self.t_end / (self.nt - 1)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.nt, self.dt)
        w[0] = w[-1] = self.dt / 2
        return w

    def index_of(self, t: float) -> int:
        j = t / self.dt
        jr = int(round(j))
        if abs(j - jr) > 1e-9 or not 0 <= jr < self.nt:
            raise ValueError(f"t={t} is not a node of the time grid")
        return jr

    def cumulative_simpson(self) -> np.ndarray:
        """Weights ``W`` with ``int_0^{t_j} g ~ sum_i W[j, i] g(t_i)``.

        Composite Simpson for even ``j``; Simpson on ``[0, t_{j-3}]`` plus the
        3/8 rule on the last three intervals for odd ``j >= 3``; the first
        interval uses the quadratic through ``t_0, t_1, t_2``.
        """
        n, h = self.nt, self.dt
        W = np.zeros((n, n))
        if n < 3:
            W[1, :2] = h / 2
            return W

        def simpson(row, start, stop):
            for i in range(start, stop, 2):
                row[i] += h / 3
                row[i + 1] += 4 * h / 3
                row[i + 2] += h / 3

        for j in range(1, n):
            row = W[j]
            if j == 1:
                row[:3] = np.array([5.0, 8.0, -1.0]) * h / 12
            elif j % 2 == 0:
                simpson(row, 0, j)
            else:
                simpson(row, 0, j - 3)
                row[j - 3:j + 1] += np.array([1.0, 3.0, 3.0, 1.0]) * 3 * h / 8
        return W

    def restricted(self, nt: int) -> "TimeGrid":
        """Leading ``nt`` nodes as a grid over ``[0, t_{nt-1}]``."""
        return TimeGrid(self.nodes[nt - 1], nt)


def make_timegrid(t_end: float, nt: int) -> TimeGrid:
    return TimeGrid(float(t_end), int(nt))


@dataclass(frozen=True, eq=False)
class FieldSeries:
    """Frames on a shared grid, ``data[j]`` sampled at ``timegrid.nodes[j]``.

    A series with a single frame carries no time axis for norm purposes.
    """

    grid: Grid3
    timegrid: TimeGrid | None
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = _frozen(self.data)
        nt = 1 if self.timegrid is None else self.timegrid.nt
        if d.shape != (nt, *self.grid.shape):
            raise ValueError(f"data shape {d.shape} does not match ({nt}, {self.grid.shape})")
        _check_finite(d, "series")
        object.__setattr__(self, "data", d)

    @property
    def nt(self) -> int:
        return self.data.shape[0]

    def frame(self, j: int) -> ScalarField:
        return ScalarField(self.grid, self.data[j])

    def frames(self) -> list[ScalarField]:
        return [self.frame(j) for j in range(self.nt)]

    @classmethod
    def from_frames(cls, timegrid: TimeGrid | None, frames: list[ScalarField]) -> "FieldSeries":
        grid = frames[0].grid
        for f in frames[1:]:
            _same_grid(grid, f.grid)
        return cls(grid, timegrid, np.stack([f.values for f in frames]))

    @classmethod
    def static(cls, f: ScalarField) -> "FieldSeries":
        return cls(f.grid, None, f.values[None])

    def restricted(self, nt: int) -> "FieldSeries":
        return FieldSeries(self.grid, self.timegrid.restricted(nt), self.data[:nt])

    def __sub__(self, other: "FieldSeries") -> "FieldSeries":
        _same_grid(self.grid, other.grid)
        return FieldSeries(self.grid, self.timegrid, self.data - other.data)

    def __mul__(self, c) -> "FieldSeries":
        return FieldSeries(self.grid, self.timegrid, self.data * c)

    __rmul__ = __mul__

    def swapped_xy(self) -> "FieldSeries":
        return FieldSeries(self.grid.swapped_xy(), self.timegrid, np.swapaxes(self.data, 1, 2))


class FieldFormatError(ValueError):
    pass


def dump_field(f: ScalarField) -> bytes:
    """Serialise to the ``DZK1`` binary layout.

    Header: magic, three little-endian uint64 sizes, three float64 lengths.
    Body: interleaved (re, im) float64 samples, z fastest.
    """
    g = f.grid
    header = _HEADER.pack(MAGIC, g.nx, g.ny, g.nz, g.lx, g.ly, g.lz)
    body = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    return header + body


def load_field(blob: bytes) -> ScalarField:
    if len(blob) < _HEADER.size:
        raise FieldFormatError("truncated header")
    magic, nx, ny, nz, lx, ly, lz = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}")
    expected = _HEADER.size + 16 * nx * ny * nz
    if len(blob) != expected:
        raise FieldFormatError(f"expected {expected} bytes, got {len(blob)}")
    grid = make_grid(nx, ny, nz, lx, ly, lz)
    values = np.frombuffer(blob, dtype="<c16", offset=_HEADER.size).reshape(grid.shape)
    return ScalarField(grid, values)


def write_field(path, f: ScalarField) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_field(f))


def read_field(path) -> ScalarField:
    with open(path, "rb") as fh:
        return load_field(fh.read())
