"""
Seeded input families for the estimate checks.

Members are defined as continuum functions and sampled on whatever grid is
passed in, so the same family on a refined grid gives the same data up to
discretization error. The one exception is ``dyadic-theta``, which is defined
directly by its Fourier transform.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .field import FieldSeries, Grid3, ScalarField, TimeGrid, physical_array
from .propagators import smooth_step

__all__ = ["KINDS", "InputFamily", "theta_hat", "dyadic_theta", "wave_packets"]

KINDS = ("random-bandlimited", "gaussian", "dyadic-theta", "rescaled")


def theta_hat(rho: np.ndarray) -> np.ndarray:
    """Radial profile: 1 on ``1 <= rho <= 2``, 0 for ``rho <= 1/2`` and ``rho >= 4``."""
    return smooth_step(2.0 * rho - 1.0) * smooth_step((4.0 - rho) / 2.0)


def dyadic_theta(grid: Grid3, k: int) -> ScalarField:
    """Datum whose transform is ``theta_hat(|xi| / 2^k)``."""
    kx, ky, kz = grid.wavenumbers()
    rho = np.sqrt(kx**2 + ky**2 + kz**2) / 2.0**k
    if 4 * 2.0**k > np.pi / min(grid.spacing) * 1.0001:
        raise ValueError(f"level k={k} needs |xi| up to {4 * 2**k}; grid resolves {np.pi / min(grid.spacing):.1f}")
    return ScalarField(grid, physical_array(grid, theta_hat(rho).astype(complex)))


def wave_packets(grid: Grid3, packets, z_periodic: bool = False) -> np.ndarray:
    """Sum of ``amp * exp(-|x - c|^2 / (2 w^2) + i freq . (x - c))`` on the grid.

    With ``z_periodic`` the z factor is replaced by ``1 + 0.5 cos(2 pi m z / lz)``,
    ``m`` being the packet's ``zmode`` entry.
    """
    x, y, z = grid.mesh()
    out = np.zeros(grid.shape, dtype=complex)
    for p in packets:
        cx, cy, cz = p["center"]
        fx, fy, fz = p["freq"]
        wx, wz = p["width"], p.get("zwidth", p["width"])
        arg = -((x - cx) ** 2 + (y - cy) ** 2) / (2 * wx**2) + 1j * (fx * (x - cx) + fy * (y - cy))
        if z_periodic:
            zf = 1.0 + 0.5 * np.cos(2 * np.pi * p.get("zmode", 1) * z / grid.lz)
        else:
            zf = np.exp(-((z - cz) ** 2) / (2 * wz**2) + 1j * fz * (z - cz))
        out = out + p["amp"] * np.exp(arg) * zf
    return out


@dataclass(frozen=True)
class InputFamily:
    """Reproducible family of inputs.

    kind : one of ``KINDS``
    count : number of members (ignored for ``gaussian``, ``dyadic-theta`` and
        ``rescaled``, whose members are indexed by ``scales``)
    seed : integer seed; member ``i`` uses the generator seeded with ``(seed, i)``
    scales : widths (``gaussian``), levels ``k`` (``dyadic-theta``) or
        dilation factors ``lambda`` (``rescaled``)
    params : width range, center spread, frequency spread, packet count,
        ``real`` flag and ``z_periodic`` flag
    """

    kind: str
    count: int = 10
    seed: int = 0
    scales: tuple = (1.0,)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be positive")
        object.__setattr__(self, "scales", tuple(self.scales))

    def describe(self) -> str:
        return f"{self.kind}(count={self.count}, seed={self.seed}, scales={list(self.scales)})"

    def _p(self, key, default):
        return self.params.get(key, default)

    def _packets(self, i: int) -> list:
        rng = np.random.default_rng((self.seed, i))
        wlo, whi = self._p("width", (0.8, 1.3))
        spread = self._p("center_spread", 1.5)
        fspread = self._p("freq_spread", 1.5)
        out = []
        for _ in range(int(self._p("packets", 3))):
            out.append({
                "center": tuple(rng.uniform(-spread, spread, 3)),
                "freq": tuple(rng.uniform(-fspread, fspread, 3)),
                "width": float(rng.uniform(wlo, whi)),
                "zwidth": float(rng.uniform(wlo, whi)),
                "amp": complex(rng.normal(), rng.normal()),
                "zmode": int(rng.integers(1, 3)),
            })
        return out

    def _finish(self, grid: Grid3, values: np.ndarray) -> ScalarField:
        if self._p("real", False):
            values = values.real
        return ScalarField(grid, values)

    def members(self) -> list:
        """Input ids, in order."""
        if self.kind == "random-bandlimited":
            return list(range(self.count))
        return list(self.scales)

    def fields(self, grid: Grid3) -> list:
        """``[(input_id, ScalarField), ...]`` sampled on ``grid``."""
        zper = bool(self._p("z_periodic", False))
        out = []
        if self.kind == "random-bandlimited":
            for i in range(self.count):
                out.append((i, self._finish(grid, wave_packets(grid, self._packets(i), zper))))
        elif self.kind == "gaussian":
            for w in self.scales:
                p = {"center": (0.0, 0.0, 0.0), "freq": (0.0, 0.0, 0.0), "width": float(w),
                     "zwidth": float(self._p("zwidth", w)), "amp": 1.0, "zmode": 1}
                out.append((w, self._finish(grid, wave_packets(grid, [p], zper))))
        elif self.kind == "dyadic-theta":
            for k in self.scales:
                out.append((int(k), dyadic_theta(grid, int(k))))
        else:
            base = self._packets(0)
            for lam in self.scales:
                out.append((lam, self._finish(grid, _rescaled(grid, base, float(lam), zper))))
        return out

    def forcings(self, grid: Grid3, timegrid: TimeGrid) -> list:
        """``[(input_id, FieldSeries), ...]``: packets modulated in time by ``exp(i nu t)``."""
        if self.kind != "random-bandlimited":
            raise ValueError("forcings are drawn from random-bandlimited families only")
        zper = bool(self._p("z_periodic", False))
        out = []
        for i in range(self.count):
            rng = np.random.default_rng((self.seed, i, 1))
            packs = self._packets(i)
            t = timegrid.nodes
            data = np.zeros((timegrid.nt, *grid.shape), dtype=complex)
            for p in packs:
                nu = rng.uniform(-2.0, 2.0)
                spatial = wave_packets(grid, [p], zper)
                data += np.exp(1j * nu * t)[:, None, None, None] * spatial[None]
            out.append((i, FieldSeries(grid, timegrid, data)))
        return out


def _rescaled(grid: Grid3, packets: list, lam: float, z_periodic: bool) -> np.ndarray:
    """``f(lam x, lam y, lam^2 z)`` for the packet sum ``f``."""
    scaled = []
    for p in packets:
        q = dict(p)
        cx, cy, cz = p["center"]
        fx, fy, fz = p["freq"]
        q["center"] = (cx / lam, cy / lam, cz / lam**2)
        q["freq"] = (fx * lam, fy * lam, fz * lam**2)
        q["width"] = p["width"] / lam
        q["zwidth"] = p.get("zwidth", p["width"]) / lam**2
        if z_periodic:
            m = p.get("zmode", 1) * lam**2
            if abs(m - round(m)) > 1e-12:
                raise ValueError("periodic z profile needs integer lambda^2")
            q["zmode"] = int(round(m))
        scaled.append(q)
    return wave_packets(grid, scaled, z_periodic)
