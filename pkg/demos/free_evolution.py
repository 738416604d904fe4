"""
A Gaussian under the Schrodinger-transport group
=================================================

The group spreads a packet in x and y like the 2D Schrodinger flow and
carries it rigidly along z at unit speed.
"""
import numpy as np

from dzk.field import ScalarField, make_grid
from dzk.propagators import schrodinger_group

grid = make_grid(64, 64, 32, 24.0, 24.0, 12.0)
f = ScalarField.from_function(grid, lambda x, y, z: np.exp(-(x**2 + y**2 + z**2) / 2))

# the L2 norm is exactly conserved, the peak decays like 1/(1 + 4t^2)^(1/2);
# the sampled max falls slightly short when the centre z = t lies between grid points
for t in (0.0, 0.5, 1.0, 2.0):
    u = schrodinger_group(f, t)
    peak = np.abs(u.values).max()
    zmass = (np.abs(u.values) ** 2).sum(axis=(0, 1))
    z_center = float(np.sum(grid.coords()[2] * zmass) / zmass.sum())
    print(f"t={t:3.1f}  |u|_2={u.l2_norm():.12f}  max|u|={peak:.4f}  "
          f"predicted={1 / np.sqrt(1 + 4 * t**2):.4f}  z-center={z_center:+.2f}")
