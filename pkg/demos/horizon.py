"""Light-cone radius on the cosh-warped slab saturates below pi/2.

Run: python demos/horizon.py
"""

import math

from wavelab.causal import frontier_radii
from wavelab.manifold import Grid, desitter_type

grid = Grid(desitter_type(0.0, 8.0), 4097, (64,))
radii = frontier_radii(grid, 0)

print(f"{'t':>5} {'radius':>10} {'gd(t)':>10} {'pi/2 - r':>10}")
for t in (0.5, 1, 2, 3, 4, 6, 8):
    n = round(t / grid.dt)
    gd = 2 * math.atan(math.tanh(grid.t[n] / 2))
    print(f"{grid.t[n]:5.2f} {radii[n]:10.6f} {gd:10.6f} {math.pi / 2 - radii[n]:10.2e}")
