"""Advanced fundamental solution of the flat wave operator at Courant number one.

The discrete solution is a checkerboard filling the future cone, so its
local average is the continuum value 1/2. The pairing check confirms
P F+(x) = delta_x on random test sections.

Run: python demos/point_source.py
"""

import numpy as np

from wavelab import green, sections
from wavelab.operators import dalembert
from wavelab.suites import courant_one_grid

grid = courant_one_grid(32, 14)
P = dalembert(grid.spec).discretize(grid)
x = (2, 16)
F = green.fundamental_solution_section(P, x, "+", grid)[..., 0, 0].real

for n in range(grid.Nt - 1, -1, -1):
    print("".join("#" if v > 0.5 else ("*" if (n, i) == x else ".") for i, v in enumerate(F[n])))

half = grid.Nt - 2 - x[0]
print(f"filled fraction across the top of the cone: {F[-1, x[1] - half:x[1] + half + 1].mean():.3f}")

rng = np.random.default_rng(0)
PF = sections.apply_op_to_distribution(P, green.fundamental_solution(P, x, "+"))
for _ in range(3):
    phi = rng.normal(size=grid.shape + (1,))
    print(f"PF[phi] = {sections.pair(PF, phi)[0].real:+.15f}   phi(x) = {phi[x][0]:+.15f}")
