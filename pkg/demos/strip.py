"""Data on a slice of a timelike strip do not determine the solution.

Adding the advanced fundamental solution of an event outside the strip
leaves the equation and the initial data inside the strip untouched but
changes the solution once the event's future cone reaches it.

Run: python demos/strip.py
"""

import numpy as np

from wavelab.suites import strip_demo

sol, other, rep = strip_demo(256)
cols = (sol.grid.x[0] > rep.strip[0]) & (sol.grid.x[0] < rep.strip[1])
gap = np.abs(other.values - sol.values)[:, cols, 0].max(axis=1)

print(f"strip {rep.strip[0]:.3f} < x < {rep.strip[1]:.3f}, outside event at t={rep.x_out[0]:.3f}, x={rep.x_out[1]:.3f}")
print(f"cone enters the strip at slice {rep.entry_slice}")
for n in range(0, sol.grid.Nt, 10):
    print(f"slice {n:3d}  max |u' - u| in strip = {gap[n]:.3e}")
print(f"residuals inside the strip: {rep.residual_u:.1e}, {rep.residual_uw:.1e}")
