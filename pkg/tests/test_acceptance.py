"""Acceptance criteria 1-11 at full size.

Each test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
terminal summary. ``python tests/test_acceptance.py`` prints them directly.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from wavelab import cauchy, causal, green, sections
from wavelab.causal import EventSet
from wavelab.manifold import Grid, desitter_type
from wavelab.operators import metric_pairing, principal_symbol
from wavelab.suites import (
    _plane_wave_error,
    _slab_grid,
    courant_one_grid,
    cylinder_demo,
    gaussian_data,
    operators_for,
    random_bump,
    random_section,
    spacetimes,
    strip_demo,
)

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE  # noqa: E402

SEED = 7
N = 256


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}: {detail}"
    ACCEPTANCE[n] = line
    print(line)
    return ok


def c1_symbols():
    rng = np.random.default_rng([SEED, 1])
    worst = 0.0
    for spec in spacetimes(0.0, 2.0).values():
        for P in operators_for(spec).values():
            for _ in range(100):
                ev = (rng.uniform(0, 2), rng.uniform(0, 2 * math.pi))
                xi = rng.uniform(-1, 1, size=2)
                sig = principal_symbol(P, ev, xi)
                worst = max(worst, float(np.linalg.norm(sig + metric_pairing(spec, ev, xi) * np.eye(P.rank))))
    return report(1, worst <= 1e-12, f"symbol defect {worst:.2e} (<= 1e-12)")


def c2_convergence():
    t0 = time.perf_counter()
    errs = [_plane_wave_error(n) for n in (128, 256, 512)]
    elapsed = time.perf_counter() - t0
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    ok = all(3.5 <= r <= 4.5 for r in ratios) and elapsed < 10
    return report(2, ok, f"error ratios {ratios[0]:.3f}, {ratios[1]:.3f} (in [3.5, 4.5]); {elapsed:.2f} s (< 10 s)")


def c3_propagation():
    rng = np.random.default_rng([SEED, 3])
    worst = 0.0
    for spec in spacetimes(0.0, 2.0).values():
        grid = _slab_grid(spec, N)
        for P in operators_for(spec).values():
            data = gaussian_data(grid, 0, float(rng.uniform(0, 2 * math.pi)), 0.25, derivative=True)
            worst = max(worst, cauchy.propagation_check(cauchy.solve(P, data)))
    return report(3, worst <= 1e-8, f"leakage outside dilated J(K) {worst:.2e} (<= 1e-8)")


def c4_fundamental_solution():
    rng = np.random.default_rng([SEED, 4])
    grid = courant_one_grid(N, N // 2)
    P = operators_for(grid.spec)["box"]
    D = P.discretize(grid)
    x = (grid.Nt // 3, N // 2)
    F = green.fundamental_solution(D, x, "+")
    PF = sections.apply_op_to_distribution(D, F)
    pair = 0.0
    for _ in range(50):
        phi = random_section(grid, rng)
        pair = max(pair, abs(sections.pair(PF, phi)[0] - phi[x][0]) / abs(phi[x][0]))
    dgrid = _slab_grid(desitter_type(0.0, 2.0), N)
    Dd = operators_for(dgrid.spec)["box_conn"].discretize(dgrid)
    xd = (dgrid.Nt // 2, 17)
    PFd = sections.apply_op_to_distribution(Dd, green.fundamental_solution(Dd, xd, "+"))
    for _ in range(50):
        phi = random_section(dgrid, rng)
        pair = max(pair, abs(sections.pair(PFd, phi)[0] - phi[xd][0]) / abs(phi[xd][0]))
    mask = np.zeros(grid.shape, bool)
    mask[x] = True
    leak = green.leakage(F.magnitude()[..., None], grid, mask, "+")
    dx = 2 * math.pi / 32
    smalls = [courant_one_grid(32, 31), Grid(desitter_type(0.0, 31 * 0.8 * dx), 32, (32,), eta=0.8)]
    agree = 0.0
    for small in smalls:
        Ps = operators_for(small.spec)["box_conn"]
        for direction in "+-":
            xs = (small.Nt // 2, 9)
            dense = green.fundamental_solution_dense(Ps, xs, direction, small)
            sweep = green.fundamental_solution_section(Ps, xs, direction, small)
            agree = max(agree, float(np.abs(dense - sweep).max() / np.abs(dense).max()))
    ok = pair <= 1e-11 and leak <= 1e-8 and agree <= 1e-10
    return report(4, ok, f"pairing {pair:.2e} (<= 1e-11), leakage {leak:.2e} (<= 1e-8), "
                         f"dense 32x32 {agree:.2e} (<= 1e-10)")


def c5_adjoint_identity():
    rng = np.random.default_rng([SEED, 5])
    worst = 0.0
    for spec in spacetimes(0.0, 2.0).values():
        grid = _slab_grid(spec, N)
        D = operators_for(spec)["box_conn"].discretize(grid)
        for k in range(50):
            d = green.adjoint_identity_check(D, random_section(grid, rng), random_section(grid, rng), "+-"[k % 2])
            worst = max(worst, d["relative"])
    return report(5, worst <= 1e-11, f"adjoint identity defect {worst:.2e} (<= 1e-11)")


def c6_exact_sequence():
    rng = np.random.default_rng([SEED, 6])
    spec = desitter_type(0.0, 2.0)
    grid = _slab_grid(spec, N)
    D = operators_for(spec)["box_conn"].discretize(grid)
    battery = [random_bump(grid, rng, pad=3) for _ in range(20)]
    es = green.exact_sequence_check(D, battery)
    cpx = max(es.complex_GP, es.complex_PG, es.injectivity)
    ok = cpx <= 1e-11 and es.kernel_image <= 1e-9 and es.splitting_compact and es.splitting <= 1e-9
    return report(6, ok, f"complex {cpx:.2e} (<= 1e-11), kernel/image {es.kernel_image:.2e} (<= 1e-9), "
                         f"splitting {es.splitting:.2e} (<= 1e-9) over {es.count}")


def c7_conformal():
    rng = np.random.default_rng([SEED, 7])
    differing = 0
    checked = 0
    for spec in spacetimes(0.0, 2.0).values():
        grid = _slab_grid(spec, N)
        for _ in range(10):
            A = np.zeros(grid.shape, bool)
            for _ in range(int(rng.integers(1, 5))):
                A[int(rng.integers(grid.Nt)), int(rng.integers(N))] = True
            base = causal.causal_future(A, grid).mask
            for kappa in (1e-3, 1.0, 1e3):
                cgrid = Grid(spec.conformal(kappa), grid.Nt, grid.Nx, grid.eta)
                differing += int(np.count_nonzero(causal.causal_future(A, cgrid).mask != base))
                checked += 1
    return report(7, differing == 0, f"{differing} differing cells over {checked} comparisons (== 0)")


def c8_horizon():
    g = Grid(desitter_type(0.0, 3.0), 4096, (64,))
    r = causal.frontier_radii(g, 0)
    err = 0.0
    for t in (1.0, 2.0, 3.0):
        n = int(np.argmin(np.abs(g.t - t)))
        err = max(err, abs(r[n] - 2 * math.atan(math.tanh(g.t[n] / 2))))
    far = Grid(desitter_type(0.0, 30.0), 4096, (64,))
    rmax = float(causal.frontier_radii(far, 0).max())
    ok = err <= 1e-4 and rmax < math.pi / 2
    return report(8, ok, f"|r - gd| {err:.2e} (<= 1e-4); max radius to t=30 {rmax:.6f} (< pi/2)")


def c9_strip():
    _, _, rep = strip_demo(N)
    res = max(rep.residual_u, rep.residual_uw)
    ok = rep.initial_defect <= 1e-10 and rep.gap >= 1e-2 and res <= 1e-9
    return report(9, ok, f"initial {rep.initial_defect:.2e} (<= 1e-10), gap {rep.gap:.3f} (>= 1e-2), "
                         f"residual {res:.2e} (<= 1e-9)")


def c10_cylinder():
    travel = cylinder_demo(N, traveling=True)["relative_defect"]
    stand = cylinder_demo(N, traveling=False)["relative_defect"]
    ok = travel >= 0.1 and stand <= 1e-6
    return report(10, ok, f"travelling bump {travel:.3f} (>= 0.1), standing wave {stand:.2e} (<= 1e-6)")


def c11_determinism(tmp):
    tmp = Path(tmp)
    blobs = []
    for run in ("a", "b"):
        out = tmp / run
        r = subprocess.run([sys.executable, "-m", "wavelab", "check", "all", "--seed", "7", "--out", str(out)],
                           capture_output=True, text=True)
        blobs.append((r.returncode, (out / "check-all" / "report.json").read_bytes()))
    same = blobs[0][1] == blobs[1][1]
    ok = same and blobs[0][0] == 0
    return report(11, ok, f"byte-identical: {same}; exit code {blobs[0][0]}")


CRITERIA = [c1_symbols, c2_convergence, c3_propagation, c4_fundamental_solution, c5_adjoint_identity,
            c6_exact_sequence, c7_conformal, c8_horizon, c9_strip, c10_cylinder]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(criterion):
    assert criterion()


def test_c11_determinism(tmp_path):
    assert c11_determinism(tmp_path)


if __name__ == "__main__":
    import tempfile

    results = [c() for c in CRITERIA]
    with tempfile.TemporaryDirectory() as d:
        results.append(c11_determinism(d))
    sys.exit(0 if all(results) else 1)
