"""Compare the compiled and pure-Python assembly kernels.

Usage::

    python benchmarks/bench_assembly.py [--levels 2,3] [--repeat 3]

For each level the surface blocks of one manufactured-case step are
assembled with both backends; the script reports the best wall time of
``--repeat`` runs, the speedup and the maximum relative difference of the
results.  The frame evaluation of a deformed sphere is timed as well.
"""
import argparse
import time

import numpy as np

from surfns import fem, kernels
from surfns.bench import DeformCase, ManufacturedCase
from surfns.stepping import RunConfig, initial_state


def best_of(func, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        best = min(best, time.perf_counter() - t0)
    return best, out


def rel_diff(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def surface_blocks(state, backend):
    p, b = state.patches, state.basis or fem.surface_basis(state.mesh, state.patches)
    fr = p.frames
    Q = len(p.weights)
    rng = np.random.default_rng(0)
    c = rng.standard_normal((Q, 3))
    F = rng.standard_normal((Q, 3))
    G = rng.standard_normal(Q)

    def run():
        Ks = kernels.surface_velocity_block(p.offsets, p.weights, b.phi, b.dphi, fr.n, fr.H,
                                            c, fr.w_N, 30.0, 5e-3, 16.0, backend=backend)
        B = kernels.surface_coupling_block(p.offsets, p.weights, b.phi, b.lam, b.gl, fr.n,
                                           F, G, backend=backend)
        return Ks, B[0]
    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", default="2,3")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    case = ManufacturedCase()
    print(f"{'kernel':<22}{'level':>6}{'points':>10}{'cython [s]':>12}"
          f"{'python [s]':>12}{'speedup':>9}{'rel.diff':>10}")
    for level in [int(v) for v in args.levels.split(",")]:
        state = initial_state(case.surface, RunConfig(level=level, dt=0.05 * 2 ** (2 - level)),
                              case.initial_velocity)
        tc, (Kc, Bc) = best_of(surface_blocks(state, "cython"), args.repeat)
        tp, (Kp, Bp) = best_of(surface_blocks(state, "python"), args.repeat)
        diff = max(rel_diff(Kc, Kp), rel_diff(Bc, Bp))
        print(f"{'surface blocks':<22}{level:>6}{len(state.patches.weights):>10}"
              f"{tc:>12.3f}{tp:>12.3f}{tp / tc:>9.1f}{diff:>10.1e}")

        surf = DeformCase.asymmetric().surface
        x = state.patches.points
        tc, fc = best_of(lambda: surf.frames(x, 0.3, check_gradient=False), args.repeat)
        tp, fp = best_of(lambda: surf._frames_numpy(x, 0.3), args.repeat)
        diff = max(rel_diff(fc.n, fp.n), rel_diff(fc.H, fp.H), rel_diff(fc.w_N, fp.w_N))
        print(f"{'harmonic frames':<22}{level:>6}{len(x):>10}"
              f"{tc:>12.3f}{tp:>12.3f}{tp / tc:>9.1f}{diff:>10.1e}")


if __name__ == "__main__":
    main()
