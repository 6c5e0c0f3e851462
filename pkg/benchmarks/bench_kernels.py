"""Benchmark the compiled kernels against the NumPy fallback.

Usage:
    python benchmarks/bench_kernels.py [--quick]

Times the two hot kernels on representative workloads: single-layer matrix
assembly (dominates capacitance solves) and the screened lattice sums
(called ~100x per dispersion root).
"""

import argparse
import time

import numpy as np

import blochcav as bc
from blochcav._kernels import _pure
from blochcav.capacitance import _triangle_pack

try:
    from blochcav._kernels import _fast
except ImportError:
    _fast = None


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_assembly(refinement: int, repeats: int):
    mesh = bc.make_sphere_mesh(1.0, refinement)
    pack = _triangle_pack(mesh)
    targets = np.ascontiguousarray(mesh.centroids)
    n = mesh.n_triangles
    rows = []
    t_pure = best_of(lambda: _pure.potential_entries(targets, *pack, 2.0), repeats)
    rows.append(("pure", t_pure))
    if _fast is not None:
        t_fast = best_of(lambda: _fast.potential_entries(targets, *pack, 2.0), repeats)
        rows.append(("compiled", t_fast))
    print(f"\nsingle-layer assembly, icosphere refinement {refinement} ({n} x {n}):")
    for name, t in rows:
        print(f"  {name:9s} {t * 1e3:9.1f} ms   {n * n / t / 1e6:8.1f} Mentries/s")
    if _fast is not None:
        print(f"  speedup   {rows[0][1] / rows[1][1]:9.2f}x")


def bench_ewald(repeats: int):
    lat = bc.make_lattice([2 * np.pi, 0, 0], [0, 2 * np.pi, 0], [0, 0, 2 * np.pi])
    ctx = bc.make_context(lat, np.array([0.13, 0.21, 0.34]))
    n_eval = 200
    zs = np.linspace(0.01, 0.15, n_eval)

    def run(impl):
        for z in zs:
            impl.ewald_sums(ctx.p2, float(z), ctx.ewald_eta, ctx.rnorm, ctx.coskr)

    rows = [("pure", best_of(lambda: run(_pure), repeats))]
    if _fast is not None:
        rows.append(("compiled", best_of(lambda: run(_fast), repeats)))
    terms = len(ctx.p2) + len(ctx.rnorm)
    print(f"\nscreened lattice sums, {n_eval} evaluations x {terms} terms:")
    for name, t in rows:
        print(f"  {name:9s} {t * 1e3:9.1f} ms   {n_eval / t:8.0f} eval/s")
    if _fast is not None:
        print(f"  speedup   {rows[0][1] / rows[1][1]:9.2f}x")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="small sizes only")
    args = parser.parse_args()

    print(f"active backend: {bc.kernel_backend}"
          + ("" if _fast is not None else " (compiled extension unavailable)"))
    repeats = 2 if args.quick else 3
    bench_assembly(2, repeats)
    bench_assembly(3, repeats)
    if not args.quick:
        bench_assembly(4, repeats)
    bench_ewald(repeats)


if __name__ == "__main__":
    main()
