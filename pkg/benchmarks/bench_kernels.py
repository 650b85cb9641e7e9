"""Time the compiled kernels against the numpy fallback and check they agree.

    python3 benchmarks/bench_kernels.py [--size 128] [--sigma 9] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from shadowpair import kernels
from shadowpair.raster import rgb_to_lab
from shadowpair.synthetic import make_scene


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--sigma", type=float, default=9.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    scene = make_scene(0, size=args.size)
    feat = rgb_to_lab(scene.image)
    radius = int(np.ceil(3 * args.sigma))
    rng = np.random.default_rng(0)
    X = rng.standard_normal((args.size * args.size, 18))
    C = rng.standard_normal((32, 18))

    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the fallback only")
    results = {}
    rows = []
    for b in backends:
        t, dens = best_of(lambda: kernels.quickshift_density(feat, args.sigma, radius, backend=b,
                                                             exact=True), args.repeat)
        rows.append(("density (exact)", b, t))
        results[b, "density"] = dens
        if b == "cython" and kernels._fast_density is not None:
            t, fast = best_of(lambda: kernels.quickshift_density(feat, args.sigma, radius, backend=b),
                              args.repeat)
            rows.append(("density (vector exp)", b, t))
            results[b, "fast"] = fast
        t, par = best_of(lambda: kernels.quickshift_parents(feat, results["python", "density"],
                                                            2 * args.sigma, backend=b), args.repeat)
        rows.append(("parents", b, t))
        results[b, "parents"] = par
        t, lab = best_of(lambda: kernels.nearest_center(X, C, backend=b), args.repeat)
        rows.append(("nearest center", b, t))
        results[b, "nearest"] = lab

    print(f"image {args.size}x{args.size}, sigma {args.sigma}, window {2 * radius + 1}^2")
    print(f"{'kernel':<22}{'backend':<9}{'seconds':>10}")
    for name, b, t in rows:
        print(f"{name:<22}{b:<9}{t:>10.4f}")
    if "cython" in backends:
        ref = results["python", "density"]
        rel = np.max(np.abs(results["cython", "density"] - ref) / ref)
        print(f"exact density max rel diff: {rel:.2e}")
        if ("cython", "fast") in results:
            print(f"vector-exp density max rel diff: {np.max(np.abs(results['cython', 'fast'] - ref) / ref):.2e}")
        print("parents identical:", bool(np.array_equal(results["python", "parents"],
                                                        results["cython", "parents"])))
        print("nearest centers identical:", bool(np.array_equal(results["python", "nearest"],
                                                                results["cython", "nearest"])))


if __name__ == "__main__":
    main()
