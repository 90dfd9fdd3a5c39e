#!/usr/bin/env python3
"""Time the numba kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--size 256] [--repeat 5]
"""
import argparse
import time

import numpy as np

from panedge import kernels
from panedge.synth import SynthParams, generate_scene


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(size):
    rng = np.random.default_rng(0)
    seg = generate_scene(SynthParams(height=size, width=size, max_instances=20, seed=1))
    heat = rng.random((size, size))
    cy, cx = rng.uniform(0, size, (2, 20))
    qy, qx = rng.uniform(0, size, (2, size * size // 8))
    f = rng.normal(size=(8, size // 4, size // 4))
    q, k = rng.normal(size=(2, 4) + f.shape[1:])
    return {
        "edge_mask r=2": lambda impl: impl["edge_mask"](seg, 2),
        "gaussian_max 20 centers": lambda impl: impl["gaussian_max"](cy, cx, size, size, 4.0),
        "nms_peaks window 7": lambda impl: impl["nms_peaks"](heat, 0.1, 7),
        "nearest_center": lambda impl: impl["nearest_center"](qy, qx, cy, cx),
        f"criss_cross_pass {f.shape}": lambda impl: impl["criss_cross_pass"](f, q, k, f),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = ("edge_mask", "gaussian_max", "nms_peaks", "nearest_center", "criss_cross_pass")
    impls = {s: {n: getattr(kernels, f"{n}_{s}") for n in names} for s in ("nb", "np")}

    print(f"{'kernel':32s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for label, run in cases(args.size).items():
        a = run(impls["nb"])  # also triggers compilation
        b = run(impls["np"])
        assert np.allclose(a, b), label
        t_nb = best_of(lambda: run(impls["nb"]), args.repeat)
        t_np = best_of(lambda: run(impls["np"]), args.repeat)
        print(f"{label:32s} {1e3 * t_nb:10.2f} {1e3 * t_np:10.2f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
