"""Benchmark the compiled compositing kernel against the numpy fallback.

Usage: python benchmarks/bench_raycast.py [--size 64] [--images 256 512]
"""

import argparse
import os
import time

import numpy as np

from uqvol.render import Camera, TransferFunction, default_camera_for, raycast
from uqvol.render.raycast import _compositing_cy
from uqvol.volume import generate_teardrop


def bench(volume, tf, camera, backend, repeats=3):
    os.environ["UQVOL_BACKEND"] = backend
    try:
        img = raycast(volume, tf, camera)  # warm
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            img = raycast(volume, tf, camera)
            best = min(best, time.perf_counter() - t0)
        return best, img
    finally:
        del os.environ["UQVOL_BACKEND"]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=64, help="volume grid size")
    parser.add_argument("--images", type=int, nargs="+", default=[128, 256, 512])
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    if _compositing_cy is None:
        raise SystemExit("compiled kernel not built; run pip install -e . first")

    volume = generate_teardrop(args.size)
    tf = TransferFunction(
        positions=np.array([0.0, 0.3, 0.65, 1.0]),
        rgba=np.array(
            [[0.0, 0.0, 0.3, 0.0], [0.8, 0.3, 0.1, 0.25], [0.9, 0.8, 0.2, 0.5], [1, 1, 1, 0.9]]
        ),
    )
    threads = os.environ.get("UQVOL_THREADS", "default")
    print(f"volume {args.size}^3, render threads: {threads}")
    print(f"{'image':>10} {'numpy':>12} {'cython':>12} {'speedup':>9} {'max|diff|':>12}")
    for n in args.images:
        camera = default_camera_for(volume.dims, volume.spacing, volume.origin, n, n)
        t_py, img_py = bench(volume, tf, camera, "python", args.repeats)
        t_cy, img_cy = bench(volume, tf, camera, "cython", args.repeats)
        diff = float(np.max(np.abs(img_py.pixels - img_cy.pixels)))
        print(
            f"{n:>7}x{n:<3} {t_py * 1e3:>10.1f}ms {t_cy * 1e3:>10.1f}ms "
            f"{t_py / t_cy:>8.1f}x {diff:>12.2e}"
        )


if __name__ == "__main__":
    main()
