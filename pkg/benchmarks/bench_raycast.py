"""Compare the compiled and pure-Python ray/height-field kernels.

    python3 benchmarks/bench_raycast.py [--size 64] [--repeat 3]

Casts one ray per camera pixel at a cube scene, checks both backends agree,
and prints the best wall time of each.
"""

import argparse
import time

import numpy as np

from rfrecon import raycast
from rfrecon.geometry import PinholeDevice
from rfrecon.scene import cube_surface


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    hf = cube_surface(161, 161, 0.1, 0.1, size=4.0, center_x=0.0, center_y=0.0, angle=0.4, offset=20.0,
                      x0=-8.0, y0=-8.0)
    grid = raycast.SurfaceGrid.from_heightfield(hf)
    n = args.size
    cam = PinholeDevice(n, n, 1.2 * n, 1.2 * n, (n - 1) / 2, (n - 1) / 2)
    u, v = cam.pixel_grid()
    dirs = cam.rays(u, v)
    print(f"{n * n} rays, {hf.width}x{hf.height} height field")

    results = {}
    for backend in ("compiled", "python"):
        try:
            raycast.kernel(backend)
        except RuntimeError:
            print(f"{backend:>9}: unavailable")
            continue
        secs, out = best_time(lambda b=backend: grid.intersect(cam.center, dirs, backend=b), args.repeat)
        results[backend] = (secs, out)
        print(f"{backend:>9}: {secs * 1e3:9.2f} ms")

    if len(results) == 2:
        a, b = results["compiled"][1][0], results["python"][1][0]
        same = np.array_equal(np.isfinite(a), np.isfinite(b)) and np.allclose(a[np.isfinite(a)], b[np.isfinite(b)],
                                                                             rtol=1e-12, atol=0)
        speedup = results["python"][0] / results["compiled"][0]
        print(f"backends agree: {same}; speedup {speedup:.1f}x")


if __name__ == "__main__":
    main()
