"""Time each hot kernel in its numba and numpy flavours on the same inputs.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Both flavours
are called directly through ``kernels.KERNELS`` so the env flag does not
matter here; the first numba call (compilation) is excluded from timing.
"""

import argparse
import logging
import math
import time

import numpy as np

from contrailmatch import kernels
from contrailmatch._accel import HAVE_NUMBA
from contrailmatch.geometry import pack_edges, rasterize

log = logging.getLogger("bench")


def _ring(rng, cx, cy, length, width):
    ang = rng.uniform(0, math.pi)
    d = np.array([math.cos(ang), math.sin(ang)])
    n = np.array([-d[1], d[0]])
    c = np.array([cx, cy])
    # a wobbly elongated quad with extra vertices along the long sides
    s = np.linspace(-1.0, 1.0, 12)[:, None]
    top = c + s * length * d + width * n + rng.normal(0, 1.0, (12, 2))
    bot = c + s[::-1] * length * d - width * n + rng.normal(0, 1.0, (12, 2))
    return np.vstack([top, bot])


def make_inputs(seed=0):
    rng = np.random.default_rng(seed)
    ax = [np.linspace(0, 7200, 13), np.linspace(150, 350, 9), np.linspace(45, 51, 25), np.linspace(-1, 5, 25)]
    fields = rng.normal(0, 10, (3, 13, 9, 25, 25))
    q = np.column_stack([rng.uniform(a[0], a[-1], 20000) for a in ax])

    rings = [[_ring(rng, rng.uniform(100, 500), rng.uniform(100, 500), rng.uniform(40, 120), 6.0)] for _ in range(8)]
    ex0, ey0, ex1, ey1, owner = pack_edges(rings)
    mask = rasterize(rings, (600, 600)).bits
    pts = rng.uniform(0, 600, (5000, 2))

    return {
        "interp4d": (*ax, fields, q),
        "raster_scanline": (ex0, ey0, ex1, ey1, 0.0, 0.0, 0.5, 1200, 1200),
        "zhang_suen": (mask,),
        "region_distance": (np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]),
                            ex0, ey0, ex1, ey1, owner, len(rings)),
    }


def best_of(fn, args, repeat):
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    if not HAVE_NUMBA:
        log.warning("numba is not importable; the numba column times the plain python fallback")

    inputs = make_inputs(args.seed)
    print(f"{'kernel':<16} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8}  agree")
    for name, (fast, slow) in kernels.KERNELS.items():
        a = inputs[name]
        ref = slow(*a)
        got = fast(*a)  # includes compilation
        agree = np.array_equal(np.asarray(got), np.asarray(ref))
        t_fast = best_of(fast, a, args.repeat)
        t_slow = best_of(slow, a, args.repeat)
        print(f"{name:<16} {t_fast * 1e3:>11.2f} {t_slow * 1e3:>11.2f} {t_slow / t_fast:>7.1f}x  {agree}")


if __name__ == "__main__":
    main()
