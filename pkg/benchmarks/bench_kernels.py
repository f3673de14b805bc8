"""Time the numba and numpy kernel paths side by side.

    python benchmarks/bench_kernels.py [--repeat 5]

Each case runs once to warm the JIT, then takes the best of ``--repeat``
runs per path and checks both paths give the same answer.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from hapsits import _kernels as K
from hapsits.coverage import plan_cover, verify_cover, without_node
from hapsits.geo import to_unit_vectors
from hapsits.route import RoutePolyline, full_mask, straight_route


def best_of(fn, repeat: int) -> tuple[float, object]:
    out = fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def wiggly_route(n_vertices: int, seed: int = 0) -> RoutePolyline:
    rng = np.random.default_rng(seed)
    lon = np.linspace(0.0, 40.0, n_vertices)
    lat = 0.02 * np.cumsum(rng.standard_normal(n_vertices))
    return RoutePolyline.from_points(list(zip(lat, lon)), "wiggly")


def cases():
    rng = np.random.default_rng(1)
    samples = to_unit_vectors(rng.uniform(-30, 30, 200_000), rng.uniform(-30, 30, 200_000))
    nodes = to_unit_vectors(rng.uniform(-30, 30, 60), rng.uniform(-30, 30, 60))
    yield "min_chord 200k x 60", lambda jit: K.min_chord_to_nodes(samples, nodes, jit=jit)

    r = straight_route(4504)
    plan = without_node(plan_cover(r, full_mask(r.length)), 20)
    yield "verify_cover 4504 km @ 0.1 km", lambda jit: verify_cover(plan, 0.1, jit=jit)

    xyz = to_unit_vectors(np.zeros(500_000), np.linspace(0, 40, 500_000))
    yield "first_outside 500k vertices", lambda jit: K.first_outside(xyz, xyz[0], 2.0, 0, xyz.shape[0], 1, jit=jit)

    wr = wiggly_route(20_000)
    yield "plan_cover 20k-vertex route", lambda jit: _plan_with(jit, wr)


def _plan_with(jit: bool, route):
    saved = K.USE_JIT
    K.USE_JIT = jit
    try:
        return plan_cover(route, full_mask(route.length)).count
    finally:
        K.USE_JIT = saved


def same(a, b) -> bool:
    if isinstance(a, np.ndarray):
        return np.allclose(a, b, rtol=1e-12, atol=0)
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not K.HAS_NUMBA:
        print("numba not installed; only the numpy path can run")
    print(f"{'case':34s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}  agree")
    for name, fn in cases():
        t_np, r_np = best_of(lambda: fn(False), args.repeat)
        if K.HAS_NUMBA:
            t_jit, r_jit = best_of(lambda: fn(True), args.repeat)
            print(f"{name:34s} {t_np:10.4f} {t_jit:10.4f} {t_np / t_jit:7.1f}x  {same(r_np, r_jit)}")
        else:
            print(f"{name:34s} {t_np:10.4f} {'-':>10s} {'-':>8s}  -")


if __name__ == "__main__":
    main()
