"""Inner loops over vertex and sample arrays.

Each kernel exists twice: a numba-compiled loop and a vectorized numpy
equivalent.  Set ``HAPSITS_DISABLE_JIT=1`` (or run without numba installed)
to force the numpy path.  Points are unit vectors on the sphere and
proximity is tested by chord length, which needs no trig in the inner loop
and keeps full precision at the km scale.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda func: func


def _env_disabled() -> bool:
    return os.environ.get("HAPSITS_DISABLE_JIT", "").strip().lower() in ("1", "true", "yes", "on")


USE_JIT = HAS_NUMBA and not _env_disabled()

# numpy path: vertices per chunk when scanning outward, pairs per block
_SCAN_CHUNK = 256
_PAIR_BLOCK = 1 << 21


def central_angle_np(lat0, lon0, lat1, lon1):
    """Elementwise central angle (radians) between lat/lon pairs in radians."""
    dlon = lon1 - lon0
    c0, s0 = np.cos(lat0), np.sin(lat0)
    c1, s1 = np.cos(lat1), np.sin(lat1)
    y = np.hypot(c1 * np.sin(dlon), c0 * s1 - s0 * c1 * np.cos(dlon))
    x = s0 * s1 + c0 * c1 * np.cos(dlon)
    return np.arctan2(y, x)


# ---------------------------------------------------------------- numpy path

def first_outside_np(xyz, center, max_chord, start, stop, step):
    idx = np.arange(start, stop, step)
    lim = max_chord * max_chord
    for k in range(0, idx.size, _SCAN_CHUNK):
        chunk = idx[k:k + _SCAN_CHUNK]
        d = xyz[chunk] - center
        hit = np.nonzero(np.einsum("ij,ij->i", d, d) > lim)[0]
        if hit.size:
            return int(chunk[hit[0]])
    return -1


def min_chord_to_nodes_np(samples, nodes):
    out = np.full(samples.shape[0], np.inf)
    if nodes.shape[0] == 0:
        return out
    block = max(1, _PAIR_BLOCK // nodes.shape[0])
    for k in range(0, samples.shape[0], block):
        d = samples[k:k + block, None, :] - nodes[None, :, :]
        out[k:k + block] = np.sqrt(np.einsum("ijk,ijk->ij", d, d).min(axis=1))
    return out


# ---------------------------------------------------------------- numba path

@njit(cache=True)
def first_outside_jit(xyz, center, max_chord, start, stop, step):
    lim = max_chord * max_chord
    cx, cy, cz = center[0], center[1], center[2]
    i = start
    while (step > 0 and i < stop) or (step < 0 and i > stop):
        dx = xyz[i, 0] - cx
        dy = xyz[i, 1] - cy
        dz = xyz[i, 2] - cz
        if dx * dx + dy * dy + dz * dz > lim:
            return i
        i += step
    return -1


@njit(cache=True)
def min_chord_to_nodes_jit(samples, nodes):
    n = samples.shape[0]
    m = nodes.shape[0]
    out = np.empty(n)
    for i in range(n):
        best = np.inf
        sx, sy, sz = samples[i, 0], samples[i, 1], samples[i, 2]
        for j in range(m):
            dx = sx - nodes[j, 0]
            dy = sy - nodes[j, 1]
            dz = sz - nodes[j, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < best:
                best = d2
        out[i] = np.sqrt(best)
    return out


# ---------------------------------------------------------------- dispatch

def first_outside(xyz, center, max_chord, start, stop, step, *, jit=None):
    """Index of the first row of ``xyz`` in ``range(start, stop, step)`` whose
    chord to ``center`` exceeds ``max_chord``, or -1 if none does."""
    if USE_JIT if jit is None else jit:
        return int(first_outside_jit(xyz, np.asarray(center, dtype=np.float64),
                                     float(max_chord), int(start), int(stop), int(step)))
    return first_outside_np(xyz, np.asarray(center), max_chord, start, stop, step)


def min_chord_to_nodes(samples, nodes, *, jit=None):
    """Chord from each sample to its nearest node (unit-sphere units)."""
    samples = np.ascontiguousarray(samples, dtype=np.float64).reshape(-1, 3)
    nodes = np.ascontiguousarray(nodes, dtype=np.float64).reshape(-1, 3)
    if USE_JIT if jit is None else jit:
        if nodes.shape[0] == 0:
            return np.full(samples.shape[0], np.inf)
        return min_chord_to_nodes_jit(samples, nodes)
    return min_chord_to_nodes_np(samples, nodes)
