"""Independent slow reference implementations used as test oracles.

None of these call into the package's kernels; they are written for
clarity, not speed.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def lerp1(xs, ys, x):
    """Linear interpolation on one ascending axis, clamped."""
    x = min(max(x, xs[0]), xs[-1])
    for i in range(len(xs) - 1):
        if xs[i] <= x <= xs[i + 1]:
            f = (x - xs[i]) / (xs[i + 1] - xs[i])
            return ys[i] * (1.0 - f) + ys[i + 1] * f
    raise AssertionError("unreachable")


def nested_lerp(axes, field, q):
    """Quadrilinear value by peeling one axis at a time (last axis first)."""
    if len(axes) == 1:
        return lerp1(axes[0], field, q[0])
    inner = [nested_lerp(axes[1:], field[i], q[1:]) for i in range(len(axes[0]))]
    return lerp1(axes[0], inner, q[0])


def point_in_ring(x, y, ring) -> bool:
    inside = False
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x < xc:
                inside = not inside
    return inside


def point_in_polygon(x, y, rings) -> bool:
    """Even-odd over all rings of one polygon."""
    return sum(point_in_ring(x, y, r) for r in rings) % 2 == 1


def brute_raster(polys, width, height):
    out = np.zeros((height, width), dtype=bool)
    for r in range(height):
        for c in range(width):
            out[r, c] = any(point_in_polygon(c + 0.5, r + 0.5, p) for p in polys)
    return out


def zhang_suen_reference(mask):
    """Literal two-sub-iteration Zhang-Suen, one pixel at a time."""
    img = np.pad(np.asarray(mask, dtype=int), 1)
    while True:
        changed = False
        for step in (0, 1):
            dele = []
            h, w = img.shape
            for r in range(1, h - 1):
                for c in range(1, w - 1):
                    if not img[r, c]:
                        continue
                    p = [img[r - 1, c], img[r - 1, c + 1], img[r, c + 1], img[r + 1, c + 1],
                         img[r + 1, c], img[r + 1, c - 1], img[r, c - 1], img[r - 1, c - 1]]
                    b = sum(p)
                    a = sum(p[i] == 0 and p[(i + 1) % 8] == 1 for i in range(8))
                    p2, _, p4, _, p6, _, p8, _ = p
                    if step == 0:
                        ok = p2 * p4 * p6 == 0 and p4 * p6 * p8 == 0
                    else:
                        ok = p2 * p4 * p8 == 0 and p2 * p6 * p8 == 0
                    if 2 <= b <= 6 and a == 1 and ok:
                        dele.append((r, c))
            for r, c in dele:
                img[r, c] = 0
            changed |= bool(dele)
        if not changed:
            return img[1:-1, 1:-1].astype(bool)


def longest_simple_path_weight(nodes, edges, weights):
    """Exhaustive DFS over all simple paths; returns the maximum weight."""
    adj = {i: [] for i in range(len(nodes))}
    for (a, b), w in zip(edges, weights):
        adj[a].append((b, w))
        adj[b].append((a, w))
    best = 0.0

    def dfs(u, seen, acc):
        nonlocal best
        best = max(best, acc)
        for v, w in adj[u]:
            if v not in seen:
                seen.add(v)
                dfs(v, seen, acc + w)
                seen.remove(v)

    for s in adj:
        dfs(s, {s}, 0.0)
    return best


def tree_diameter_bfs(n, edges, weights):
    """Two weighted sweeps from an arbitrary node (exact on trees)."""
    adj = {i: [] for i in range(n)}
    for (a, b), w in zip(edges, weights):
        adj[a].append((b, w))
        adj[b].append((a, w))

    def far(s):
        dist = {s: 0.0}
        stack = [s]
        while stack:
            u = stack.pop()
            for v, w in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + w
                    stack.append(v)
        k = max(dist, key=dist.get)
        return k, dist[k]

    a, _ = far(0)
    _, d = far(a)
    return d


def seg_point_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def point_region_distance(x, y, polys):
    best = math.inf
    for rings in polys:
        if point_in_polygon(x, y, rings):
            return 0.0
        for r in rings:
            for i in range(len(r)):
                a, b = r[i], r[(i + 1) % len(r)]
                best = min(best, seg_point_distance(x, y, a[0], a[1], b[0], b[1]))
    return best


def fine_hausdorff(lines, polys, delta=0.25):
    """Directed Hausdorff with polylines sampled every ``delta`` px."""
    worst = 0.0
    for ln in lines:
        pts = np.asarray(ln, dtype=float)
        samples = [pts[0]]
        for a, b in zip(pts[:-1], pts[1:]):
            L = math.hypot(*(b - a))
            n = max(1, int(math.ceil(L / delta)))
            for k in range(1, n + 1):
                samples.append(a + (b - a) * k / n)
        for x, y in samples:
            worst = max(worst, point_region_distance(x, y, polys))
    return worst


def best_assignment_total(P):
    """Maximum total over partial one-to-one matchings by enumeration."""
    m, n = P.shape
    best = 0.0
    cols = list(range(n)) + [None] * m
    for perm in itertools.permutations(cols, m):
        used = [c for c in perm if c is not None]
        if len(set(used)) != len(used):
            continue
        tot = sum(P[i, c] for i, c in enumerate(perm) if c is not None)
        best = max(best, tot)
    return best


def fine_step_positions(wind, lat, lon, p, t0, t1, dt=1.0):
    """Forward Euler with a small step; ``wind(t, p, lat, lon) -> (u, v, w)``."""
    t = t0
    while t < t1 - 1e-12:
        h = min(dt, t1 - t)
        u, v, w = wind(t, p, lat, lon)
        lat, lon, p = (
            lat + v * h / 111_320.0,
            lon + u * h / (111_320.0 * math.cos(math.radians(lat))),
            p + w * h / 100.0,
        )
        t += h
    return lat, lon, p
