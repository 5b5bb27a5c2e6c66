"""Pixel-space geometry used for contrail matching.

Pixel ``(x, y)`` is the unit square ``[x, x+1) x [y, y+1)``; its centre is
``(x + 0.5, y + 0.5)``. Polygons are lists of rings (first ring exterior,
further rings holes) and a multipolygon is a list of polygons. A bare
``(k, 2)`` array is accepted wherever a single-ring polygon is expected,
as are shapely polygons.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from contrailmatch import kernels

SQRT2 = math.sqrt(2.0)
DEFAULT_SAMPLE_SPACING = 2.0
DEFAULT_MAX_CYCLE_RANK = 8
_TIE = 1e-9


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class PixelMask:
    """Boolean raster; ``bits[row, col]`` with ``origin`` the pixel offset of ``bits[0, 0]``."""

    bits: np.ndarray
    origin: tuple[int, int] = (0, 0)

    def __post_init__(self):
        self.bits = np.ascontiguousarray(self.bits, dtype=np.bool_)
        if self.bits.ndim != 2:
            raise ValueError("mask bits must be 2-D")

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other):
        return (
            isinstance(other, PixelMask)
            and self.origin == other.origin
            and self.bits.shape == other.bits.shape
            and bool(np.array_equal(self.bits, other.bits))
        )

    @classmethod
    def from_text(cls, text: str) -> "PixelMask":
        """Parse a bitmap drawn with ``#``/``1`` (set) and ``.``/``0`` (clear)."""
        rows = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        width = max(len(r) for r in rows)
        bits = np.zeros((len(rows), width), dtype=bool)
        for i, r in enumerate(rows):
            for j, ch in enumerate(r):
                bits[i, j] = ch in "#1"
        return cls(bits)

    def to_text(self) -> str:
        return "\n".join("".join("#" if b else "." for b in row) for row in self.bits)


@dataclass(eq=False)
class Polyline:
    """Ordered pixel-space points; consecutive points are distinct."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if self.points.shape[0] < 1:
            raise ValueError("polyline needs at least one point")
        if self.points.shape[0] > 1 and np.any(np.all(np.diff(self.points, axis=0) == 0, axis=1)):
            raise ValueError("consecutive polyline points must be distinct")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def length(self) -> float:
        if len(self) < 2:
            return 0.0
        return float(np.hypot(*np.diff(self.points, axis=0).T).sum())


@dataclass(eq=False)
class PixelGraph:
    """Undirected graph over pixels with Euclidean edge weights.

    ``nodes`` holds integer ``(x, y)`` pixel indices, ``edges`` index pairs
    with ``i < j`` and ``weights`` the matching lengths (1 or sqrt 2).
    """

    nodes: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    _adj: list = field(init=False, repr=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.int64).reshape(-1, 2)
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if e.shape[0] != w.shape[0]:
            raise ValueError("one weight per edge required")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        if not np.all(np.isclose(w, 1.0) | np.isclose(w, SQRT2)):
            raise ValueError("edge weights must be 1 or sqrt(2)")
        e = np.sort(e, axis=1)
        self.edges = e
        self.weights = w
        adj = [[] for _ in range(self.nodes.shape[0])]
        seen = set()
        for (i, j), wt in zip(e.tolist(), w.tolist()):
            if (i, j) in seen:
                raise ValueError(f"duplicate edge {(i, j)}")
            seen.add((i, j))
            adj[i].append((j, wt))
            adj[j].append((i, wt))
        self._adj = adj

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def degree(self) -> np.ndarray:
        return np.array([len(a) for a in self._adj], dtype=np.int64)

    def neighbours(self, i: int) -> list[tuple[int, float]]:
        return self._adj[i]

    def components(self) -> list[list[int]]:
        """Connected components as sorted node-index lists, in order of first node."""
        label = np.full(self.n_nodes, -1, dtype=np.int64)
        comps = []
        for s in range(self.n_nodes):
            if label[s] >= 0:
                continue
            label[s] = len(comps)
            stack = [s]
            members = []
            while stack:
                u = stack.pop()
                members.append(u)
                for v, _ in self._adj[u]:
                    if label[v] < 0:
                        label[v] = len(comps)
                        stack.append(v)
            comps.append(sorted(members))
        return comps


# ---------------------------------------------------------------------------
# Polygon plumbing
# ---------------------------------------------------------------------------


def _as_rings(poly) -> list[np.ndarray]:
    if hasattr(poly, "geom_type"):
        if poly.is_empty:
            return []
        if poly.geom_type == "Polygon":
            return [np.asarray(poly.exterior.coords)[:, :2]] + [np.asarray(r.coords)[:, :2] for r in poly.interiors]
        raise TypeError(f"expected a Polygon, got {poly.geom_type}")
    try:
        arr = np.asarray(poly, dtype=float)
    except ValueError:
        arr = None
    if arr is not None and arr.ndim == 2 and arr.shape[1] == 2:
        return [arr]
    if arr is not None and arr.ndim == 3 and arr.shape[2] == 2:
        return [r for r in arr]
    return [np.asarray(r, dtype=float).reshape(-1, 2) for r in poly]


def as_multipolygon(obj) -> list[list[np.ndarray]]:
    """Normalise any supported polygon container into a list of ring lists."""
    if obj is None:
        return []
    if hasattr(obj, "geom_type"):
        if obj.is_empty:
            return []
        if obj.geom_type == "Polygon":
            return [_as_rings(obj)]
        if obj.geom_type in ("MultiPolygon", "GeometryCollection"):
            return [_as_rings(g) for g in obj.geoms if g.geom_type == "Polygon" and not g.is_empty]
        raise TypeError(f"unsupported geometry {obj.geom_type}")
    if isinstance(obj, np.ndarray) and obj.ndim == 2:
        return [[obj.astype(float)]]
    out = []
    for p in obj:
        rings = [r for r in _as_rings(p) if r.shape[0] >= 3]
        if rings:
            out.append(rings)
    return out


def pack_edges(polys) -> tuple[np.ndarray, ...]:
    """Flatten polygons into edge arrays ``(x0, y0, x1, y1, owner)``."""
    x0, y0, x1, y1, owner = [], [], [], [], []
    for k, rings in enumerate(polys):
        for r in rings:
            a = r
            b = np.roll(r, -1, axis=0)
            x0.append(a[:, 0])
            y0.append(a[:, 1])
            x1.append(b[:, 0])
            y1.append(b[:, 1])
            owner.append(np.full(r.shape[0], k, dtype=np.int64))
    if not x0:
        z = np.zeros(0)
        return z, z, z, z, np.zeros(0, dtype=np.int64)
    cat = np.concatenate
    return (
        np.ascontiguousarray(cat(x0)),
        np.ascontiguousarray(cat(y0)),
        np.ascontiguousarray(cat(x1)),
        np.ascontiguousarray(cat(y1)),
        cat(owner),
    )


def polygons_bbox(polys) -> tuple[float, float, float, float] | None:
    pts = [r for rings in polys for r in rings]
    if not pts:
        return None
    allp = np.concatenate(pts)
    return float(allp[:, 0].min()), float(allp[:, 1].min()), float(allp[:, 0].max()), float(allp[:, 1].max())


# ---------------------------------------------------------------------------
# Rasterization and thinning
# ---------------------------------------------------------------------------


def rasterize_window(polys, x0: int, y0: int, width: int, height: int, supersample: int = 1) -> np.ndarray:
    """Rasterize onto a window of the pixel grid, optionally supersampled.

    Returns a ``(height * s, width * s)`` boolean array whose cells are
    ``1/s`` pixel wide, set where the cell centre lies inside any polygon.
    """
    s = int(supersample)
    polys = as_multipolygon(polys)
    out = np.zeros((height * s, width * s), dtype=np.bool_)
    if width <= 0 or height <= 0:
        return out
    pitch = 1.0 / s
    for rings in polys:
        ex0, ey0, ex1, ey1, _ = pack_edges([rings])
        out |= kernels.raster_scanline(ex0, ey0, ex1, ey1, float(x0), float(y0), pitch, width * s, height * s)
    return out


def rasterize(polys, dims: tuple[int, int]) -> PixelMask:
    """Mask of pixels whose centres lie inside any polygon, clipped to ``dims = (width, height)``."""
    width, height = dims
    polys = as_multipolygon(polys)
    bits = np.zeros((height, width), dtype=np.bool_)
    bb = polygons_bbox(polys)
    if bb is None:
        return PixelMask(bits)
    gx0 = max(0, int(math.floor(bb[0])))
    gy0 = max(0, int(math.floor(bb[1])))
    gx1 = min(width, int(math.ceil(bb[2])) + 1)
    gy1 = min(height, int(math.ceil(bb[3])) + 1)
    if gx1 > gx0 and gy1 > gy0:
        bits[gy0:gy1, gx0:gx1] = rasterize_window(polys, gx0, gy0, gx1 - gx0, gy1 - gy0)
    return PixelMask(bits)


# N8 ring starting east, counter-clockwise: (drow, dcol)
_RING = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))


def _is_simple(img: np.ndarray, r: int, c: int) -> bool:
    """Yokoi 8-connectivity number equals 1, so deleting the pixel keeps topology."""
    x = [0 if img[r + dr, c + dc] else 1 for dr, dc in _RING]
    n = sum(x[k] - x[k] * x[(k + 1) % 8] * x[(k + 2) % 8] for k in (0, 2, 4, 6))
    return n == 1


def _break_blocks(img: np.ndarray) -> bool:
    """Delete one simple pixel from each fully set 2x2 block, scanning row-major."""
    changed = False
    while True:
        blocks = img[:-1, :-1] & img[1:, :-1] & img[:-1, 1:] & img[1:, 1:]
        hit = False
        for r, c in zip(*np.nonzero(blocks)):
            if not (img[r, c] and img[r + 1, c] and img[r, c + 1] and img[r + 1, c + 1]):
                continue
            for rr, cc in ((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)):
                if _is_simple(img, rr, cc):
                    img[rr, cc] = False
                    hit = True
                    break
        if not hit:
            return changed
        changed = True


def thin(mask: PixelMask) -> PixelMask:
    """Zhang-Suen thinning plus 2x2 block removal, iterated to a fixed point.

    Plain Zhang-Suen can leave fully set 2x2 blocks on staircase and junction
    configurations. After it converges, one topology-preserving (simple)
    pixel is removed from each such block and thinning resumes. A block whose
    four pixels are all cut points is kept, since removing any of them would
    split the skeleton.
    """
    bits = kernels.zhang_suen(mask.bits)
    img = np.pad(bits, 1)
    while _break_blocks(img):
        img = np.pad(kernels.zhang_suen(img[1:-1, 1:-1]), 1)
    return PixelMask(np.ascontiguousarray(img[1:-1, 1:-1]), mask.origin)


# ---------------------------------------------------------------------------
# Skeleton graph and longest path
# ---------------------------------------------------------------------------

_FORWARD = ((0, 1, 1.0), (1, -1, SQRT2), (1, 0, 1.0), (1, 1, SQRT2))  # (drow, dcol, weight)


def skeleton_to_graph(mask: PixelMask) -> PixelGraph:
    """One node per set pixel, edges between 8-neighbours."""
    bits = mask.bits
    rows, cols = np.nonzero(bits)
    n = rows.size
    index = np.full(bits.shape, -1, dtype=np.int64)
    index[rows, cols] = np.arange(n)
    h, w = bits.shape
    edges = []
    weights = []
    for dr, dc, wt in _FORWARD:
        r2 = rows + dr
        c2 = cols + dc
        ok = (r2 >= 0) & (r2 < h) & (c2 >= 0) & (c2 < w)
        j = np.full(n, -1, dtype=np.int64)
        j[ok] = index[r2[ok], c2[ok]]
        hit = j >= 0
        edges.append(np.column_stack([np.arange(n)[hit], j[hit]]))
        weights.append(np.full(int(hit.sum()), wt))
    nodes = np.column_stack([cols + mask.origin[0], rows + mask.origin[1]])
    if n == 0:
        return PixelGraph(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0))
    return PixelGraph(nodes, np.concatenate(edges), np.concatenate(weights))


@dataclass
class _Chain:
    u: int
    v: int
    pix: list
    ws: list

    @property
    def total(self) -> float:
        return float(sum(self.ws))

    def walk(self, from_u: bool):
        if from_u:
            return self.pix, self.ws
        return self.pix[::-1], self.ws[::-1]


def _key(coords, a, b):
    pa = (int(coords[a][0]), int(coords[a][1]))
    pb = (int(coords[b][0]), int(coords[b][1]))
    return (pa, pb) if pa <= pb else (pb, pa)


def _better(w, key, best):
    if best is None:
        return True
    bw, bkey = best[0], best[1]
    if w > bw + _TIE:
        return True
    return abs(w - bw) <= _TIE and key < bkey


def _sweep(g: PixelGraph, source: int, weighted_tree: bool):
    """Distances and parents from ``source``; Dijkstra unless the component is a tree."""
    dist = {source: 0.0}
    parent = {source: -1}
    if weighted_tree:
        stack = [source]
        while stack:
            u = stack.pop()
            for v, w in g.neighbours(u):
                if v not in dist:
                    dist[v] = dist[u] + w
                    parent[v] = u
                    stack.append(v)
    else:
        heap = [(0.0, source)]
        done = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v, w in g.neighbours(u):
                nd = d + w
                if v not in dist or nd < dist[v] - 1e-12:
                    dist[v] = nd
                    parent[v] = u
                    heapq.heappush(heap, (nd, v))
    return dist, parent


def _farthest(g: PixelGraph, dist) -> int:
    coords = g.nodes
    return max(dist, key=lambda v: (round(dist[v], 9), tuple(-coords[v])))


def _double_sweep(g: PixelGraph, comp: list[int], tree: bool) -> list[int]:
    start = min(comp, key=lambda v: tuple(g.nodes[v]))
    dist, _ = _sweep(g, start, tree)
    a = _farthest(g, dist)
    dist, parent = _sweep(g, a, tree)
    b = _farthest(g, dist)
    path = [b]
    while parent[path[-1]] != -1:
        path.append(parent[path[-1]])
    return path


def _cycle_path(g: PixelGraph, comp: list[int]) -> list[int]:
    # component where every node has degree 2: drop the lightest edge
    start = comp[0]
    order = [start]
    ws = []
    prev, cur = -1, start
    while True:
        nbrs = g.neighbours(cur)
        nxt = [(v, w) for v, w in nbrs if v != prev]
        v, w = nxt[0]
        if v == start and len(order) > 2:
            ws.append(w)
            break
        if v == start:
            v, w = nxt[1] if len(nxt) > 1 else nxt[0]
        order.append(v)
        ws.append(w)
        prev, cur = cur, v
    n = len(order)
    wmin = min(ws)
    best = None
    for k, w in enumerate(ws):
        if abs(w - wmin) > _TIE:
            continue
        # edge k joins order[k] and order[(k+1) % n]
        a, b = order[(k + 1) % n], order[k]
        key = _key(g.nodes, a, b)
        if best is None or key < best[0]:
            best = (key, k)
    k = best[1]
    return [order[(k + 1 + i) % n] for i in range(n)]


def _chains(g: PixelGraph, comp: list[int], deg) -> tuple[list[int], list[_Chain]]:
    keys = [v for v in comp if deg[v] != 2]
    chains = []
    done = set()
    for u in keys:
        for nb, w in g.neighbours(u):
            if (u, nb) in done:
                continue
            pix = [u, nb]
            ws = [w]
            prev, cur = u, nb
            while deg[cur] == 2:
                (a, wa), (b, wb) = g.neighbours(cur)
                nxt, wn = (b, wb) if a == prev else (a, wa)
                pix.append(nxt)
                ws.append(wn)
                prev, cur = cur, nxt
            done.add((u, pix[1]))
            done.add((pix[-1], pix[-2]))
            chains.append(_Chain(u, pix[-1], pix, ws))
    return keys, chains


def _exact_path(g: PixelGraph, comp: list[int], deg) -> list[int]:
    """Exhaustive longest simple path over the junction graph.

    Degree-2 runs are contracted into chains. A maximal path is a simple
    path between junction/end nodes, optionally extended at either end
    into an unused chain whose far end is already on the path (stopping one
    pixel short of it).
    """
    coords = g.nodes
    keys, chains = _chains(g, comp, deg)
    inc: dict[int, list[int]] = {v: [] for v in keys}
    for ci, c in enumerate(chains):
        inc[c.u].append(ci)
        if c.v != c.u:
            inc[c.v].append(ci)

    def partial_options(node, visited, used):
        # (chain, start at u?, edges covered, gain, far pixel)
        opts = []
        for ci in inc[node]:
            if ci in used:
                continue
            c = chains[ci]
            if len(c.ws) < 2:
                continue
            ends = []
            if c.u == node and c.v in visited:
                ends.append(True)
            if c.v == node and c.u in visited:
                ends.append(False)
            for from_u in ends:
                pix, ws = c.walk(from_u)
                opts.append((ci, from_u, len(ws) - 1, c.total - ws[-1], pix[-2]))
        return opts

    best = None

    def evaluate(s, t, visited, used, core, weight):
        nonlocal best
        tails = partial_options(t, visited, used)
        heads = partial_options(s, visited, used)
        cands = [(weight, s, t, None, None)]
        for o in tails:
            cands.append((weight + o[3], s, o[4], None, o))
        for o in heads:
            cands.append((weight + o[3], o[4], t, o, None))
        for ho in heads:
            for to in tails:
                if ho[0] != to[0]:
                    cands.append((weight + ho[3] + to[3], ho[4], to[4], ho, to))
        # both ends inside the same chain, leaving one edge uncovered
        for ci in inc[t]:
            if ci in used:
                continue
            c = chains[ci]
            if len(c.ws) < 2 or {c.u, c.v} != {s, t}:
                continue
            t_from_u = c.u == t
            pix, ws = c.walk(t_from_u)
            wmin = min(ws)
            for gap, wg in enumerate(ws):
                if abs(wg - wmin) > _TIE:
                    continue
                # tail covers edges [0, gap), head covers (gap, end] walked from s
                m = len(ws)
                to = (ci, t_from_u, gap, None, pix[gap])
                ho = (ci, not t_from_u, m - 1 - gap, None, pix[gap + 1])
                cands.append((weight + c.total - wg, ho[4], to[4], ho, to))
        for w, a, b, ho, to in cands:
            key = _key(coords, a, b)
            if _better(w, key, best):
                best = (w, key, s, list(core), ho, to)

    def dfs(s, node, visited, used, core, weight):
        evaluate(s, node, visited, used, core, weight)
        for ci in inc[node]:
            if ci in used:
                continue
            c = chains[ci]
            if c.u == c.v:
                continue
            nxt = c.v if c.u == node else c.u
            if nxt in visited:
                continue
            visited.add(nxt)
            used.add(ci)
            core.append((ci, c.u == node))
            dfs(s, nxt, visited, used, core, weight + c.total)
            core.pop()
            used.discard(ci)
            visited.discard(nxt)

    for s in keys:
        dfs(s, s, {s}, set(), [], 0.0)

    _, _, s, core, ho, to = best
    path = [s]
    for ci, from_u in core:
        pix, _ = chains[ci].walk(from_u)
        path.extend(pix[1:])
    if to is not None:
        pix, _ = chains[to[0]].walk(to[1])
        path.extend(pix[1 : to[2] + 1])
    if ho is not None:
        pix, _ = chains[ho[0]].walk(ho[1])
        path = pix[1 : ho[2] + 1][::-1] + path
    return path


def _without_shortcuts(g: PixelGraph, comp: list[int]) -> tuple[PixelGraph, list[int]]:
    """Sub-graph of ``comp`` minus diagonal edges that close a triangle with two unit edges."""
    members = set(comp)
    unit = {v: {u for u, w in g.neighbours(v) if w == 1.0} for v in comp}
    sub = {v: k for k, v in enumerate(comp)}
    edges, weights = [], []
    for v in comp:
        for u, w in g.neighbours(v):
            if u < v or u not in members:
                continue
            if w != 1.0 and unit[v] & unit[u]:
                continue
            edges.append((sub[v], sub[u]))
            weights.append(w)
    return PixelGraph(g.nodes[comp], np.array(edges).reshape(-1, 2), np.array(weights)), comp


def _component_path(g: PixelGraph, comp: list[int], max_cycle_rank: int) -> list[int]:
    if len(comp) == 1:
        return comp
    deg = g.degree()
    n_edges = int(deg[comp].sum()) // 2
    rank = n_edges - len(comp) + 1
    if rank == 0:
        return _double_sweep(g, comp, tree=True)
    if all(deg[v] == 2 for v in comp):
        return _cycle_path(g, comp)
    if rank <= max_cycle_rank:
        return _exact_path(g, comp, deg)
    # corner shortcuts inflate the cycle rank of 8-connected skeletons; dropping
    # them keeps every pixel reachable and usually brings the search back in range
    h, back = _without_shortcuts(g, comp)
    if h.edges.shape[0] - h.n_nodes + 1 <= max_cycle_rank and len(h.components()) == 1:
        return [back[v] for v in _component_path(h, list(range(h.n_nodes)), max_cycle_rank)]
    return _double_sweep(g, comp, tree=False)


def _path_weight(g: PixelGraph, path: list[int]) -> float:
    pts = g.nodes[path].astype(float)
    if len(path) < 2:
        return 0.0
    return float(np.hypot(*np.diff(pts, axis=0).T).sum())


def longest_path_nodes(g: PixelGraph, max_cycle_rank: int = DEFAULT_MAX_CYCLE_RANK) -> list[int]:
    """Node indices of the longest path of the largest component."""
    if g.n_nodes == 0:
        raise ValueError("longest_path of an empty graph")
    best = None
    for comp in g.components():
        path = _component_path(g, comp, max_cycle_rank)
        score = (len(comp), round(_path_weight(g, path), 9))
        if best is None or score > best[0]:
            best = (score, path)
    path = best[1]
    if tuple(g.nodes[path[-1]]) < tuple(g.nodes[path[0]]):
        path = path[::-1]
    return path


def longest_path(g: PixelGraph, max_cycle_rank: int = DEFAULT_MAX_CYCLE_RANK) -> Polyline:
    """Maximum-weight simple path as a polyline through pixel centres.

    Trees use the exact double sweep, components whose cycle rank is at most
    ``max_cycle_rank`` an exhaustive search over the junction graph. Beyond
    that, diagonal corner shortcuts are dropped and the search retried on
    the sparser graph; anything still too tangled falls back to a
    shortest-path double sweep. Both fallbacks are heuristics.
    """
    path = longest_path_nodes(g, max_cycle_rank)
    return Polyline(g.nodes[path].astype(float) + 0.5)


def centerlines(polys, dims: tuple[int, int] | None = None, max_cycle_rank: int = DEFAULT_MAX_CYCLE_RANK) -> list[Polyline]:
    """Skeleton centreline of each polygon, processed independently.

    Each polygon is rasterized on its own bounding window (clipped to
    ``dims`` when given), thinned, turned into a pixel graph and reduced to
    its longest path. Polygons covering no pixel centre are skipped.
    """
    out = []
    for rings in as_multipolygon(polys):
        bb = polygons_bbox([rings])
        x0 = int(math.floor(bb[0]))
        y0 = int(math.floor(bb[1]))
        x1 = int(math.ceil(bb[2])) + 1
        y1 = int(math.ceil(bb[3])) + 1
        if dims is not None:
            x0, y0 = max(0, x0), max(0, y0)
            x1, y1 = min(dims[0], x1), min(dims[1], y1)
        if x1 <= x0 or y1 <= y0:
            continue
        bits = rasterize_window([rings], x0, y0, x1 - x0, y1 - y0)
        if not bits.any():
            continue
        skel = thin(PixelMask(bits, (x0, y0)))
        if not skel.bits.any():
            # thinning erases tiny blobs such as a 2x2 square; keep their most central pixel
            rows, cols = np.nonzero(bits)
            k = int(np.argmin((rows - rows.mean()) ** 2 + (cols - cols.mean()) ** 2))
            out.append(Polyline(np.array([[x0 + cols[k] + 0.5, y0 + rows[k] + 0.5]])))
            continue
        out.append(longest_path(skeleton_to_graph(skel), max_cycle_rank))
    return out


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------


def sample_polylines(lines, spacing: float = DEFAULT_SAMPLE_SPACING) -> np.ndarray:
    """Vertices plus points every ``spacing`` px along each segment."""
    if isinstance(lines, (Polyline, np.ndarray)):
        lines = [lines]
    chunks = []
    for ln in lines:
        pts = ln.points if isinstance(ln, Polyline) else np.asarray(ln, dtype=float).reshape(-1, 2)
        if pts.shape[0] == 0:
            continue
        chunks.append(pts)
        if pts.shape[0] < 2:
            continue
        a = pts[:-1]
        d = np.diff(pts, axis=0)
        seg = np.hypot(d[:, 0], d[:, 1])
        k = np.floor(seg / spacing - 1e-12).astype(np.int64)
        k = np.maximum(k, 0)
        # interior points strictly between the two vertices
        k = np.where(k * spacing >= seg - 1e-12, k - 1, k)
        k = np.maximum(k, 0)
        if k.sum() == 0:
            continue
        owner = np.repeat(np.arange(a.shape[0]), k)
        first = np.cumsum(k) - k
        step = np.arange(owner.size) - first[owner] + 1
        frac = step * spacing / seg[owner]
        chunks.append(a[owner] + frac[:, None] * d[owner])
    if not chunks:
        return np.zeros((0, 2))
    return np.concatenate(chunks)


def point_region_distance(points, polys) -> np.ndarray:
    """Euclidean distance from each point to the filled union of ``polys``."""
    polys = as_multipolygon(polys)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    ex0, ey0, ex1, ey1, owner = pack_edges(polys)
    return kernels.region_distance(
        np.ascontiguousarray(pts[:, 0]), np.ascontiguousarray(pts[:, 1]), ex0, ey0, ex1, ey1, owner, max(1, len(polys))
    )


def directed_hausdorff(a, b, spacing: float = DEFAULT_SAMPLE_SPACING, cutoff: float | None = None) -> float:
    """Directed Hausdorff distance from polylines ``a`` to the region ``b``.

    The maximum over samples of ``a`` of the distance to the nearest point
    of the filled polygons ``b``. With ``cutoff`` set, any result above the
    cutoff may be reported as ``inf`` (used to skip hopeless pairs early).
    Empty ``b`` gives ``inf``.
    """
    polys = as_multipolygon(b)
    samples = sample_polylines(a, spacing)
    if samples.shape[0] == 0:
        raise ValueError("directed_hausdorff needs a non-empty source geometry")
    if not polys:
        return math.inf
    if cutoff is not None:
        sx0, sy0 = samples.min(axis=0)
        sx1, sy1 = samples.max(axis=0)
        kept = []
        for rings in polys:
            bx0, by0, bx1, by1 = polygons_bbox([rings])
            gap_x = max(bx0 - sx1, sx0 - bx1, 0.0)
            gap_y = max(by0 - sy1, sy0 - by1, 0.0)
            if math.hypot(gap_x, gap_y) <= cutoff:
                kept.append(rings)
        if not kept:
            return math.inf
        polys = kept
        bx0, by0, bx1, by1 = polygons_bbox(polys)
        dx = np.maximum(np.maximum(bx0 - samples[:, 0], samples[:, 0] - bx1), 0.0)
        dy = np.maximum(np.maximum(by0 - samples[:, 1], samples[:, 1] - by1), 0.0)
        if float(np.hypot(dx, dy).max()) > cutoff:
            return math.inf
    return float(point_region_distance(samples, polys).max())


def iou(a, b, supersample: int = 1) -> float:
    """Intersection over union of two multipolygons computed on rasters."""
    pa = as_multipolygon(a)
    pb = as_multipolygon(b)
    bb = polygons_bbox(pa + pb)
    if bb is None:
        return 0.0
    x0, y0 = int(math.floor(bb[0])), int(math.floor(bb[1]))
    w = int(math.ceil(bb[2])) + 1 - x0
    h = int(math.ceil(bb[3])) + 1 - y0
    ma = rasterize_window(pa, x0, y0, w, h, supersample)
    mb = rasterize_window(pb, x0, y0, w, h, supersample)
    union = int((ma | mb).sum())
    if union == 0:
        return 0.0
    return int((ma & mb).sum()) / union
