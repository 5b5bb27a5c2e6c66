"""Hot numeric kernels, each in a numba flavour and a pure-numpy flavour.

Both flavours perform the same floating point operations in the same order,
so they agree bitwise on every platform we test. The public names at the
bottom of the module dispatch on :data:`contrailmatch._accel.USE_NUMBA`.
"""

from __future__ import annotations

import numpy as np

from contrailmatch._accel import USE_NUMBA, njit

__all__ = [
    "interp4d",
    "raster_scanline",
    "zhang_suen",
    "region_distance",
    "KERNELS",
]


# ---------------------------------------------------------------------------
# Quadrilinear interpolation
# ---------------------------------------------------------------------------


def _interp4d_numpy(ax0, ax1, ax2, ax3, fields, q):
    """Interpolate ``fields[f, i0, i1, i2, i3]`` at query points ``q (n, 4)``.

    Queries must already lie inside the axis ranges (callers clamp).
    Returns an ``(n, F)`` array.
    """
    n = q.shape[0]
    nf = fields.shape[0]
    idx = []
    wts = []
    for k, ax in enumerate((ax0, ax1, ax2, ax3)):
        x = q[:, k]
        i = np.searchsorted(ax, x, side="right") - 1
        i = np.minimum(np.maximum(i, 0), ax.shape[0] - 2)
        w = (x - ax[i]) / (ax[i + 1] - ax[i])
        idx.append(i)
        wts.append(w)
    out = np.zeros((n, nf))
    for a in range(2):
        wa = wts[0] if a else 1.0 - wts[0]
        for b in range(2):
            wb = wts[1] if b else 1.0 - wts[1]
            for c in range(2):
                wc = wts[2] if c else 1.0 - wts[2]
                for d in range(2):
                    wd = wts[3] if d else 1.0 - wts[3]
                    wt = wa * wb * wc * wd
                    vals = fields[:, idx[0] + a, idx[1] + b, idx[2] + c, idx[3] + d]
                    out += wt[:, None] * vals.T
    return out


@njit
def _bracket(ax, x):
    # same semantics as searchsorted(side="right") - 1, clipped to a cell
    lo = 0
    hi = ax.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if ax[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    i = lo - 1
    if i < 0:
        i = 0
    if i > ax.shape[0] - 2:
        i = ax.shape[0] - 2
    return i


@njit
def _interp4d_numba(ax0, ax1, ax2, ax3, fields, q):
    n = q.shape[0]
    nf = fields.shape[0]
    out = np.zeros((n, nf))
    for p in range(n):
        i0 = _bracket(ax0, q[p, 0])
        i1 = _bracket(ax1, q[p, 1])
        i2 = _bracket(ax2, q[p, 2])
        i3 = _bracket(ax3, q[p, 3])
        w0 = (q[p, 0] - ax0[i0]) / (ax0[i0 + 1] - ax0[i0])
        w1 = (q[p, 1] - ax1[i1]) / (ax1[i1 + 1] - ax1[i1])
        w2 = (q[p, 2] - ax2[i2]) / (ax2[i2 + 1] - ax2[i2])
        w3 = (q[p, 3] - ax3[i3]) / (ax3[i3 + 1] - ax3[i3])
        for a in range(2):
            wa = w0 if a else 1.0 - w0
            for b in range(2):
                wb = w1 if b else 1.0 - w1
                for c in range(2):
                    wc = w2 if c else 1.0 - w2
                    for d in range(2):
                        wd = w3 if d else 1.0 - w3
                        wt = wa * wb * wc * wd
                        for f in range(nf):
                            out[p, f] += wt * fields[f, i0 + a, i1 + b, i2 + c, i3 + d]
    return out


# ---------------------------------------------------------------------------
# Even-odd scanline rasterization of one polygon (all rings together)
# ---------------------------------------------------------------------------


def _raster_numpy(ex0, ey0, ex1, ey1, ox, oy, pitch, width, height):
    """Mark cells whose centre is inside the rings under the even-odd rule.

    Cell ``(r, c)`` has centre ``(ox + (c + 0.5) * pitch, oy + (r + 0.5) * pitch)``.
    """
    mask = np.zeros((height, width), dtype=np.bool_)
    if ex0.shape[0] == 0:
        return mask
    xc = ox + (np.arange(width) + 0.5) * pitch
    for r in range(height):
        yc = oy + (r + 0.5) * pitch
        hit = (ey0 <= yc) != (ey1 <= yc)
        if not hit.any():
            continue
        x0 = ex0[hit]
        y0 = ey0[hit]
        xs = x0 + (yc - y0) * (ex1[hit] - x0) / (ey1[hit] - y0)
        count = (xs[None, :] > xc[:, None]).sum(axis=1)
        mask[r] = (count & 1) == 1
    return mask


@njit
def _raster_numba(ex0, ey0, ex1, ey1, ox, oy, pitch, width, height):
    mask = np.zeros((height, width), dtype=np.bool_)
    ne = ex0.shape[0]
    xs = np.empty(ne)
    for r in range(height):
        yc = oy + (r + 0.5) * pitch
        m = 0
        for e in range(ne):
            if (ey0[e] <= yc) != (ey1[e] <= yc):
                xs[m] = ex0[e] + (yc - ey0[e]) * (ex1[e] - ex0[e]) / (ey1[e] - ey0[e])
                m += 1
        if m == 0:
            continue
        for c in range(width):
            xc = ox + (c + 0.5) * pitch
            count = 0
            for k in range(m):
                if xs[k] > xc:
                    count += 1
            mask[r, c] = (count & 1) == 1
    return mask


# ---------------------------------------------------------------------------
# Zhang-Suen thinning
# ---------------------------------------------------------------------------


def _zs_neighbours(img):
    # img is zero-padded by one pixel; returns P2..P9 for the interior
    c = img[1:-1, 1:-1]
    p2 = img[:-2, 1:-1]
    p3 = img[:-2, 2:]
    p4 = img[1:-1, 2:]
    p5 = img[2:, 2:]
    p6 = img[2:, 1:-1]
    p7 = img[2:, :-2]
    p8 = img[1:-1, :-2]
    p9 = img[:-2, :-2]
    return c, (p2, p3, p4, p5, p6, p7, p8, p9)


def _zs_numpy(mask):
    img = np.zeros((mask.shape[0] + 2, mask.shape[1] + 2), dtype=np.int8)
    img[1:-1, 1:-1] = mask
    while True:
        changed = False
        for step in range(2):
            c, nb = _zs_neighbours(img)
            p2, p3, p4, p5, p6, p7, p8, p9 = nb
            b = p2 + p3 + p4 + p5 + p6 + p7 + p8 + p9
            seq = (p2, p3, p4, p5, p6, p7, p8, p9, p2)
            a = np.zeros_like(b)
            for k in range(8):
                a += (seq[k] == 0) & (seq[k + 1] == 1)
            if step == 0:
                m1 = p2 * p4 * p6
                m2 = p4 * p6 * p8
            else:
                m1 = p2 * p4 * p8
                m2 = p2 * p6 * p8
            delete = (c == 1) & (b >= 2) & (b <= 6) & (a == 1) & (m1 == 0) & (m2 == 0)
            if delete.any():
                img[1:-1, 1:-1][delete] = 0
                changed = True
        if not changed:
            break
    return img[1:-1, 1:-1].astype(np.bool_)


@njit
def _zs_numba(mask):
    h, w = mask.shape
    img = np.zeros((h + 2, w + 2), dtype=np.int8)
    for r in range(h):
        for c in range(w):
            if mask[r, c]:
                img[r + 1, c + 1] = 1
    rows = np.empty(h * w, dtype=np.int64)
    cols = np.empty(h * w, dtype=np.int64)
    nb = np.empty(9, dtype=np.int8)
    while True:
        changed = False
        for step in range(2):
            m = 0
            for r in range(1, h + 1):
                for c in range(1, w + 1):
                    if img[r, c] != 1:
                        continue
                    nb[0] = img[r - 1, c]
                    nb[1] = img[r - 1, c + 1]
                    nb[2] = img[r, c + 1]
                    nb[3] = img[r + 1, c + 1]
                    nb[4] = img[r + 1, c]
                    nb[5] = img[r + 1, c - 1]
                    nb[6] = img[r, c - 1]
                    nb[7] = img[r - 1, c - 1]
                    nb[8] = nb[0]
                    b = 0
                    a = 0
                    for k in range(8):
                        b += nb[k]
                        if nb[k] == 0 and nb[k + 1] == 1:
                            a += 1
                    if b < 2 or b > 6 or a != 1:
                        continue
                    # nb[0]=P2, nb[2]=P4, nb[4]=P6, nb[6]=P8
                    if step == 0:
                        m1 = nb[0] * nb[2] * nb[4]
                        m2 = nb[2] * nb[4] * nb[6]
                    else:
                        m1 = nb[0] * nb[2] * nb[6]
                        m2 = nb[0] * nb[4] * nb[6]
                    if m1 == 0 and m2 == 0:
                        rows[m] = r
                        cols[m] = c
                        m += 1
            for k in range(m):
                img[rows[k], cols[k]] = 0
            if m > 0:
                changed = True
        if not changed:
            break
    out = np.zeros((h, w), dtype=np.bool_)
    for r in range(h):
        for c in range(w):
            out[r, c] = img[r + 1, c + 1] == 1
    return out


# ---------------------------------------------------------------------------
# Point to filled-region distance
# ---------------------------------------------------------------------------


def _region_numpy(px, py, ex0, ey0, ex1, ey1, epoly, npoly):
    """Distance from each point to the union of filled polygons.

    Edges of polygon ``k`` (all of its rings) carry ``epoly == k``. A point
    inside any polygon (even-odd over that polygon's rings) gets 0.
    """
    n = px.shape[0]
    out = np.empty(n)
    if ex0.shape[0] == 0:
        out[:] = np.inf
        return out
    dx = ex1 - ex0
    dy = ey1 - ey0
    ll = dx * dx + dy * dy
    safe = np.where(ll > 0.0, ll, 1.0)
    onehot = np.zeros((ex0.shape[0], npoly), dtype=np.int64)
    onehot[np.arange(ex0.shape[0]), epoly] = 1
    chunk = max(1, 200_000 // max(1, ex0.shape[0]))
    for s in range(0, n, chunk):
        x = px[s : s + chunk, None]
        y = py[s : s + chunk, None]
        t = ((x - ex0) * dx + (y - ey0) * dy) / safe
        t = np.where(ll > 0.0, t, 0.0)
        t = np.minimum(np.maximum(t, 0.0), 1.0)
        cx = ex0 + t * dx
        cy = ey0 + t * dy
        d = np.sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy))
        dmin = d.min(axis=1)
        hit = (ey0 <= y) != (ey1 <= y)
        xs = np.where(hit, ex0 + (y - ey0) * dx / np.where(hit, dy, 1.0), -np.inf)
        cross = hit & (xs > x)
        parity = (cross.astype(np.int64) @ onehot) & 1
        inside = parity.any(axis=1)
        out[s : s + chunk] = np.where(inside, 0.0, dmin)
    return out


@njit
def _region_numba(px, py, ex0, ey0, ex1, ey1, epoly, npoly):
    n = px.shape[0]
    ne = ex0.shape[0]
    out = np.empty(n)
    counts = np.zeros(npoly, dtype=np.int64)
    for p in range(n):
        x = px[p]
        y = py[p]
        best = np.inf
        for k in range(npoly):
            counts[k] = 0
        for e in range(ne):
            dx = ex1[e] - ex0[e]
            dy = ey1[e] - ey0[e]
            ll = dx * dx + dy * dy
            if ll > 0.0:
                t = ((x - ex0[e]) * dx + (y - ey0[e]) * dy) / ll
            else:
                t = 0.0
            if t < 0.0:
                t = 0.0
            if t > 1.0:
                t = 1.0
            cx = ex0[e] + t * dx
            cy = ey0[e] + t * dy
            d = np.sqrt((x - cx) * (x - cx) + (y - cy) * (y - cy))
            if d < best:
                best = d
            if (ey0[e] <= y) != (ey1[e] <= y):
                xs = ex0[e] + (y - ey0[e]) * dx / dy
                if xs > x:
                    counts[epoly[e]] += 1
        inside = False
        for k in range(npoly):
            if counts[k] & 1:
                inside = True
                break
        out[p] = 0.0 if inside else best
    return out


KERNELS = {
    "interp4d": (_interp4d_numba, _interp4d_numpy),
    "raster_scanline": (_raster_numba, _raster_numpy),
    "zhang_suen": (_zs_numba, _zs_numpy),
    "region_distance": (_region_numba, _region_numpy),
}
"""Kernel name -> (numba flavour, numpy flavour)."""

_pick = 0 if USE_NUMBA else 1

interp4d = KERNELS["interp4d"][_pick]
raster_scanline = KERNELS["raster_scanline"][_pick]
zhang_suen = KERNELS["zhang_suen"][_pick]
region_distance = KERNELS["region_distance"][_pick]
