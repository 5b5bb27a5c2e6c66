"""Projection of geographic positions into the camera's pixel frame.

With zero orientation the optical axis points to the zenith, image ``+x``
points east and image ``+y`` points north (the sky seen from below, north
at the bottom of the frame). Yaw rotates about the optical axis, positive
pitch tilts the axis toward south and positive roll tilts it toward east.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from contrailmatch import geo

DEFAULT_DENSIFY_M = 500.0

RADIAL_MODELS = {
    "equidistant": (lambda th, f: f * th),
    "equisolid": (lambda th, f: 2.0 * f * np.sin(th / 2.0)),
    "stereographic": (lambda th, f: 2.0 * f * np.tan(th / 2.0)),
    "orthographic": (lambda th, f: f * np.sin(th)),
    "pinhole": (lambda th, f: np.where(th < np.pi / 2, f * np.tan(np.minimum(th, 1.5)), np.inf)),
}
"""Radial mapping ``r(theta, f)`` per projection name."""


def _rotation(yaw, pitch, roll):
    y, p, r = np.deg2rad([yaw, pitch, roll])
    rz = np.array([[np.cos(y), -np.sin(y), 0.0], [np.sin(y), np.cos(y), 0.0], [0.0, 0.0, 1.0]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, np.cos(p), -np.sin(p)], [0.0, np.sin(p), np.cos(p)]])
    ry = np.array([[np.cos(r), 0.0, np.sin(r)], [0.0, 1.0, 0.0], [-np.sin(r), 0.0, np.cos(r)]])
    return rz @ rx @ ry


@dataclass(frozen=True)
class CameraModel:
    """Ground camera geometry.

    ``focal_px`` is the radial scale in px/rad, ``(cx, cy)`` the principal
    point and ``margin_px`` how far outside the image a projected point may
    fall before it counts as invisible.
    """

    lat: float
    lon: float
    alt: float
    focal_px: float
    cx: float
    cy: float
    width: int
    height: int
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0
    margin_px: float = 200.0
    projection: str = "equidistant"

    def __post_init__(self):
        if not self.focal_px > 0:
            raise ValueError("focal_px must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ValueError("principal point must lie inside the image")
        if self.projection not in RADIAL_MODELS:
            raise ValueError(f"unknown projection {self.projection!r}")

    @property
    def rotation(self) -> np.ndarray:
        """Columns are the camera x, y, z axes expressed in ENU."""
        return _rotation(self.yaw, self.pitch, self.roll)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "CameraModel":
        return cls(**{k: d[k] for k in d if k in cls.__dataclass_fields__})


def project_enu(cam: CameraModel, enu) -> tuple[np.ndarray, np.ndarray]:
    """Project camera-centred ENU vectors.

    Returns ``(uv, visible)`` with ``uv`` of shape ``(n, 2)``. Points at or
    below the horizon, or beyond the margin, are flagged invisible; their
    ``uv`` is still returned when it is finite.
    """
    enu = np.atleast_2d(np.asarray(enu, dtype=float))
    d = enu @ cam.rotation
    rho = np.hypot(d[:, 0], d[:, 1])
    theta = np.arctan2(rho, d[:, 2])
    phi = np.arctan2(d[:, 1], d[:, 0])
    r = RADIAL_MODELS[cam.projection](theta, cam.focal_px)
    uv = np.column_stack([cam.cx + r * np.cos(phi), cam.cy + r * np.sin(phi)])
    m = cam.margin_px
    visible = (
        (enu[:, 2] > 0.0)
        & np.isfinite(uv).all(axis=1)
        & (uv[:, 0] >= -m)
        & (uv[:, 0] <= cam.width + m)
        & (uv[:, 1] >= -m)
        & (uv[:, 1] <= cam.height + m)
    )
    return uv, visible


def project_points(cam: CameraModel, lat, lon, alt=None, pressure=None):
    """Vectorised projection of geographic points; see :func:`project_enu`."""
    if alt is None:
        if pressure is None:
            raise ValueError("need altitude or pressure")
        alt = geo.pressure_to_altitude(pressure)
    enu = geo.geodetic_to_enu(lat, lon, alt, cam.lat, cam.lon, cam.alt)
    return project_enu(cam, np.reshape(enu, (-1, 3)))


def project(cam: CameraModel, lat: float, lon: float, alt: float | None = None, pressure: float | None = None):
    """Pixel ``(u, v)`` of one point, or ``None`` when it is not visible."""
    uv, vis = project_points(cam, [lat], [lon], None if alt is None else [alt], None if pressure is None else [pressure])
    if not vis[0]:
        return None
    return float(uv[0, 0]), float(uv[0, 1])


def densify_quads(quads: np.ndarray, step_m: float = DEFAULT_DENSIFY_M) -> tuple[np.ndarray, np.ndarray]:
    """Insert vertices along quad edges so no edge exceeds ``step_m``.

    Returns the concatenated ring vertices ``(N, 3)`` and the vertex count
    of each ring.
    """
    quads = np.asarray(quads, dtype=float)
    a = quads
    b = np.roll(quads, -1, axis=1)
    e, n = geo.local_offset_m(a[..., 0], a[..., 1], b[..., 0], b[..., 1])
    pieces = np.maximum(1, np.ceil(np.hypot(e, n) / step_m - 1e-9)).astype(np.int64)
    flat_pieces = pieces.ravel()
    owner = np.repeat(np.arange(flat_pieces.size), flat_pieces)
    first = np.cumsum(flat_pieces) - flat_pieces
    s = (np.arange(owner.size) - first[owner]) / flat_pieces[owner]
    a_flat = a.reshape(-1, 3)[owner]
    b_flat = b.reshape(-1, 3)[owner]
    pts = a_flat + s[:, None] * (b_flat - a_flat)
    return pts, pieces.sum(axis=1)


def project_quads(cam: CameraModel, quads: np.ndarray, densify_step: float = DEFAULT_DENSIFY_M):
    """Project geographic quads; returns ``(polygons, keep)``.

    ``polygons[k]`` is an ``(m, 2)`` pixel ring for every quad where
    ``keep[k]`` is true. A quad is dropped when any vertex is below the
    horizon or when no vertex falls within the visibility margin.
    """
    quads = np.asarray(quads, dtype=float)
    if quads.size == 0:
        return [], np.zeros(0, dtype=bool)
    allpts, sizes = densify_quads(quads, densify_step)
    enu = geo.geodetic_to_enu(allpts[:, 0], allpts[:, 1], geo.pressure_to_altitude(allpts[:, 2]), cam.lat, cam.lon, cam.alt)
    uv, vis = project_enu(cam, enu)
    above = enu[:, 2] > 0.0
    polys = []
    keep = np.zeros(sizes.size, dtype=bool)
    start = 0
    for k, n in enumerate(sizes):
        sl = slice(start, start + n)
        start += n
        if above[sl].all() and vis[sl].any():
            keep[k] = True
            polys.append(uv[sl])
    return polys, keep


def project_polygon(cam: CameraModel, quad, densify_step: float = DEFAULT_DENSIFY_M):
    """Pixel ring for one geographic quad ``(4, 3)``, or ``None`` if invisible."""
    polys, keep = project_quads(cam, np.asarray(quad, dtype=float)[None], densify_step)
    return polys[0] if keep[0] else None
