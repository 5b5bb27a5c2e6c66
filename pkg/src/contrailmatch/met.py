"""Gridded meteorological fields and quadrilinear wind sampling.

Grids are indexed ``[time][level][lat][lon]`` with every axis ascending.
Pressure is interpolated linearly in hPa and longitude is not periodic.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from contrailmatch import kernels
from contrailmatch.errors import LoadError, OutOfDomainError

logger = logging.getLogger(__name__)

MET_FORMAT = "contrailmatch-met"
MET_FORMAT_VERSION = 1

AXES = ("times", "levels", "lats", "lons")
REQUIRED_FIELDS = ("u_wind", "v_wind")
OPTIONAL_FIELDS = ("w_wind", "temperature", "relative_humidity")

DEFAULT_LEVEL_BAND = (200.0, 300.0)
DEFAULT_CLAMP_MARGIN = 0.5


@dataclass(frozen=True)
class WindVector:
    u: float
    v: float
    w: float


@dataclass(frozen=True, eq=False)
class MetGrid:
    """Immutable 4D grid of wind (and optionally temperature) fields.

    Parameters
    ----------
    times, levels, lats, lons : array_like
        Strictly ascending coordinate axes (epoch s, hPa, deg, deg), each
        with at least two nodes.
    u_wind, v_wind : array_like
        Eastward and northward wind in m/s, shape ``(nt, nl, nlat, nlon)``.
    w_wind : array_like, optional
        Vertical velocity in Pa/s, positive downward. Zero when omitted.
    temperature, relative_humidity : array_like, optional
        Carried along but not consumed by the dry advection model.
    clamp_margin : float
        Fraction of the edge cell a query may overshoot before it is
        rejected as out of domain.
    """

    times: np.ndarray
    levels: np.ndarray
    lats: np.ndarray
    lons: np.ndarray
    u_wind: np.ndarray
    v_wind: np.ndarray
    w_wind: np.ndarray | None = None
    temperature: np.ndarray | None = None
    relative_humidity: np.ndarray | None = None
    clamp_margin: float = DEFAULT_CLAMP_MARGIN
    _stack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        axes = {}
        for name in AXES:
            ax = np.ascontiguousarray(getattr(self, name), dtype=float)
            if ax.ndim != 1 or ax.size < 2:
                raise LoadError(f"axis {name} needs at least two nodes")
            if not np.all(np.isfinite(ax)):
                raise LoadError(f"non-finite value in axis: {name}")
            if not np.all(np.diff(ax) > 0):
                raise LoadError(f"non-monotonic axis: {name}")
            axes[name] = ax
            object.__setattr__(self, name, ax)
        shape = tuple(axes[a].size for a in AXES)
        if self.w_wind is None:
            object.__setattr__(self, "w_wind", np.zeros(shape))
        for name in REQUIRED_FIELDS + OPTIONAL_FIELDS:
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr, dtype=float)
            if arr.shape != shape:
                raise LoadError(f"shape mismatch in field {name}: {arr.shape} != {shape}")
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                where = np.unravel_index(bad[0], shape)
                raise LoadError(f"non-finite value in field {name} at index {tuple(int(i) for i in where)}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in AXES:
            getattr(self, name).setflags(write=False)
        stack = np.ascontiguousarray(np.stack([self.u_wind, self.v_wind, self.w_wind]))
        stack.setflags(write=False)
        object.__setattr__(self, "_stack", stack)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.u_wind.shape

    def check_level_band(self, band=DEFAULT_LEVEL_BAND) -> None:
        lo, hi = band
        if self.levels[0] < lo or self.levels[-1] > hi:
            raise LoadError(
                f"levels {self.levels[0]:g}-{self.levels[-1]:g} hPa outside band {lo:g}-{hi:g} hPa"
            )

    def covers_time(self, t0: float, t1: float) -> bool:
        lo, hi = self._bounds(0)
        return lo <= t0 and t1 <= hi

    def _bounds(self, k: int) -> tuple[float, float]:
        ax = getattr(self, AXES[k])
        m = self.clamp_margin
        return ax[0] - m * (ax[1] - ax[0]), ax[-1] + m * (ax[-1] - ax[-2])

    def clamp(self, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Clamp ``(n, 4)`` queries onto the grid; also return the in-domain mask."""
        q = np.array(q, dtype=float, copy=True)
        ok = np.all(np.isfinite(q), axis=1)
        for k, name in enumerate(AXES):
            ax = getattr(self, name)
            lo, hi = self._bounds(k)
            col = q[:, k]
            ok &= (col >= lo) & (col <= hi)
            np.clip(col, ax[0], ax[-1], out=col)
        q[~ok] = [self.times[0], self.levels[0], self.lats[0], self.lons[0]]
        return q, ok


def sample_wind_many(grid: MetGrid, t, p, lat, lon) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised quadrilinear sampling of ``(u, v, w)``.

    Returns
    -------
    uvw : ndarray, shape (n, 3)
        Sampled wind; rows outside the domain are NaN.
    ok : ndarray of bool, shape (n,)
        False where the query overshoots the grid by more than the margin.
    """
    q = np.column_stack(np.broadcast_arrays(*(np.atleast_1d(np.asarray(a, dtype=float)) for a in (t, p, lat, lon))))
    qc, ok = grid.clamp(q)
    out = kernels.interp4d(grid.times, grid.levels, grid.lats, grid.lons, grid._stack, qc)
    out[~ok] = np.nan
    return out, ok


def sample_wind(grid: MetGrid, t: float, p: float, lat: float, lon: float) -> WindVector:
    uvw, ok = sample_wind_many(grid, t, p, lat, lon)
    if not ok[0]:
        raise OutOfDomainError(f"query (t={t}, p={p}, lat={lat}, lon={lon}) outside met grid")
    return WindVector(float(uvw[0, 0]), float(uvw[0, 1]), float(uvw[0, 2]))


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------


def load_met_grid(path, level_band=DEFAULT_LEVEL_BAND, clamp_margin=DEFAULT_CLAMP_MARGIN) -> MetGrid:
    """Read a met grid file; see ``docs/formats.md`` for the grammar.

    Axes stored descending in the file are flipped to ascending together
    with the field data. ``level_band=None`` disables the band check.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise LoadError(f"cannot read met file {path}: {exc}") from exc

    lines = text.splitlines()
    first_block = next((i for i, ln in enumerate(lines) if ln.startswith("@")), len(lines))
    try:
        header = json.loads("\n".join(lines[:first_block]))
    except json.JSONDecodeError as exc:
        raise LoadError(f"malformed header in {path}: {exc}") from exc
    if not isinstance(header, dict):
        raise LoadError(f"malformed header in {path}: not an object")
    if header.get("format", MET_FORMAT) != MET_FORMAT:
        raise LoadError(f"malformed header in {path}: unknown format {header.get('format')!r}")
    if int(header.get("format_version", MET_FORMAT_VERSION)) != MET_FORMAT_VERSION:
        raise LoadError(f"unsupported met format_version {header.get('format_version')}")
    for name in AXES + ("fields",):
        if name not in header:
            raise LoadError(f"malformed header in {path}: missing {name!r}")

    axes = {}
    flips = []
    for k, name in enumerate(AXES):
        try:
            ax = np.asarray(header[name], dtype=float)
        except (TypeError, ValueError) as exc:
            raise LoadError(f"malformed header in {path}: axis {name}: {exc}") from exc
        if ax.ndim != 1 or ax.size < 2:
            raise LoadError(f"axis {name} needs at least two nodes")
        d = np.diff(ax)
        if np.all(d < 0):
            ax = ax[::-1]
            flips.append(k)
        elif not np.all(d > 0):
            raise LoadError(f"non-monotonic axis: {name}")
        axes[name] = ax
    shape = tuple(axes[a].size for a in AXES)
    size = int(np.prod(shape))

    names = list(header["fields"])
    for name in names:
        if name not in REQUIRED_FIELDS + OPTIONAL_FIELDS:
            raise LoadError(f"unknown field {name!r} in {path}")
    for name in REQUIRED_FIELDS:
        if name not in names:
            raise LoadError(f"required field {name} missing from {path}")

    blocks: dict[str, list[str]] = {}
    current = None
    for ln in lines[first_block:]:
        if ln.startswith("@"):
            current = ln[1:].strip()
            if current in blocks:
                raise LoadError(f"duplicate block @{current} in {path}")
            blocks[current] = []
        elif current is not None:
            blocks[current].extend(ln.split())

    fields = {}
    for name in names:
        if name not in blocks:
            raise LoadError(f"field {name} listed in header but no @{name} block")
        try:
            flat = np.array([float(v) for v in blocks[name]])
        except ValueError as exc:
            raise LoadError(f"malformed value in field {name}: {exc}") from exc
        if flat.size != size:
            raise LoadError(f"shape mismatch in field {name}: {flat.size} values, expected {size} for {shape}")
        arr = flat.reshape(shape)
        for k in flips:
            arr = np.flip(arr, axis=k)
        fields[name] = np.ascontiguousarray(arr)

    grid = MetGrid(**axes, **fields, clamp_margin=clamp_margin)
    if level_band is not None:
        grid.check_level_band(level_band)
    logger.debug("loaded met grid %s with shape %s", path, shape)
    return grid


def write_met_grid(grid: MetGrid, path, include_w: bool = True) -> None:
    names = ["u_wind", "v_wind"]
    if include_w:
        names.append("w_wind")
    for name in ("temperature", "relative_humidity"):
        if getattr(grid, name) is not None:
            names.append(name)
    header = {
        "format": MET_FORMAT,
        "format_version": MET_FORMAT_VERSION,
        **{a: [float(x) for x in getattr(grid, a)] for a in AXES},
        "fields": names,
    }
    out = [json.dumps(header)]
    for name in names:
        out.append(f"@{name}")
        flat = np.asarray(getattr(grid, name)).ravel()
        for s in range(0, flat.size, 8):
            out.append(" ".join(repr(float(v)) for v in flat[s : s + 8]))
    Path(path).write_text("\n".join(out) + "\n")
