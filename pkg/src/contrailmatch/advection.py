"""Dry advection of exhaust parcels into theoretical contrails.

Parcels are released along a flight track at a fixed interval, carried by
the sampled wind with forward Euler steps, and consecutive surviving
parcels are joined into rectangular plume segments.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from contrailmatch import geo
from contrailmatch.errors import DataError
from contrailmatch.met import MetGrid, sample_wind_many

logger = logging.getLogger(__name__)

EMISSION_INTERVAL_S = 10.0
INTEGRATION_STEP_S = 30.0
INITIAL_WIDTH_M = 100.0
WIDTH_GROWTH_M_S = 0.5
DEGENERATE_LENGTH_M = 1.0

_EPS_T = 1e-9


@dataclass(frozen=True, eq=False)
class FlightTrack:
    """Time-ordered positions of one candidate flight."""

    flight_id: str
    t: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    pressure: np.ndarray
    callsign: str | None = None
    aircraft_type: str | None = None

    def __post_init__(self):
        arrays = {}
        for name in ("t", "lat", "lon", "pressure"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            arrays[name] = arr
            object.__setattr__(self, name, arr)
        n = arrays["t"].size
        if n < 2:
            raise DataError(f"flight {self.flight_id}: track needs at least 2 points, got {n}")
        if any(a.shape != (n,) for a in arrays.values()):
            raise DataError(f"flight {self.flight_id}: ragged track arrays")
        if not all(np.all(np.isfinite(a)) for a in arrays.values()):
            raise DataError(f"flight {self.flight_id}: non-finite coordinates")
        if not np.all(np.diff(arrays["t"]) > 0):
            raise DataError(f"flight {self.flight_id}: timestamps not strictly increasing")

    @classmethod
    def from_altitude(cls, flight_id, t, lat, lon, altitude_m, **meta) -> "FlightTrack":
        return cls(flight_id, t, lat, lon, geo.altitude_to_pressure(altitude_m), **meta)

    @property
    def altitude(self) -> np.ndarray:
        return geo.pressure_to_altitude(self.pressure)

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    def position_at(self, t):
        """Linearly interpolated ``(lat, lon, pressure)`` at time(s) ``t``."""
        return (
            np.interp(t, self.t, self.lat),
            np.interp(t, self.t, self.lon),
            np.interp(t, self.t, self.pressure),
        )


@dataclass(frozen=True, eq=False)
class Parcels:
    """Exhaust parcels of one flight, sorted by emission time."""

    flight_id: str
    t_emit: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    pressure: np.ndarray

    def __len__(self) -> int:
        return int(self.t_emit.size)

    def __iter__(self):
        for k in range(len(self)):
            yield float(self.t_emit[k]), (float(self.lat[k]), float(self.lon[k]), float(self.pressure[k]))


@dataclass(frozen=True)
class PlumeSegment:
    formation_time: float
    lat: float
    lon: float
    pressure: float
    length: float
    width: float
    orientation: float
    valid_at: float

    @property
    def center(self) -> tuple[float, float, float]:
        return self.lat, self.lon, self.pressure


@dataclass(frozen=True, eq=False)
class TheoreticalContrail:
    """Advected plume of one flight at one frame time."""

    flight_id: str
    valid_at: float
    formation_time: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    pressure: np.ndarray
    length: np.ndarray
    width: np.ndarray
    orientation: np.ndarray
    n_parcels: int = 0
    n_dropped: int = 0
    segments: list[PlumeSegment] = field(init=False, repr=False)

    def __post_init__(self):
        segs = [
            PlumeSegment(
                float(self.formation_time[k]),
                float(self.lat[k]),
                float(self.lon[k]),
                float(self.pressure[k]),
                float(self.length[k]),
                float(self.width[k]),
                float(self.orientation[k]),
                float(self.valid_at),
            )
            for k in range(self.formation_time.size)
        ]
        object.__setattr__(self, "segments", segs)

    def __len__(self) -> int:
        return int(self.formation_time.size)

    def quads(self, epsilon: float = DEGENERATE_LENGTH_M) -> np.ndarray:
        """Geographic rectangles of all segments, shape ``(n, 4, 3)``."""
        return segments_to_quads(
            self.lat, self.lon, self.pressure, self.length, self.width, self.orientation, epsilon
        )


def emit_parcels(track: FlightTrack, interval: float = EMISSION_INTERVAL_S) -> Parcels:
    """Release parcels at ``t_start, t_start + interval, ...`` up to ``t_end``."""
    if interval <= 0:
        raise ValueError("emission interval must be positive")
    if track.t.size < 2:
        raise DataError(f"flight {track.flight_id}: track needs at least 2 points")
    n = int(np.floor((track.t_end - track.t_start) / interval + _EPS_T)) + 1
    t = track.t_start + np.arange(n) * interval
    lat, lon, p = track.position_at(t)
    return Parcels(track.flight_id, t, lat, lon, p)


def _euler_step(grid: MetGrid, t, lat, lon, p, dt):
    uvw, ok = sample_wind_many(grid, t, p, lat, lon)
    new_lon = lon + uvw[:, 0] * dt / geo.meters_per_deg_lon(lat)
    new_lat = lat + uvw[:, 1] * dt / geo.METERS_PER_DEG_LAT
    new_p = p + uvw[:, 2] * dt / 100.0
    return new_lat, new_lon, new_p, ok


class ParcelTrajectories:
    """Forward Euler trajectories of a parcel set, stored at step nodes.

    Node ``k`` of parcel ``i`` is its state at ``t_emit[i] + k * step``. A
    snapshot at an arbitrary time takes the last node at or before it and
    applies one partial step, which is exactly what integrating from the
    emission time with ``step`` and a short final step would produce.
    """

    def __init__(self, parcels: Parcels, grid: MetGrid, step: float = INTEGRATION_STEP_S, t_max: float | None = None):
        if step <= 0:
            raise ValueError("integration step must be positive")
        self.parcels = parcels
        self.grid = grid
        self.step = float(step)
        t_emit = parcels.t_emit
        if t_max is None:
            t_max = float(t_emit[-1]) if len(parcels) else 0.0
        self.t_max = float(t_max)
        n = len(parcels)
        k_max = int(np.max(self._n_full(self.t_max))) if n else 0
        k_max = max(k_max, 0)
        self.nodes = np.full((k_max + 1, n, 3), np.nan)
        self.nodes[0] = np.column_stack([parcels.lat, parcels.lon, parcels.pressure])
        # a parcel that leaves the domain stays NaN from then on
        for k in range(k_max):
            cur = self.nodes[k]
            live = np.isfinite(cur[:, 0])
            live &= (k + 1) <= self._n_full(self.t_max)
            if not live.any():
                break
            idx = np.flatnonzero(live)
            t_node = t_emit[idx] + k * self.step
            lat, lon, p, ok = _euler_step(self.grid, t_node, cur[idx, 0], cur[idx, 1], cur[idx, 2], self.step)
            self.nodes[k + 1, idx[ok]] = np.column_stack([lat[ok], lon[ok], p[ok]])

    def _n_full(self, t):
        return np.floor((t - self.parcels.t_emit) / self.step + _EPS_T).astype(np.int64)

    def positions_at(self, t: float):
        """Parcel states at time ``t``.

        Returns
        -------
        state : ndarray, shape (n, 3)
            ``(lat, lon, pressure)``; NaN for dropped or unemitted parcels.
        emitted : ndarray of bool
        dropped : ndarray of bool
            Emitted parcels that left the met domain.
        """
        if t > self.t_max + _EPS_T:
            raise ValueError(f"snapshot time {t} beyond integrated horizon {self.t_max}")
        t_emit = self.parcels.t_emit
        n = len(self.parcels)
        state = np.full((n, 3), np.nan)
        emitted = t_emit <= t + _EPS_T
        if not emitted.any():
            return state, emitted, np.zeros(n, dtype=bool)
        idx = np.flatnonzero(emitted)
        k = self._n_full(t)[idx]
        node = self.nodes[k, idx]
        dt = t - (t_emit[idx] + k * self.step)
        live = np.isfinite(node[:, 0])
        partial = live & (dt > 0)
        if partial.any():
            j = np.flatnonzero(partial)
            t_node = t_emit[idx[j]] + k[j] * self.step
            lat, lon, p, ok = _euler_step(self.grid, t_node, node[j, 0], node[j, 1], node[j, 2], dt[j])
            node[j] = np.column_stack([lat, lon, p])
            node[j[~ok]] = np.nan
        live = np.isfinite(node[:, 0])
        if live.any():
            # the final position itself must sit inside the grid
            tq = np.full(live.sum(), t)
            q = np.column_stack([tq, node[live, 2], node[live, 0], node[live, 1]])
            _, ok = self.grid.clamp(q)
            li = np.flatnonzero(live)
            node[li[~ok]] = np.nan
        state[idx] = node
        dropped = emitted & ~np.isfinite(state[:, 0])
        return state, emitted, dropped

    def plume_at(
        self,
        t: float,
        initial_width: float = INITIAL_WIDTH_M,
        width_growth: float = WIDTH_GROWTH_M_S,
    ) -> TheoreticalContrail:
        state, emitted, dropped = self.positions_at(t)
        n_dropped = int(dropped.sum())
        if n_dropped:
            logger.warning("flight %s: %d parcel(s) left the met domain by t=%s", self.parcels.flight_id, n_dropped, t)
        live = emitted & ~dropped
        pair = live[:-1] & live[1:]
        i = np.flatnonzero(pair)
        a = state[i]
        b = state[i + 1]
        east, north = geo.local_offset_m(a[:, 0], a[:, 1], b[:, 0], b[:, 1])
        length = np.hypot(east, north)
        orient = np.mod(np.rad2deg(np.arctan2(east, north)), 360.0)
        orient = np.where(orient >= 360.0, 0.0, orient)
        lat = 0.5 * (a[:, 0] + b[:, 0])
        lon = 0.5 * (a[:, 1] + b[:, 1])
        p = 0.5 * (a[:, 2] + b[:, 2])
        t_form = self.parcels.t_emit[i]
        width = initial_width + width_growth * (t - t_form)
        return TheoreticalContrail(
            self.parcels.flight_id,
            float(t),
            t_form.copy(),
            lat,
            lon,
            p,
            length,
            width,
            orient,
            n_parcels=int(live.sum()),
            n_dropped=n_dropped,
        )


def advect_plume(
    parcels: Parcels,
    grid: MetGrid,
    step: float = INTEGRATION_STEP_S,
    frame_time: float = 0.0,
    initial_width: float = INITIAL_WIDTH_M,
    width_growth: float = WIDTH_GROWTH_M_S,
) -> TheoreticalContrail:
    """Advect every parcel emitted by ``frame_time`` and join neighbours into segments."""
    if len(parcels) == 0 or frame_time < parcels.t_emit[0] - _EPS_T:
        raise ValueError("frame_time precedes the earliest emission")
    traj = ParcelTrajectories(parcels, grid, step, t_max=frame_time)
    return traj.plume_at(frame_time, initial_width, width_growth)


def segments_to_quads(lat, lon, pressure, length, width, orientation, epsilon=DEGENERATE_LENGTH_M):
    """Vectorised :func:`segment_to_polygon`; returns ``(n, 4, 3)`` corners."""
    lat = np.atleast_1d(np.asarray(lat, dtype=float))
    lon = np.atleast_1d(np.asarray(lon, dtype=float))
    pressure = np.atleast_1d(np.asarray(pressure, dtype=float))
    half_l = 0.5 * np.maximum(np.atleast_1d(length), epsilon)
    half_w = 0.5 * np.atleast_1d(np.asarray(width, dtype=float))
    th = np.deg2rad(np.atleast_1d(orientation))
    ax_e, ax_n = np.sin(th), np.cos(th)
    pe, pn = np.cos(th), -np.sin(th)
    out = np.empty((lat.size, 4, 3))
    for c, (sa, sp) in enumerate(((1, 1), (1, -1), (-1, -1), (-1, 1))):
        east = sa * half_l * ax_e + sp * half_w * pe
        north = sa * half_l * ax_n + sp * half_w * pn
        qlat, qlon = geo.offset_latlon(lat, lon, east, north)
        out[:, c, 0] = qlat
        out[:, c, 1] = qlon
        out[:, c, 2] = pressure
    return out


def segment_to_polygon(seg: PlumeSegment, epsilon: float = DEGENERATE_LENGTH_M) -> np.ndarray:
    """Rectangle corners ``(4, 3)`` as ``(lat, lon, pressure)``, long axis along the orientation."""
    return segments_to_quads(seg.lat, seg.lon, seg.pressure, seg.length, seg.width, seg.orientation, epsilon)[0]
