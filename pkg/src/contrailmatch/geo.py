"""Geodesy helpers: ICAO standard atmosphere, local metric scaling, ENU frames."""

from __future__ import annotations

import numpy as np

METERS_PER_DEG_LAT = 111_320.0

# ICAO standard atmosphere, troposphere and lower stratosphere
_P0_HPA = 1013.25
_T0_K = 288.15
_LAPSE = 0.0065
_G0 = 9.80665
_R_AIR = 287.05287
_H_TROPO = 11_000.0
_T_TROPO = _T0_K - _LAPSE * _H_TROPO
_EXP = _R_AIR * _LAPSE / _G0
_P_TROPO_HPA = _P0_HPA * (_T_TROPO / _T0_K) ** (1.0 / _EXP)

# WGS84
_A = 6_378_137.0
_F = 1.0 / 298.257223563
_E2 = _F * (2.0 - _F)


def pressure_to_altitude(p_hpa):
    """Geopotential altitude in metres for pressure in hPa (ISA, up to 20 km)."""
    p = np.asarray(p_hpa, dtype=float)
    tropo = _T0_K / _LAPSE * (1.0 - (p / _P0_HPA) ** _EXP)
    strato = _H_TROPO + _R_AIR * _T_TROPO / _G0 * np.log(_P_TROPO_HPA / p)
    return np.where(p >= _P_TROPO_HPA, tropo, strato)


def altitude_to_pressure(h_m):
    """Inverse of :func:`pressure_to_altitude`."""
    h = np.asarray(h_m, dtype=float)
    tropo = _P0_HPA * (1.0 - _LAPSE * h / _T0_K) ** (1.0 / _EXP)
    strato = _P_TROPO_HPA * np.exp(-(h - _H_TROPO) * _G0 / (_R_AIR * _T_TROPO))
    return np.where(h <= _H_TROPO, tropo, strato)


def meters_per_deg_lon(lat_deg):
    return METERS_PER_DEG_LAT * np.cos(np.deg2rad(lat_deg))


def offset_latlon(lat, lon, east_m, north_m):
    """Shift a position by metric offsets using local spherical scaling."""
    lat = np.asarray(lat, dtype=float)
    new_lon = lon + east_m / meters_per_deg_lon(lat)
    new_lat = lat + north_m / METERS_PER_DEG_LAT
    return new_lat, new_lon


def local_offset_m(lat0, lon0, lat1, lon1):
    """East/north metres from point 0 to point 1; the inverse of :func:`offset_latlon`."""
    east = (np.asarray(lon1, dtype=float) - lon0) * meters_per_deg_lon(lat0)
    north = (np.asarray(lat1, dtype=float) - lat0) * METERS_PER_DEG_LAT
    return east, north


def geodetic_to_ecef(lat, lon, alt):
    lat_r = np.deg2rad(lat)
    lon_r = np.deg2rad(lon)
    sin_lat = np.sin(lat_r)
    n = _A / np.sqrt(1.0 - _E2 * sin_lat * sin_lat)
    x = (n + alt) * np.cos(lat_r) * np.cos(lon_r)
    y = (n + alt) * np.cos(lat_r) * np.sin(lon_r)
    z = (n * (1.0 - _E2) + alt) * sin_lat
    return np.stack([x, y, z], axis=-1)


def enu_rotation(lat0, lon0):
    """Rows are the east, north and up unit vectors at the origin (ECEF)."""
    la = np.deg2rad(lat0)
    lo = np.deg2rad(lon0)
    return np.array(
        [
            [-np.sin(lo), np.cos(lo), 0.0],
            [-np.sin(la) * np.cos(lo), -np.sin(la) * np.sin(lo), np.cos(la)],
            [np.cos(la) * np.cos(lo), np.cos(la) * np.sin(lo), np.sin(la)],
        ]
    )


def geodetic_to_enu(lat, lon, alt, lat0, lon0, alt0):
    """East-north-up coordinates (metres) of points relative to an origin."""
    origin = geodetic_to_ecef(lat0, lon0, alt0)
    pts = geodetic_to_ecef(np.asarray(lat, float), np.asarray(lon, float), np.asarray(alt, float))
    return (pts - origin) @ enu_rotation(lat0, lon0).T


def enu_to_geodetic(enu, lat0, lon0, alt0, iterations=5):
    """Inverse of :func:`geodetic_to_enu` (iterative latitude solve)."""
    enu = np.asarray(enu, dtype=float)
    ecef = enu @ enu_rotation(lat0, lon0) + geodetic_to_ecef(lat0, lon0, alt0)
    x, y, z = ecef[..., 0], ecef[..., 1], ecef[..., 2]
    lon = np.arctan2(y, x)
    p = np.hypot(x, y)
    lat = np.arctan2(z, p * (1.0 - _E2))
    for _ in range(iterations):
        n = _A / np.sqrt(1.0 - _E2 * np.sin(lat) ** 2)
        alt = p / np.cos(lat) - n
        lat = np.arctan2(z, p * (1.0 - _E2 * n / (n + alt)))
    n = _A / np.sqrt(1.0 - _E2 * np.sin(lat) ** 2)
    alt = p / np.cos(lat) - n
    return np.rad2deg(lat), np.rad2deg(lon), alt
