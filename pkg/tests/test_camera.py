import math

import numpy as np
import pytest
import shapely
from hypothesis import given, strategies as st

from contrailmatch import geo
from contrailmatch.camera import CameraModel, densify_quads, project, project_enu, project_points, project_polygon, project_quads

CAM = CameraModel(lat=48.7, lon=2.2, alt=150.0, focal_px=600.0, cx=512.0, cy=512.0, width=1024, height=1024)


def _dir(theta, phi):
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def _geo_at(enu):
    lat, lon, alt = geo.enu_to_geodetic(np.atleast_2d(enu), CAM.lat, CAM.lon, CAM.alt)
    return float(lat[0]), float(lon[0]), float(alt[0])


def test_zenith_maps_to_principal_point():
    uv = project(CAM, CAM.lat, CAM.lon, alt=11000.0)
    assert uv == pytest.approx((512.0, 512.0), abs=1e-6)


def test_half_radian_gives_300_px():
    lat, lon, alt = _geo_at(_dir(0.5, 0.3) * 12000.0)
    u, v = project(CAM, lat, lon, alt=alt)
    assert math.hypot(u - 512.0, v - 512.0) == pytest.approx(300.0, abs=1e-6)


@given(st.floats(0.0, 1.5), st.floats(-math.pi, math.pi), st.floats(1e3, 5e4))
def test_equidistant_radius_exact(theta, phi, dist):
    uv, _ = project_enu(CAM, _dir(theta, phi) * dist)
    assert math.hypot(uv[0, 0] - 512.0, uv[0, 1] - 512.0) == pytest.approx(600.0 * theta, abs=1e-9)


def test_axes_east_and_north():
    uv, _ = project_enu(CAM, [[1000.0, 0.0, 10000.0], [0.0, 1000.0, 10000.0]])
    assert uv[0, 0] > 512.0 and uv[0, 1] == pytest.approx(512.0)
    assert uv[1, 1] > 512.0 and uv[1, 0] == pytest.approx(512.0)


def test_below_horizon_is_empty():
    lat, lon, alt = _geo_at(np.array([20000.0, 0.0, -500.0]))
    assert project(CAM, lat, lon, alt=alt) is None


def test_beyond_margin_is_empty():
    narrow = CameraModel(48.7, 2.2, 150.0, 2000.0, 512.0, 512.0, 1024, 1024, margin_px=10.0)
    lat, lon, alt = _geo_at(_dir(0.5, 0.0) * 12000.0)
    assert project(narrow, lat, lon, alt=alt) is None
    assert project(CAM, lat, lon, alt=alt) is not None


def test_pressure_and_altitude_agree():
    h = float(geo.pressure_to_altitude(250.0))
    a = project(CAM, 48.75, 2.25, alt=h)
    b = project(CAM, 48.75, 2.25, pressure=250.0)
    assert a == pytest.approx(b, abs=1e-9)


def test_positive_pitch_tilts_south_and_roll_east():
    south = np.array([0.0, -math.sin(0.2), math.cos(0.2)]) * 10000.0
    east = np.array([math.sin(0.2), 0.0, math.cos(0.2)]) * 10000.0
    tilted = CameraModel(48.7, 2.2, 150.0, 600.0, 512.0, 512.0, 1024, 1024, pitch=math.degrees(0.2))
    rolled = CameraModel(48.7, 2.2, 150.0, 600.0, 512.0, 512.0, 1024, 1024, roll=math.degrees(0.2))
    np.testing.assert_allclose(project_enu(tilted, south)[0][0], [512.0, 512.0], atol=1e-9)
    np.testing.assert_allclose(project_enu(rolled, east)[0][0], [512.0, 512.0], atol=1e-9)


def test_yaw_rotates_about_optical_axis():
    turned = CameraModel(48.7, 2.2, 150.0, 600.0, 512.0, 512.0, 1024, 1024, yaw=90.0)
    v = _dir(0.4, 0.0) * 10000.0
    a = project_enu(CAM, v)[0][0] - 512.0
    b = project_enu(turned, v)[0][0] - 512.0
    assert np.hypot(*a) == pytest.approx(np.hypot(*b))
    assert b[0] == pytest.approx(0.0, abs=1e-9)


def test_invalid_camera():
    with pytest.raises(ValueError):
        CameraModel(0, 0, 0, 0.0, 5, 5, 10, 10)
    with pytest.raises(ValueError):
        CameraModel(0, 0, 0, 100.0, 50, 5, 10, 10)
    with pytest.raises(ValueError):
        CameraModel(0, 0, 0, 100.0, 5, 5, 0, 10)


def _quad_m(east, north, p=250.0, lat0=CAM.lat, lon0=CAM.lon):
    lat, lon = geo.offset_latlon(lat0, lon0, np.asarray(east, float), np.asarray(north, float))
    return np.column_stack([lat, lon, np.full(4, p)])


def test_tiny_zenith_quad_area_matches_small_angle_estimate():
    a, b = 200.0, 100.0
    q = _quad_m([-a / 2, a / 2, a / 2, -a / 2], [-b / 2, -b / 2, b / 2, b / 2])
    poly = project_polygon(CAM, q)
    h = float(geo.pressure_to_altitude(250.0)) - CAM.alt
    est = (600.0 / h) ** 2 * a * b
    assert shapely.Polygon(poly).area == pytest.approx(est, rel=0.05)


def test_quad_below_horizon_dropped():
    q = _quad_m([5e5, 5.1e5, 5.1e5, 5e5], [0, 0, 1e3, 1e3])
    assert project_polygon(CAM, q) is None


def test_meridian_symmetric_quad_is_mirror_symmetric():
    a, b = 3000.0, 1500.0
    q = _quad_m([-a, a, a, -a], [-b, -b, b, b])
    poly = project_polygon(CAM, q, densify_step=400.0)
    mirrored = np.column_stack([2 * 512.0 - poly[:, 0], poly[:, 1]])
    # every vertex has a mirror image in the set
    d = np.hypot(*(poly[:, None, :] - mirrored[None, :, :]).transpose(2, 0, 1)).min(axis=1)
    assert d.max() < 1e-6


def test_enu_symmetric_points_symmetric_about_principal_point():
    pts = np.array([[x, y, 10000.0] for x, y in ((2000, 1000), (-2000, -1000), (-2000, 1000), (2000, -1000))])
    uv, _ = project_enu(CAM, pts)
    np.testing.assert_allclose(uv[0] + uv[1], [1024.0, 1024.0], atol=1e-6)
    np.testing.assert_allclose(uv[2] + uv[3], [1024.0, 1024.0], atol=1e-6)


def test_densification_bounds_edge_length():
    q = _quad_m([-2000, 2000, 2000, -2000], [-50, -50, 50, 50])
    coarse, _ = project_quads(CAM, q[None], densify_step=1e9)
    assert coarse[0].shape[0] == 4
    pts, sizes = densify_quads(q[None], 500.0)
    assert sizes[0] >= 18
    ring = np.vstack([pts, pts[:1]])
    e, n = geo.local_offset_m(ring[:-1, 0], ring[:-1, 1], ring[1:, 0], ring[1:, 1])
    assert np.hypot(e, n).max() <= 500.0 + 1e-6


@given(st.floats(-2e4, 2e4), st.floats(-2e4, 2e4), st.floats(0, 2 * math.pi))
def test_continuity_one_metre(e, n, ang):
    h = 10500.0
    a = np.array([e, n, h])
    b = a + np.array([math.cos(ang), math.sin(ang), 0.0])
    uv, vis = project_enu(CAM, np.vstack([a, b]))
    rng = np.linalg.norm(a)
    bound = 600.0 * (math.pi / 2) / (rng - 1.0)
    assert np.hypot(*(uv[0] - uv[1])) <= bound


def test_projection_is_deterministic():
    lat = np.linspace(48.6, 48.8, 30)
    a = project_points(CAM, lat, lat * 0 + 2.2, pressure=np.full(30, 240.0))
    b = project_points(CAM, lat, lat * 0 + 2.2, pressure=np.full(30, 240.0))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
