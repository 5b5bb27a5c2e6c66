import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contrailmatch import geo
from contrailmatch.advection import (
    FlightTrack,
    ParcelTrajectories,
    Parcels,
    PlumeSegment,
    advect_plume,
    emit_parcels,
    segment_to_polygon,
)
from contrailmatch.errors import DataError
from contrailmatch.met import MetGrid
from oracles import fine_step_positions

LAT0, LON0 = 48.0, 2.0


def grid(u=0.0, v=0.0, w=0.0, shear=0.0, span=3.0, times=(0.0, 7200.0)):
    t = np.array(times)
    p = np.array([200.0, 300.0])
    lat = LAT0 + np.array([-span, span])
    lon = LON0 + np.array([-span, span])
    shape = (t.size, p.size, lat.size, lon.size)
    uu = np.full(shape, u) + shear * (lat - LAT0)[None, None, :, None]
    return MetGrid(t, p, lat, lon, uu, np.full(shape, v), np.full(shape, w))


def track(duration=60.0, heading=90.0, speed=230.0, n=2, t0=0.0):
    t = np.linspace(t0, t0 + duration, n)
    s = speed * (t - t0)
    h = math.radians(heading)
    lat, lon = geo.offset_latlon(LAT0, LON0, s * math.sin(h), s * math.cos(h))
    return FlightTrack("F1", t, lat, lon, np.full(n, 250.0))


def parcels_at(lat, lon, p=250.0, t=0.0):
    lat = np.atleast_1d(np.asarray(lat, float))
    lon = np.atleast_1d(np.asarray(lon, float))
    return Parcels("F1", np.full(lat.size, t), lat, lon, np.full(lat.size, p))


# -- emission ---------------------------------------------------------------


def test_sixty_second_track_emits_seven():
    assert len(emit_parcels(track(60.0), 10.0)) == 7


def test_midpoint_time_gives_midpoint_position():
    tr = track(60.0)
    p = emit_parcels(tr, 30.0)
    assert p.t_emit[1] == 30.0
    assert p.lat[1] == pytest.approx(0.5 * (tr.lat[0] + tr.lat[-1]), abs=1e-12)
    assert p.lon[1] == pytest.approx(0.5 * (tr.lon[0] + tr.lon[-1]), abs=1e-12)


def test_interval_longer_than_track_emits_start_only():
    p = emit_parcels(track(60.0), 100.0)
    assert list(p.t_emit) == [0.0]


def test_short_track_rejected():
    with pytest.raises(DataError):
        FlightTrack("x", [0.0], [48.0], [2.0], [250.0])
    with pytest.raises(DataError):
        FlightTrack("x", [0.0, 0.0], [48.0, 48.1], [2.0, 2.0], [250.0, 250.0])
    with pytest.raises(ValueError):
        emit_parcels(track(), 0.0)


# -- integration ------------------------------------------------------------


def test_uniform_wind_displacement_is_exact():
    g = grid(u=10.0)
    pc = parcels_at([LAT0], [LON0])
    for step in (30.0, 7.0, 60.0):
        st_, _, _ = ParcelTrajectories(pc, g, step, t_max=60.0).positions_at(60.0)
        east, north = geo.local_offset_m(LAT0, LON0, st_[0, 0], st_[0, 1])
        assert east == pytest.approx(600.0, rel=1e-6)
        assert abs(north) < 1e-6


def test_uniform_wind_plume_width():
    tr = track(20.0)
    pl = advect_plume(emit_parcels(tr, 10.0), grid(u=10.0), 30.0, frame_time=60.0, width_growth=0.5)
    seg = pl.segments[0]
    assert seg.formation_time == 0.0
    assert seg.width == pytest.approx(100.0 + 60.0 * 0.5)


@given(st.floats(1.0, 120.0), st.floats(0.0, 600.0))
@settings(max_examples=40)
def test_zero_wind_is_identity(step, age):
    pc = parcels_at([LAT0 + 0.1], [LON0 - 0.2])
    st_, _, _ = ParcelTrajectories(pc, grid(), step, t_max=age).positions_at(age)
    assert st_[0, 0] == LAT0 + 0.1 and st_[0, 1] == LON0 - 0.2 and st_[0, 2] == 250.0


def test_zero_wind_plume_lies_on_track():
    tr = track(60.0)
    pl = advect_plume(emit_parcels(tr, 10.0), grid(), 30.0, frame_time=300.0)
    lat, lon, _ = tr.position_at(pl.formation_time + 5.0)
    np.testing.assert_allclose(pl.lat, lat, atol=1e-9)
    np.testing.assert_allclose(pl.lon, lon, atol=1e-9)


def test_vertical_velocity_changes_pressure():
    pc = parcels_at([LAT0], [LON0])
    st_, _, _ = ParcelTrajectories(pc, grid(w=0.5), 30.0, t_max=100.0).positions_at(100.0)
    assert st_[0, 2] == pytest.approx(250.0 + 0.5 * 100.0 / 100.0)


def _shear_wind(u0, v0, shear):
    def wind(t, p, lat, lon):
        return u0 + shear * (lat - LAT0), v0, 0.0

    return wind


def test_shear_matches_fine_step_reference():
    u0, v0, s = 15.0, 8.0, 40.0
    g = grid(u=u0, v=v0, shear=s)
    pc = parcels_at([LAT0], [LON0])
    t1 = 900.0
    st_, _, _ = ParcelTrajectories(pc, g, 30.0, t_max=t1).positions_at(t1)
    ref = fine_step_positions(_shear_wind(u0, v0, s), LAT0, LON0, 250.0, 0.0, t1, dt=1.0)
    disp = np.hypot(*geo.local_offset_m(LAT0, LON0, ref[0], ref[1]))
    err = np.hypot(*geo.local_offset_m(ref[0], ref[1], st_[0, 0], st_[0, 1]))
    assert err < 0.01 * disp


def test_first_order_convergence():
    u0, v0, s = 15.0, 8.0, 40.0
    g = grid(u=u0, v=v0, shear=s)
    pc = parcels_at([LAT0], [LON0])
    t1 = 1200.0
    ref = fine_step_positions(_shear_wind(u0, v0, s), LAT0, LON0, 250.0, 0.0, t1, dt=0.05)
    errs = []
    for step in (60.0, 30.0, 15.0, 7.5):
        st_, _, _ = ParcelTrajectories(pc, g, step, t_max=t1).positions_at(t1)
        errs.append(np.hypot(*geo.local_offset_m(ref[0], ref[1], st_[0, 0], st_[0, 1])))
    ratios = [a / b for a, b in zip(errs[:-1], errs[1:])]
    assert all(1.7 < r < 2.3 for r in ratios), ratios


def test_partial_final_step_matches_stepped_integration():
    g = grid(u=15.0, v=8.0, shear=40.0)
    pc = parcels_at([LAT0], [LON0])
    traj = ParcelTrajectories(pc, g, 30.0, t_max=75.0)
    st_, _, _ = traj.positions_at(75.0)
    ref = fine_step_positions(_shear_wind(15.0, 8.0, 40.0), LAT0, LON0, 250.0, 0.0, 60.0, dt=30.0)
    ref = fine_step_positions(_shear_wind(15.0, 8.0, 40.0), *ref, 60.0, 75.0, dt=15.0)
    np.testing.assert_allclose(st_[0], ref, rtol=0, atol=1e-10)


# -- invariants -------------------------------------------------------------


def test_formation_times_ordered_and_not_after_frame():
    tr = track(120.0, heading=30.0, n=5)
    pl = advect_plume(emit_parcels(tr, 10.0), grid(u=12.0, v=-3.0), 30.0, frame_time=400.0)
    assert np.all(np.diff(pl.formation_time) >= 0)
    assert np.all(pl.formation_time <= pl.valid_at)
    assert all(s.valid_at == 400.0 for s in pl.segments)
    assert all(0.0 <= s.orientation < 360.0 and s.width > 0 and s.length >= 0 for s in pl.segments)


def test_parcel_conservation_with_drops():
    g = grid(u=60.0, span=0.3)
    tr = track(600.0, heading=90.0, speed=230.0, n=2)
    pc = emit_parcels(tr, 10.0)
    traj = ParcelTrajectories(pc, g, 30.0, t_max=900.0)
    _, emitted, dropped = traj.positions_at(900.0)
    pl = traj.plume_at(900.0)
    assert dropped.sum() > 0
    assert pl.n_parcels == emitted.sum() - dropped.sum()
    assert pl.n_dropped == dropped.sum()


def test_plume_orientation_follows_track_heading():
    tr = track(60.0, heading=90.0)
    pl = advect_plume(emit_parcels(tr, 10.0), grid(), 30.0, frame_time=60.0)
    np.testing.assert_allclose(pl.orientation, 90.0, atol=1e-6)
    np.testing.assert_allclose(pl.length, 2300.0, rtol=1e-3)


# -- rectangles -------------------------------------------------------------


def _corners_m(q, seg):
    e, n = geo.local_offset_m(seg.lat, seg.lon, q[:, 0], q[:, 1])
    return np.column_stack([e, n])


def test_rectangle_axis_aligned():
    seg = PlumeSegment(0.0, LAT0, LON0, 250.0, 1000.0, 100.0, 90.0, 0.0)
    c = _corners_m(segment_to_polygon(seg), seg)
    np.testing.assert_allclose(np.sort(np.abs(c[:, 0])), [500.0] * 4, rtol=1e-6)
    np.testing.assert_allclose(np.sort(np.abs(c[:, 1])), [50.0] * 4, rtol=1e-6)


def test_degenerate_rectangle():
    seg = PlumeSegment(0.0, LAT0, LON0, 250.0, 0.0, 100.0, 0.0, 0.0)
    c = _corners_m(segment_to_polygon(seg), seg)
    np.testing.assert_allclose(np.sort(np.abs(c[:, 1])), [0.5] * 4, rtol=1e-6)
    np.testing.assert_allclose(np.sort(np.abs(c[:, 0])), [50.0] * 4, rtol=1e-6)


@given(st.floats(0, 359.9), st.floats(0, 5000), st.floats(1, 1000))
def test_rotation_by_180_same_point_set(theta, length, width):
    a = PlumeSegment(0.0, LAT0, LON0, 250.0, length, width, theta, 0.0)
    b = PlumeSegment(0.0, LAT0, LON0, 250.0, length, width, (theta + 180.0) % 360.0, 0.0)
    ca = {tuple(np.round(r, 9)) for r in segment_to_polygon(a)[:, :2]}
    cb = {tuple(np.round(r, 9)) for r in segment_to_polygon(b)[:, :2]}
    assert ca == cb
