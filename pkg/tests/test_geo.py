import numpy as np
import pytest
from hypothesis import given, strategies as st

from contrailmatch import geo


def test_isa_reference_points():
    assert geo.pressure_to_altitude(1013.25) == pytest.approx(0.0, abs=1e-6)
    assert geo.altitude_to_pressure(11000.0) == pytest.approx(226.32, abs=0.01)
    assert geo.pressure_to_altitude(250.0) == pytest.approx(10363, abs=2)
    assert geo.altitude_to_pressure(15000.0) == pytest.approx(120.45, abs=0.05)


@given(st.floats(100.0, 1013.25))
def test_isa_roundtrip(p):
    assert geo.altitude_to_pressure(geo.pressure_to_altitude(p)) == pytest.approx(p, rel=1e-10)


@given(st.floats(-60, 60), st.floats(-179, 179), st.floats(-3e4, 3e4), st.floats(-3e4, 3e4), st.floats(0, 1.2e4))
def test_enu_roundtrip(lat0, lon0, e, n, u):
    lat, lon, alt = geo.enu_to_geodetic(np.array([[e, n, u]]), lat0, lon0, 100.0)
    back = geo.geodetic_to_enu(lat, lon, alt, lat0, lon0, 100.0)
    np.testing.assert_allclose(back.reshape(3), [e, n, u], atol=1e-5)


def test_local_offset_inverse():
    lat, lon = geo.offset_latlon(48.0, 2.0, 1234.0, -567.0)
    e, n = geo.local_offset_m(48.0, 2.0, lat, lon)
    assert (e, n) == pytest.approx((1234.0, -567.0), abs=1e-9)


def test_enu_up_is_up():
    enu = geo.geodetic_to_enu(48.0, 2.0, 10100.0, 48.0, 2.0, 100.0)
    np.testing.assert_allclose(np.reshape(enu, 3), [0.0, 0.0, 10000.0], atol=1e-6)
