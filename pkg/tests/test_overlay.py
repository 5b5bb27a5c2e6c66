import re

import numpy as np
import pytest

from contrailmatch.errors import ContrailMatchError
from contrailmatch.overlay import GREY, FrameOverlay, emit_overlays, flight_colour, render_svg


def square(x, y, s=10.0):
    return np.array([[x, y], [x + s, y], [x + s, y + s], [x, y + s]])


def _frame():
    return FrameOverlay(
        30.0,
        contrails={"C1": ([[square(10, 10)]], "F1"), "C2": ([[square(50, 50)]], None)},
        plumes={"F1": [square(8, 8, 14)], "F2": [square(80, 80)]},
        trajectories={"F1": [np.array([[0.0, 0.0], [100.0, 100.0]])]},
    )


def test_colour_is_stable_and_grey_for_none():
    assert flight_colour("AFR123") == flight_colour("AFR123")
    assert flight_colour("AFR123") != flight_colour("AFR124")
    assert flight_colour(None) == GREY
    assert re.fullmatch(r"#[0-9a-f]{6}", flight_colour("x"))


def test_attributed_contrail_shares_plume_colour():
    svg = render_svg(_frame(), 128, 128)
    col = flight_colour("F1")
    contrail = re.search(r'<path [^>]*data-contrail="C1"[^>]*>', svg).group(0)
    plume = re.search(r'<path [^>]*data-flight="F1"/>', svg.split('<g id="plumes">')[1]).group(0)
    assert f'stroke="{col}"' in contrail and f'fill="{col}"' in plume
    grey = re.search(r'<path [^>]*data-contrail="C2"[^>]*>', svg).group(0)
    assert f'stroke="{GREY}"' in grey


def test_frame_without_contrails_draws_trajectories_only():
    fr = FrameOverlay(0.0, trajectories={"F1": [np.array([[0.0, 5.0], [40.0, 5.0]])]})
    svg = render_svg(fr, 64, 64)
    assert svg.count("<polyline") == 1 and "stroke-dasharray" in svg
    assert "data-contrail" not in svg


def test_overlays_are_byte_identical(tmp_path):
    a = emit_overlays([_frame(), _frame()], tmp_path / "a", 128, 128)
    b = emit_overlays([_frame(), _frame()], tmp_path / "b", 128, 128)
    assert [p.name for p in a] == ["frame_0000.svg", "frame_0001.svg"]
    assert all(x.read_bytes() == y.read_bytes() for x, y in zip(a, b))


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ContrailMatchError):
        emit_overlays([_frame()], blocker / "sub", 10, 10)
