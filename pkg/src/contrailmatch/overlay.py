"""Deterministic SVG overlays of annotations, trajectories and plumes per frame."""

from __future__ import annotations

import colorsys
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from contrailmatch.errors import ContrailMatchError
from contrailmatch.geometry import as_multipolygon

GREY = "#8c8c8c"


def flight_colour(flight_id: str | None) -> str:
    """Stable colour from an md5 hash of the flight id; grey for ``None``."""
    if flight_id is None:
        return GREY
    h = hashlib.md5(flight_id.encode("utf-8")).digest()
    hue = int.from_bytes(h[:2], "big") / 65536.0
    sat = 0.65 + 0.3 * h[2] / 255.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.55, sat)
    return f"#{round(r * 255):02x}{round(g * 255):02x}{round(b * 255):02x}"


@dataclass
class FrameOverlay:
    """Everything drawn for one frame.

    ``contrails`` maps contrail id to ``(polygons, assigned_flight_id)``;
    ``plumes`` maps flight id to its pixel polygons; ``trajectories`` maps
    flight id to a list of pixel polylines (track pieces in view).
    """

    frame_time: float
    contrails: dict[str, tuple[list, str | None]] = field(default_factory=dict)
    plumes: dict[str, list[np.ndarray]] = field(default_factory=dict)
    trajectories: dict[str, list[np.ndarray]] = field(default_factory=dict)


def _path_d(rings) -> str:
    parts = []
    for ring in rings:
        pts = np.asarray(ring, dtype=float)
        if pts.shape[0] < 2:
            continue
        head = f"M{pts[0, 0]:.2f},{pts[0, 1]:.2f}"
        rest = "".join(f"L{x:.2f},{y:.2f}" for x, y in pts[1:])
        parts.append(head + rest + "Z")
    return "".join(parts)


def render_svg(frame: FrameOverlay, width: int, height: int) -> str:
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"<title>frame {frame.frame_time!r}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#101418"/>',
        '<g id="plumes">',
    ]
    for fid in sorted(frame.plumes):
        col = flight_colour(fid)
        for poly in frame.plumes[fid]:
            out.append(f'<path d="{_path_d([poly])}" fill="{col}" fill-opacity="0.35" stroke="{col}" stroke-width="0.5" data-flight="{fid}"/>')
    out.append("</g>")
    out.append('<g id="trajectories">')
    for fid in sorted(frame.trajectories):
        col = flight_colour(fid)
        for line in frame.trajectories[fid]:
            pts = np.asarray(line, dtype=float)
            if pts.shape[0] < 2:
                continue
            coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            out.append(
                f'<polyline points="{coords}" fill="none" stroke="{col}" stroke-width="1.5" '
                f'stroke-dasharray="6,4" data-flight="{fid}"/>'
            )
    out.append("</g>")
    out.append('<g id="contrails">')
    for cid in sorted(frame.contrails):
        polys, fid = frame.contrails[cid]
        col = flight_colour(fid)
        for rings in as_multipolygon(polys):
            out.append(
                f'<path d="{_path_d(rings)}" fill="none" fill-rule="evenodd" stroke="{col}" stroke-width="2" '
                f'data-contrail="{cid}" data-flight="{fid or ""}"/>'
            )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_overlays(frames: list[FrameOverlay], out_dir, width: int, height: int) -> list[Path]:
    """Write one ``frame_NNNN.svg`` per frame; returns the written paths."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ContrailMatchError(f"cannot create overlay directory {out_dir}: {exc}") from exc
    paths = []
    for k, fr in enumerate(frames):
        p = out_dir / f"frame_{k:04d}.svg"
        try:
            p.write_text(render_svg(fr, width, height))
        except OSError as exc:
            raise ContrailMatchError(f"cannot write overlay {p}: {exc}") from exc
        paths.append(p)
    return paths
