"""Readers and writers for the on-disk formats (see ``docs/formats.md``)."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import shapely

from contrailmatch.advection import FlightTrack
from contrailmatch.attribution import AttributionResult, ObservedContrail
from contrailmatch.errors import LoadError
from contrailmatch import geo

logger = logging.getLogger(__name__)

ANNOTATION_FORMAT = "contrailmatch-annotations"
FORMAT_VERSION = 1

FLIGHT_COLUMNS = ("flight_id", "timestamp", "lat", "lon", "pressure_hpa", "altitude_m", "callsign", "aircraft_type")
RECORD_COLUMNS = ("frame_time", "contrail_id", "assigned_flight_id", "probability", "aggregated_distance", "raw_distance")
FLOW_COLUMNS = ("point", "status", "attributed", "outcome", "count", "fraction")


# ---------------------------------------------------------------------------
# Annotations
# ---------------------------------------------------------------------------


@dataclass
class Annotations:
    """Annotated contrails plus the ordered list of frames and their members."""

    frame_times: list[float]
    frames: dict[float, list[str]]
    contrails: dict[str, ObservedContrail]

    def __len__(self) -> int:
        return len(self.frame_times)


def _parse_polygon(raw, where: str) -> list[list[np.ndarray]]:
    if isinstance(raw, dict):
        ext = raw.get("exterior")
        holes = raw.get("holes", [])
    else:
        ext, holes = raw, []
    try:
        ext = np.asarray(ext, dtype=float).reshape(-1, 2)
        holes = [np.asarray(h, dtype=float).reshape(-1, 2) for h in holes]
    except (TypeError, ValueError) as exc:
        raise LoadError(f"{where}: malformed polygon coordinates: {exc}") from exc
    if not np.all(np.isfinite(ext)):
        raise LoadError(f"{where}: non-finite polygon vertex")
    distinct = np.unique(ext, axis=0)
    if distinct.shape[0] < 3:
        raise LoadError(f"{where}: degenerate polygon ({distinct.shape[0]} distinct vertices)")
    if np.linalg.matrix_rank(distinct - distinct.mean(axis=0), tol=1e-9) < 2:
        raise LoadError(f"{where}: degenerate polygon (collinear vertices)")
    shape = shapely.Polygon(ext, [h for h in holes if h.shape[0] >= 3])
    if not shape.is_valid:
        shape = shapely.make_valid(shape)
        parts = [g for g in getattr(shape, "geoms", [shape]) if g.geom_type in ("Polygon", "MultiPolygon")]
        area = sum(g.area for g in parts)
        if not parts or area <= 0:
            raise LoadError(f"{where}: malformed polygon (self-intersecting after repair attempt)")
        polys = []
        for g in parts:
            polys.extend(getattr(g, "geoms", [g]))
        return [_rings_of(p) for p in polys if p.area > 0]
    if shape.area <= 0:
        raise LoadError(f"{where}: degenerate polygon (zero area)")
    return [[ext] + [h for h in holes if h.shape[0] >= 3]]


def _rings_of(p) -> list[np.ndarray]:
    return [np.asarray(p.exterior.coords)[:-1, :2]] + [np.asarray(r.coords)[:-1, :2] for r in p.interiors]


def load_annotations(path) -> Annotations:
    """Read annotation frames; formation time is each id's first appearance."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise LoadError(f"cannot read annotations {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise LoadError(f"malformed annotations {path}: {exc}") from exc
    if isinstance(doc, list):
        doc = {"frames": doc}
    if int(doc.get("format_version", FORMAT_VERSION)) != FORMAT_VERSION:
        raise LoadError(f"unsupported annotation format_version {doc.get('format_version')}")
    frames_raw = doc.get("frames")
    if not isinstance(frames_raw, list):
        raise LoadError(f"{path}: missing 'frames' list")

    frame_times: list[float] = []
    frames: dict[float, list[str]] = {}
    contrails: dict[str, ObservedContrail] = {}
    for fi, fr in enumerate(frames_raw):
        try:
            t = float(fr["frame_time"])
        except (KeyError, TypeError, ValueError) as exc:
            raise LoadError(f"{path}: frame #{fi}: bad frame_time") from exc
        if frame_times and t <= frame_times[-1]:
            raise LoadError(f"{path}: frame #{fi}: non-monotone frame time {t} after {frame_times[-1]}")
        frame_times.append(t)
        ids = []
        for ci, c in enumerate(fr.get("contrails", [])):
            where = f"{path}: frame t={t} contrail #{ci}"
            try:
                cid = str(c["id"])
            except (KeyError, TypeError) as exc:
                raise LoadError(f"{where}: missing id") from exc
            if cid in ids:
                raise LoadError(f"{where}: duplicate id {cid!r} in frame")
            status = str(c.get("status", "")).strip().lower()
            if status not in ("new", "old"):
                raise LoadError(f"{where}: unknown status {c.get('status')!r}")
            polys = []
            for pi, raw in enumerate(c.get("polygons", [])):
                polys.extend(_parse_polygon(raw, f"{where} polygon #{pi}"))
            if not polys:
                raise LoadError(f"{where}: contrail {cid} has no polygon")
            truth = c.get("flight_id")
            truth = None if truth in (None, "") else str(truth)
            ids.append(cid)
            if cid not in contrails:
                contrails[cid] = ObservedContrail(cid, status, t, {}, truth)
            oc = contrails[cid]
            if oc.status != status:
                raise LoadError(f"{where}: status of {cid} changes from {oc.status} to {status}")
            if truth is not None and oc.flight_id is None:
                oc.flight_id = truth
            oc.polygons[t] = polys
        frames[t] = ids
    return Annotations(frame_times, frames, contrails)


def _ring_json(r: np.ndarray):
    return [[float(x), float(y)] for x, y in r]


def write_annotations(path, frame_times, frames: dict[float, list[str]], contrails: dict[str, ObservedContrail]) -> None:
    out = []
    for t in frame_times:
        items = []
        for cid in frames.get(t, []):
            c = contrails[cid]
            polys = []
            for rings in c.polygons[t]:
                if len(rings) == 1:
                    polys.append(_ring_json(rings[0]))
                else:
                    polys.append({"exterior": _ring_json(rings[0]), "holes": [_ring_json(h) for h in rings[1:]]})
            item = {"id": cid, "status": c.status, "polygons": polys}
            if c.flight_id is not None:
                item["flight_id"] = c.flight_id
            items.append(item)
        out.append({"frame_time": float(t), "contrails": items})
    doc = {"format": ANNOTATION_FORMAT, "format_version": FORMAT_VERSION, "frames": out}
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


# ---------------------------------------------------------------------------
# Flights
# ---------------------------------------------------------------------------


def _parse_time(s: str) -> float:
    s = s.strip()
    try:
        return float(s)
    except ValueError:
        pass
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _read_versioned_csv(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise LoadError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    body = []
    for ln in lines:
        s = ln.strip()
        if s.startswith("#"):
            key, _, val = s[1:].partition(":")
            if key.strip() == "format_version" and int(val.strip()) != FORMAT_VERSION:
                raise LoadError(f"{path}: unsupported format_version {val.strip()}")
            continue
        if s:
            body.append(ln)
    return list(csv.DictReader(body))


def load_flights(path) -> list[FlightTrack]:
    """Read ADS-B points grouped by flight, sorted by time, duplicates dropped."""
    path = Path(path)
    rows = _read_versioned_csv(path)
    if rows and not {"flight_id", "timestamp", "lat", "lon"} <= set(rows[0]):
        raise LoadError(f"{path}: header must include flight_id, timestamp, lat, lon")
    pts = defaultdict(list)
    meta = {}
    for ln, r in enumerate(rows, start=2):
        fid = (r.get("flight_id") or "").strip()
        if not fid:
            raise LoadError(f"{path}: row {ln}: empty flight_id")
        try:
            t = _parse_time(r["timestamp"])
            lat = float(r["lat"])
            lon = float(r["lon"])
        except (ValueError, TypeError) as exc:
            raise LoadError(f"{path}: row {ln}: {exc}") from exc
        p_raw = (r.get("pressure_hpa") or "").strip()
        h_raw = (r.get("altitude_m") or "").strip()
        if p_raw:
            p = float(p_raw)
        elif h_raw:
            p = float(geo.altitude_to_pressure(float(h_raw)))
        else:
            raise LoadError(f"{path}: row {ln}: flight {fid} has neither pressure_hpa nor altitude_m")
        if not all(math.isfinite(v) for v in (t, lat, lon, p)):
            raise LoadError(f"{path}: row {ln}: non-finite value")
        pts[fid].append((t, lat, lon, p))
        meta.setdefault(fid, ((r.get("callsign") or "").strip() or None, (r.get("aircraft_type") or "").strip() or None))
    tracks = []
    for fid in sorted(pts):
        seen = {}
        for row in sorted(pts[fid], key=lambda x: x[0]):
            if row[0] in seen:
                continue
            seen[row[0]] = row
        arr = np.array(list(seen.values()))
        if arr.shape[0] < 2:
            logger.warning("flight %s has fewer than 2 distinct points; skipped", fid)
            continue
        cs, ac = meta[fid]
        tracks.append(FlightTrack(fid, arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], callsign=cs, aircraft_type=ac))
    return tracks


def write_flights(path, tracks) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# format_version: {FORMAT_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FLIGHT_COLUMNS)
        for tr in tracks:
            for k in range(tr.t.size):
                w.writerow(
                    [tr.flight_id, repr(float(tr.t[k])), repr(float(tr.lat[k])), repr(float(tr.lon[k])),
                     repr(float(tr.pressure[k])), "", tr.callsign or "", tr.aircraft_type or ""]
                )


# ---------------------------------------------------------------------------
# Attribution records and reports
# ---------------------------------------------------------------------------


def _num(x) -> str:
    if x is None:
        return ""
    return f"{x:.6f}"


def write_records(path, history: list[AttributionResult], raw_distances=None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# format_version: {FORMAT_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for res in history:
            for a in res.assignments:
                w.writerow([repr(float(res.frame_time)), a.contrail_id, a.flight_id or "",
                            _num(a.probability), _num(a.aggregated_distance), _num(a.raw_distance)])


def load_records(path) -> dict[tuple[float, str], str | None]:
    rows = _read_versioned_csv(Path(path))
    out = {}
    for ln, r in enumerate(rows, start=2):
        try:
            key = (float(r["frame_time"]), r["contrail_id"])
        except (KeyError, ValueError) as exc:
            raise LoadError(f"{path}: row {ln}: {exc}") from exc
        out[key] = r.get("assigned_flight_id") or None
    return out


def write_report(out_dir, reports: dict) -> None:
    """Write ``report.json``, ``flows.csv`` and ``report.txt``."""
    out_dir = Path(out_dir)
    doc = {"format": "contrailmatch-report", "format_version": FORMAT_VERSION,
           "points": {p: r.to_dict() for p, r in reports.items()}}
    (out_dir / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    with open(out_dir / "flows.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FLOW_COLUMNS)
        for r in reports.values():
            for row in r.flows():
                w.writerow([row["point"], row["status"], "yes" if row["attributed"] else "no",
                            row["outcome"], row["count"], f"{row['fraction']:.6f}"])
    (out_dir / "report.txt").write_text("\n\n".join(r.to_table() for r in reports.values()) + "\n")
