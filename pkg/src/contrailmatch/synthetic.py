"""Seeded synthetic scenarios with known ground truth.

Candidate plumes and ground-truth contrails come from the same advection
and projection code. Truth contrails are the projected plume pieces formed
during a short emission window, optionally widened, clipped to the image and
optionally perturbed with Gaussian vertex noise. "Old" contrails come from
phantom flights that crossed the view before the video starts and are left
out of the candidate flight list.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import shapely
import yaml

from contrailmatch import geo, io
from contrailmatch.advection import FlightTrack, ParcelTrajectories, Parcels, emit_parcels
from contrailmatch.attribution import Frame, MatchConfig, ObservedContrail, PixelPlume, pairwise_distance, retained_polygons
from contrailmatch.camera import CameraModel
from contrailmatch.errors import ScenarioError
from contrailmatch.geometry import centerlines, directed_hausdorff
from contrailmatch.met import MetGrid, write_met_grid
from contrailmatch.pipeline import AdvectionConfig, frame_plumes

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of a synthetic scenario; ``seed`` fixes every random draw.

    ``wind_mismatch`` (m/s) is added to the truth wind only, in a seeded
    random direction, so candidates are advected with a slightly wrong wind.
    """

    seed: int = 42
    n_flights: int = 5
    old_fraction: float = 0.0
    sigma_px: float = 0.0
    pressure_band: tuple[float, float] = (220.0, 280.0)
    speed_range: tuple[float, float] = (220.0, 250.0)
    heading_range: tuple[float, float] = (0.0, 360.0)
    max_offset_km: float = 6.0
    wind_model: str = "uniform"
    wind_u: float = 12.0
    wind_v: float = 4.0
    wind_shear: float = 0.0
    wind_mismatch: float = 0.0
    frame_interval: float = 30.0
    crossing_spacing: float = 150.0
    lifetime_range: tuple[float, float] = (300.0, 900.0)
    formation_range: tuple[float, float] = (60.0, 100.0)
    widen_px: float = 0.0
    min_area_px: float = 20.0
    start_time: float = 1_700_000_000.0
    camera: dict = field(
        default_factory=lambda: {
            "lat": 48.71,
            "lon": 2.21,
            "alt": 160.0,
            "focal_px": 600.0,
            "cx": 512.0,
            "cy": 512.0,
            "width": 1024,
            "height": 1024,
            "margin_px": 200.0,
        }
    )
    enforce_separation: bool = True
    max_redraws: int = 40

    def __post_init__(self):
        if self.n_flights < 1:
            raise ValueError("n_flights must be at least 1")
        if self.sigma_px < 0:
            raise ValueError("sigma_px must be non-negative")
        if not 0.0 <= self.old_fraction < 1.0:
            raise ValueError("old_fraction must lie in [0, 1)")
        if self.wind_model not in ("uniform", "shear"):
            raise ValueError(f"unknown wind model {self.wind_model!r}")
        if self.frame_interval <= 0:
            raise ValueError("frame_interval must be positive")

    @property
    def n_old(self) -> int:
        f = self.old_fraction
        return int(round(self.n_flights * f / (1.0 - f)))


@dataclass
class Scenario:
    spec: ScenarioSpec
    grid: MetGrid
    truth_grid: MetGrid
    tracks: list[FlightTrack]
    phantoms: list[FlightTrack]
    camera: CameraModel
    annotations: io.Annotations
    truth_plumes: dict[str, dict[float, list]] = field(repr=False, default_factory=dict)
    report: dict = field(default_factory=dict)

    @property
    def new_ids(self) -> list[str]:
        return sorted(c for c, o in self.annotations.contrails.items() if o.status == "new")

    @property
    def old_ids(self) -> list[str]:
        return sorted(c for c, o in self.annotations.contrails.items() if o.status == "old")


# ---------------------------------------------------------------------------
# Wind
# ---------------------------------------------------------------------------


def make_grid(spec: ScenarioSpec, t0: float, t1: float, du: float = 0.0, dv: float = 0.0) -> MetGrid:
    """Regular grid around the camera with a uniform or meridionally sheared wind."""
    lat0, lon0 = spec.camera["lat"], spec.camera["lon"]
    times = np.arange(t0, t1 + 1800.0, 1800.0)
    if times.size < 2:
        times = np.array([t0, t0 + 1800.0])
    levels = np.array([200.0, 250.0, 300.0])
    lats = lat0 + np.arange(-2.0, 2.0001, 0.25)
    lons = lon0 + np.arange(-3.0, 3.0001, 0.25)
    shape = (times.size, levels.size, lats.size, lons.size)
    u = np.full(shape, spec.wind_u + du)
    if spec.wind_model == "shear":
        u = u + spec.wind_shear * (lats - lat0)[None, None, :, None]
    v = np.full(shape, spec.wind_v + dv)
    temp = np.full(shape, 220.0)
    return MetGrid(times, levels, lats, lons, u, v, np.zeros(shape), temp)


# ---------------------------------------------------------------------------
# Flights
# ---------------------------------------------------------------------------


@dataclass
class _Draw:
    heading: float
    offset_m: float
    pressure: float
    speed: float
    t_cross: float
    formation: float
    jitter: float
    lifetime: float


def _draw(rng: np.random.Generator, spec: ScenarioSpec, t_cross: float) -> _Draw:
    return _Draw(
        heading=float(rng.uniform(*spec.heading_range)),
        offset_m=float(rng.uniform(-1.0, 1.0) * spec.max_offset_km * 1000.0),
        pressure=float(rng.uniform(*spec.pressure_band)),
        speed=float(rng.uniform(*spec.speed_range)),
        t_cross=t_cross,
        formation=float(rng.uniform(*spec.formation_range)),
        jitter=float(rng.uniform(-20.0, 20.0)),
        lifetime=float(rng.uniform(*spec.lifetime_range)),
    )


def _track(fid: str, cam: CameraModel, d: _Draw, half_span: float = 420.0, dt: float = 10.0) -> FlightTrack:
    t = d.t_cross + np.arange(-half_span, half_span + dt / 2, dt)
    h = math.radians(d.heading)
    s = d.speed * (t - d.t_cross)
    east = d.offset_m * math.cos(h) + s * math.sin(h)
    north = -d.offset_m * math.sin(h) + s * math.cos(h)
    lat, lon = geo.offset_latlon(cam.lat, cam.lon, east, north)
    return FlightTrack(fid, t, lat, lon, np.full(t.size, d.pressure), callsign=f"SYN{fid[-3:]}", aircraft_type="A320")


def _window(track: FlightTrack, d: _Draw, interval: float) -> tuple[float, float]:
    """Emission window of the visible contrail, snapped to the emission grid."""
    mid = d.t_cross + d.jitter
    k_on = math.floor((mid - d.formation / 2 - track.t_start) / interval)
    k_len = max(2, int(round(d.formation / interval)))
    t_on = track.t_start + k_on * interval
    return t_on, t_on + k_len * interval


def _sub_parcels(p: Parcels, lo: float, hi: float) -> Parcels:
    sel = (p.t_emit >= lo - 1e-9) & (p.t_emit <= hi + 1e-9)
    return Parcels(p.flight_id, p.t_emit[sel], p.lat[sel], p.lon[sel], p.pressure[sel])


# ---------------------------------------------------------------------------
# Truth contrails
# ---------------------------------------------------------------------------


def _truth_shape(plumes: list[PixelPlume], spec: ScenarioSpec, cam: CameraModel):
    if not plumes:
        return None
    shapes = [shapely.Polygon(p) for p in plumes[0].polygons]
    shapes = [s if s.is_valid else shapely.make_valid(s) for s in shapes]
    u = shapely.unary_union(shapes)
    if spec.widen_px > 0:
        u = u.buffer(spec.widen_px, quad_segs=2)
    u = u.intersection(shapely.box(0, 0, cam.width, cam.height))
    if u.is_empty or u.area < spec.min_area_px:
        return None
    return u


def _noisy(shape, sigma: float, rng: np.random.Generator, cam: CameraModel):
    if sigma <= 0:
        return shape
    polys = list(getattr(shape, "geoms", [shape]))
    out = []
    for p in polys:
        if p.geom_type != "Polygon":
            continue
        p = p.simplify(0.5)
        ext = np.asarray(p.exterior.coords)[:-1]
        moved = ext + rng.normal(0.0, sigma, ext.shape)
        q = shapely.make_valid(shapely.Polygon(moved))
        out.append(q)
    if not out:
        return None
    u = shapely.unary_union(out).intersection(shapely.box(0, 0, cam.width, cam.height))
    parts = [g for g in getattr(u, "geoms", [u]) if g.geom_type == "Polygon" and g.area >= 1.0]
    if not parts:
        return None
    return shapely.MultiPolygon(parts) if len(parts) > 1 else parts[0]


def _to_rings(shape) -> list[list[np.ndarray]]:
    out = []
    for g in getattr(shape, "geoms", [shape]):
        if g.geom_type != "Polygon" or g.is_empty:
            continue
        g = shapely.geometry.polygon.orient(g)
        rings = [np.round(np.asarray(g.exterior.coords)[:-1, :2], 3)]
        rings += [np.round(np.asarray(r.coords)[:-1, :2], 3) for r in g.interiors]
        out.append(rings)
    return out


# ---------------------------------------------------------------------------
# Generator
# ---------------------------------------------------------------------------


def _frames(spec: ScenarioSpec, t_end: float) -> np.ndarray:
    n = int(math.floor((t_end - spec.start_time) / spec.frame_interval)) + 1
    return spec.start_time + spec.frame_interval * np.arange(n)


def _flight_truth(fid, track, d, truth_grid, cam, adv, frames, spec):
    """Truth plume pieces of one flight per frame (before noise)."""
    t_on, t_off = _window(track, d, adv.emission_interval)
    parcels = _sub_parcels(emit_parcels(track, adv.emission_interval), t_on, t_off)
    if len(parcels) < 2:
        return t_on, {}
    t_last = min(frames[-1], t_on + d.lifetime)
    live = frames[(frames >= t_on + adv.emission_interval) & (frames <= t_last)]
    if live.size == 0:
        return t_on, {}
    traj = ParcelTrajectories(parcels, truth_grid, adv.step, t_max=float(live[-1]))
    shapes = {}
    for t in live:
        pl = frame_plumes({fid: traj}, cam, adv, float(t), -math.inf, math.inf)
        shp = _truth_shape(pl, spec, cam)
        if shp is not None:
            shapes[float(t)] = shp
    return t_on, shapes


def _candidate_trajectories(tracks, grid, adv, t_lo, t_hi, t_max):
    out = {}
    for tr in tracks:
        p = _sub_parcels(emit_parcels(tr, adv.emission_interval), t_lo, t_hi)
        if len(p) >= 2:
            out[tr.flight_id] = ParcelTrajectories(p, grid, adv.step, t_max=t_max)
    return out


def _cross_distances(contrails, trajectories, cam, adv, match, skip_own=True):
    """``{(cid, fid): min raw distance over frames}`` for every non-generator pair."""
    by_frame: dict[float, list[ObservedContrail]] = {}
    for c in contrails:
        for t in c.polygons:
            by_frame.setdefault(t, []).append(c)
    out = {}
    for t in sorted(by_frame):
        cs = by_frame[t]
        ft = np.array([c.formation_time for c in cs])
        plumes = frame_plumes(trajectories, cam, adv, t, ft.min() - match.dt_before, ft.max() + match.dt_after)
        for c in cs:
            lines = None
            for pl in plumes:
                if skip_own and pl.flight_id == c.flight_id:
                    continue
                polys = retained_polygons(c.formation_time, pl, match)
                if not polys:
                    continue
                if lines is None:
                    lines = centerlines(c.polygons[t], max_cycle_rank=match.max_cycle_rank)
                if not lines:
                    break
                d = pairwise_distance(lines, polys, match.tau_d, match.sample_spacing)
                key = (c.contrail_id, pl.flight_id)
                out[key] = min(out.get(key, math.inf), d)
    return out


def generate_scenario(spec: ScenarioSpec, match: MatchConfig = MatchConfig(), adv: AdvectionConfig = AdvectionConfig()) -> Scenario:
    """Build met grids, candidate and phantom flights, camera and annotations.

    Raises
    ------
    ScenarioError
        When no contrail is visible in any frame.
    """
    rng = np.random.default_rng(spec.seed)
    cam = CameraModel.from_dict(spec.camera)
    t0 = spec.start_time
    lead = 90.0
    t_cross = [t0 + lead + k * spec.crossing_spacing for k in range(spec.n_flights)]
    t_end = t_cross[-1] + spec.lifetime_range[1] * 0.5 + 120.0
    grid = make_grid(spec, t0 - 2400.0, t_end + 600.0)
    ang = rng.uniform(0.0, 2.0 * math.pi)
    du, dv = spec.wind_mismatch * math.cos(ang), spec.wind_mismatch * math.sin(ang)
    truth_grid = make_grid(spec, t0 - 2400.0, t_end + 600.0, du, dv) if spec.wind_mismatch else grid
    frames = _frames(spec, t_end)

    draws = {}
    for k in range(spec.n_flights):
        draws[f"F{k:03d}"] = _draw(rng, spec, t_cross[k] + rng.uniform(-15.0, 15.0))
    for k in range(spec.n_old):
        draws[f"P{k:03d}"] = _draw(rng, spec, t0 - rng.uniform(60.0, 240.0))

    redraws = 0
    for attempt in range(spec.max_redraws + 1):
        tracks = {fid: _track(fid, cam, d) for fid, d in draws.items()}
        contrails: dict[str, ObservedContrail] = {}
        truth_plumes = {}
        for fid in sorted(draws):
            d = draws[fid]
            _, shapes = _flight_truth(fid, tracks[fid], d, truth_grid, cam, adv, frames, spec)
            if not shapes:
                continue
            cid = f"C{fid}"
            phantom = fid.startswith("P")
            first = min(shapes)
            contrails[cid] = ObservedContrail(cid, "old" if phantom else "new", first, {}, None if phantom else fid)
            truth_plumes[cid] = shapes
        cands = [tracks[f] for f in sorted(tracks) if f.startswith("F")]
        if not contrails:
            break
        ft = [c.formation_time for c in contrails.values()]
        trajs = _candidate_trajectories(cands, grid, adv, min(ft) - match.dt_before - 20, max(ft) + match.dt_after + 20, float(frames[-1]))
        clean = {cid: ObservedContrail(c.contrail_id, c.status, c.formation_time, {t: _to_rings(s) for t, s in truth_plumes[cid].items()}, c.flight_id)
                 for cid, c in contrails.items()}
        cross = _cross_distances(clean.values(), trajs, cam, adv, match)
        conflicts = sorted({k for k, v in cross.items() if math.isfinite(v)})
        bad = set()
        for cid, fid in conflicts:
            c = contrails[cid]
            if c.status == "old":
                bad.add(cid[1:])
            elif spec.enforce_separation:
                bad.add(max(cid[1:], fid))
        if not bad or attempt == spec.max_redraws:
            break
        redraws += 1
        for fid in sorted(bad):
            old = draws[fid]
            base = old.t_cross
            draws[fid] = _draw(rng, spec, base)
    if not contrails:
        raise ScenarioError("scenario produced no visible contrail; widen the camera view, move crossings closer or lengthen lifetimes")

    frames_map: dict[float, list[str]] = {}
    for cid in sorted(contrails):
        c = contrails[cid]
        for t in sorted(truth_plumes[cid]):
            shp = _noisy(truth_plumes[cid][t], spec.sigma_px, rng, cam)
            if shp is None:
                continue
            c.polygons[t] = _to_rings(shp)
        if c.polygons:
            c.formation_time = min(c.polygons)
    contrails = {cid: c for cid, c in contrails.items() if c.polygons}
    for cid, c in contrails.items():
        for t in c.polygons:
            frames_map.setdefault(t, []).append(cid)
    frame_times = [float(t) for t in frames if float(t) in frames_map]
    ann = io.Annotations(frame_times, {t: sorted(frames_map[t]) for t in frame_times}, dict(sorted(contrails.items())))

    phantom_d = [v for (cid, _), v in cross.items() if contrails.get(cid) is not None and contrails[cid].status == "old"]
    new_d = [v for (cid, _), v in cross.items() if contrails.get(cid) is not None and contrails[cid].status == "new"]
    report = {
        "seed": spec.seed,
        "n_new": sum(c.status == "new" for c in contrails.values()),
        "n_old": sum(c.status == "old" for c in contrails.values()),
        "n_frames": len(frame_times),
        "redraw_rounds": redraws,
        "phantom_min_distance": min(phantom_d, default=math.inf),
        "phantoms_isolated": all(not math.isfinite(v) for v in phantom_d),
        "new_min_cross_distance": min(new_d, default=math.inf),
        "wind_mismatch_uv": [du, dv],
    }
    if not report["phantoms_isolated"]:
        logger.warning("a phantom contrail lies within tau_d of a candidate plume (min %.2f px)", report["phantom_min_distance"])
    return Scenario(spec, grid, truth_grid, cands, [tracks[f] for f in sorted(tracks) if f.startswith("P")], cam, ann, truth_plumes, report)


def self_distances(scn: Scenario, match: MatchConfig = MatchConfig(), adv: AdvectionConfig = AdvectionConfig()) -> dict[tuple[str, float], float]:
    """Uncapped directed Hausdorff from each new contrail to its generator's plume, per frame."""
    ann = scn.annotations
    ft = [c.formation_time for c in ann.contrails.values()]
    trajs = _candidate_trajectories(scn.tracks, scn.grid, adv, min(ft) - match.dt_before - 20, max(ft) + match.dt_after + 20, ann.frame_times[-1])
    out = {}
    for t in ann.frame_times:
        cs = [ann.contrails[c] for c in ann.frames[t] if ann.contrails[c].status == "new"]
        if not cs:
            continue
        ftf = np.array([c.formation_time for c in cs])
        plumes = {p.flight_id: p for p in frame_plumes(trajs, scn.camera, adv, t, ftf.min() - match.dt_before, ftf.max() + match.dt_after)}
        for c in cs:
            pl = plumes.get(c.flight_id)
            lines = centerlines(c.polygons[t], max_cycle_rank=match.max_cycle_rank)
            if pl is None or not lines:
                out[(c.contrail_id, t)] = math.inf
                continue
            out[(c.contrail_id, t)] = directed_hausdorff(lines, retained_polygons(c.formation_time, pl, match), match.sample_spacing)
    return out


# ---------------------------------------------------------------------------
# Two-flight ambiguity sequence
# ---------------------------------------------------------------------------


def ambiguity_sequence(n_contrails: int = 20, n_frames: int = 6, seed: int = 0, gap: float = 6.0):
    """Pixel-space frames where two flights are equidistant at first sight.

    Each contrail is a horizontal bar. Its true flight ``T`` and a decoy
    ``D`` have plumes offset by the same distance in frame 1; from frame 2
    on the true plume moves onto the contrail while the decoy drifts off,
    so only the temporal memory can recover from the first-frame tie. The
    decoy's id sorts first, so tie-breaking alone picks the decoy.

    Returns ``(frames, contrails)`` where ``frames`` is a list of
    :class:`~contrailmatch.attribution.Frame` and ``contrails`` maps id to
    :class:`~contrailmatch.attribution.ObservedContrail`.
    """
    rng = np.random.default_rng(seed)
    t0 = 0.0
    contrails = {}
    frames = []
    rows = []
    for i in range(n_contrails):
        # odd pixel height centred on a pixel row keeps the skeleton on the bar axis
        y = 40.5 + 60.0 * i
        x0 = float(rng.uniform(20, 60))
        length = float(rng.uniform(80, 200))
        rows.append((y, x0, length))
        cid = f"c{i:03d}"
        contrails[cid] = ObservedContrail(cid, "new", t0, {}, f"T{i:03d}")

    def bar(x0, y, length, h):
        return np.array([[x0, y - h], [x0 + length, y - h], [x0 + length, y + h], [x0, y + h]])

    for k in range(n_frames):
        t = t0 + 30.0 * k
        obs, plumes = [], []
        for i, (y, x0, length) in enumerate(rows):
            cid = f"c{i:03d}"
            poly = bar(x0, y, length, 2.5)
            contrails[cid].polygons[t] = [[poly]]
            obs.append(contrails[cid].observation(t))
            if k == 0:
                dt_off, dd_off = gap, -gap
            else:
                dt_off, dd_off = 0.0, -(gap + 4.0 * k)
            plumes.append(PixelPlume(f"T{i:03d}", [t0], [bar(x0 - 10, y + dt_off, length + 20, 1.0)]))
            plumes.append(PixelPlume(f"D{i:03d}", [t0], [bar(x0 - 10, y + dd_off, length + 20, 1.0)]))
        frames.append(Frame(t, obs, plumes))
    return frames, contrails


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def write_scenario(scn: Scenario, out_dir, match: MatchConfig | None = None) -> dict[str, Path]:
    """Write met, flights, camera, annotations, config and truth report files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "met": out / "met.txt",
        "flights": out / "flights.csv",
        "camera": out / "camera.yaml",
        "annotations": out / "annotations.json",
        "config": out / "config.yaml",
        "truth": out / "truth.json",
    }
    write_met_grid(scn.grid, paths["met"])
    io.write_flights(paths["flights"], scn.tracks)
    cam_doc = {"format_version": io.FORMAT_VERSION, **scn.camera.to_dict()}
    paths["camera"].write_text(yaml.safe_dump(cam_doc, sort_keys=True))
    ann = scn.annotations
    io.write_annotations(paths["annotations"], ann.frame_times, ann.frames, ann.contrails)
    cfg = {
        "format_version": io.FORMAT_VERSION,
        "annotations": paths["annotations"].name,
        "flights": paths["flights"].name,
        "met": paths["met"].name,
        "camera": paths["camera"].name,
        "out": "run",
    }
    if match is not None:
        cfg["match"] = asdict(match)
    paths["config"].write_text(yaml.safe_dump(cfg, sort_keys=True))
    truth = {"format_version": io.FORMAT_VERSION, "spec": asdict(scn.spec), "report": scn.report}
    paths["truth"].write_text(json.dumps(_jsonable(truth), indent=2, sort_keys=True) + "\n")
    return paths


def _jsonable(o):
    """Plain JSON types; non-finite floats become ``null``."""
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.floating, np.integer)):
        o = o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    return o
