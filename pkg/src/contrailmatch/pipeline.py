"""Run configuration and end-to-end orchestration of the matcher."""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from contrailmatch import geo, io, overlay
from contrailmatch.advection import (
    DEGENERATE_LENGTH_M,
    EMISSION_INTERVAL_S,
    INITIAL_WIDTH_M,
    INTEGRATION_STEP_S,
    WIDTH_GROWTH_M_S,
    FlightTrack,
    ParcelTrajectories,
    emit_parcels,
)
from contrailmatch.attribution import (
    AttributionResult,
    AttributionState,
    Frame,
    MatchConfig,
    PixelPlume,
    attribute_frame,
)
from contrailmatch.camera import DEFAULT_DENSIFY_M, CameraModel, project_points, project_quads
from contrailmatch.errors import ContrailMatchError, LoadError, OutOfDomainError
from contrailmatch.evaluation import EVALUATION_POINTS, SummaryReport, evaluate
from contrailmatch.met import DEFAULT_LEVEL_BAND, MetGrid, load_met_grid

logger = logging.getLogger(__name__)

CONFIG_ENV = "CONTRAILMATCH_CONFIG"
DEFAULT_NEIGHBOURHOOD_KM = 150.0


@dataclass(frozen=True)
class AdvectionConfig:
    emission_interval: float = EMISSION_INTERVAL_S
    step: float = INTEGRATION_STEP_S
    initial_width: float = INITIAL_WIDTH_M
    width_growth: float = WIDTH_GROWTH_M_S
    epsilon: float = DEGENERATE_LENGTH_M
    densify_step: float = DEFAULT_DENSIFY_M

    def __post_init__(self):
        for name in ("emission_interval", "step", "initial_width", "epsilon", "densify_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"advection.{name} must be positive")
        if self.width_growth < 0:
            raise ValueError("advection.width_growth must be non-negative")


@dataclass
class RunConfig:
    """Resolved run configuration; file paths are absolute after loading."""

    annotations: Path | None = None
    flights: Path | None = None
    met: Path | None = None
    camera: Path | dict | None = None
    match: MatchConfig = field(default_factory=MatchConfig)
    advection: AdvectionConfig = field(default_factory=AdvectionConfig)
    evaluation_points: tuple[str, ...] = EVALUATION_POINTS
    out: Path | None = None
    overlays: bool = False
    neighbourhood_km: float = DEFAULT_NEIGHBOURHOOD_KM
    level_band: tuple[float, float] = DEFAULT_LEVEL_BAND

    def validate(self) -> None:
        for name in ("annotations", "flights", "met"):
            p = getattr(self, name)
            if p is None:
                raise LoadError(f"run configuration is missing the '{name}' path")
            if not Path(p).is_file():
                raise LoadError(f"{name} file not found: {p}")
        if self.camera is None:
            raise LoadError("run configuration is missing the camera block")
        if not isinstance(self.camera, dict) and not Path(self.camera).is_file():
            raise LoadError(f"camera file not found: {self.camera}")
        bad = [p for p in self.evaluation_points if p not in EVALUATION_POINTS]
        if bad or not self.evaluation_points:
            raise LoadError(f"evaluation points must be drawn from {EVALUATION_POINTS}, got {self.evaluation_points}")
        if not self.neighbourhood_km > 0:
            raise LoadError("neighbourhood_km must be positive")

    def to_dict(self) -> dict:
        cam = self.camera if isinstance(self.camera, dict) or self.camera is None else str(self.camera)
        return {
            "format_version": io.FORMAT_VERSION,
            "annotations": None if self.annotations is None else str(self.annotations),
            "flights": None if self.flights is None else str(self.flights),
            "met": None if self.met is None else str(self.met),
            "camera": cam,
            "match": asdict(self.match),
            "advection": asdict(self.advection),
            "evaluation_points": list(self.evaluation_points),
            "out": None if self.out is None else str(self.out),
            "overlays": self.overlays,
            "neighbourhood_km": self.neighbourhood_km,
            "level_band": list(self.level_band),
        }


def _section(cls, raw, name):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise LoadError(f"config section '{name}' must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise LoadError(f"unknown keys in config section '{name}': {', '.join(unknown)}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise LoadError(f"config section '{name}': {exc}") from exc


def config_from_mapping(doc: dict, base_dir: Path | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from a parsed YAML/JSON document.

    Relative paths resolve against ``base_dir`` (the config file's folder).
    """
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    ver = int(doc.get("format_version", io.FORMAT_VERSION))
    if ver != io.FORMAT_VERSION:
        raise LoadError(f"unsupported config format_version {ver}")

    def path(key):
        v = doc.get(key)
        if v is None or isinstance(v, dict):
            return v
        p = Path(v)
        return p if p.is_absolute() else (base / p)

    known = {"format_version", "annotations", "flights", "met", "camera", "match", "advection",
             "evaluation_points", "out", "overlays", "neighbourhood_km", "level_band"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise LoadError(f"unknown config keys: {', '.join(unknown)}")
    cfg = RunConfig(
        annotations=path("annotations"),
        flights=path("flights"),
        met=path("met"),
        camera=path("camera"),
        match=_section(MatchConfig, doc.get("match"), "match"),
        advection=_section(AdvectionConfig, doc.get("advection"), "advection"),
        out=path("out"),
        overlays=bool(doc.get("overlays", False)),
        neighbourhood_km=float(doc.get("neighbourhood_km", DEFAULT_NEIGHBOURHOOD_KM)),
    )
    if "evaluation_points" in doc:
        pts = doc["evaluation_points"]
        cfg.evaluation_points = (pts,) if isinstance(pts, str) else tuple(pts)
    if "level_band" in doc:
        lo, hi = doc["level_band"]
        cfg.level_band = (float(lo), float(hi))
    return cfg


def load_config(path=None) -> RunConfig:
    """Read a YAML or JSON config; falls back to ``$CONTRAILMATCH_CONFIG``, then defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text()) or {}
    except OSError as exc:
        raise LoadError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise LoadError(f"malformed config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise LoadError(f"config {path} must be a mapping")
    return config_from_mapping(doc, path.parent.resolve())


def load_camera(spec) -> CameraModel:
    if isinstance(spec, CameraModel):
        return spec
    if isinstance(spec, dict):
        doc = spec
    else:
        try:
            doc = yaml.safe_load(Path(spec).read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise LoadError(f"cannot read camera file {spec}: {exc}") from exc
    doc = dict(doc)
    doc.pop("format_version", None)
    try:
        return CameraModel.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise LoadError(f"invalid camera block: {exc}") from exc


# ---------------------------------------------------------------------------
# Core loop
# ---------------------------------------------------------------------------


@dataclass
class SequenceResult:
    state: AttributionState
    frames: list[Frame]
    overlays: list[overlay.FrameOverlay]
    n_candidates: int

    @property
    def history(self) -> list[AttributionResult]:
        return self.state.history

    def assignment_map(self) -> dict[tuple[float, str], str | None]:
        return {(r.frame_time, a.contrail_id): a.flight_id for r in self.history for a in r.assignments}


def prefilter_flights(tracks, cam: CameraModel, t0: float, t1: float, radius_km: float, sample_s: float = 10.0):
    """Flights with any position within ``radius_km`` of the camera during ``[t0, t1]``."""
    keep = []
    for tr in tracks:
        lo, hi = max(t0, tr.t_start), min(t1, tr.t_end)
        if hi < lo:
            continue
        ts = np.unique(np.concatenate([np.arange(lo, hi, sample_s), [hi], tr.t[(tr.t >= lo) & (tr.t <= hi)]]))
        lat, lon, _ = tr.position_at(ts)
        e, n = geo.local_offset_m(cam.lat, cam.lon, lat, lon)
        if np.min(np.hypot(e, n)) <= radius_km * 1000.0:
            keep.append(tr)
    return keep


def _track_pixels(cam: CameraModel, tr: FlightTrack, t_hi: float, sample_s: float = 10.0) -> list[np.ndarray]:
    hi = min(t_hi, tr.t_end)
    if hi <= tr.t_start:
        return []
    ts = np.append(np.arange(tr.t_start, hi, sample_s), hi)
    lat, lon, p = tr.position_at(ts)
    uv, vis = project_points(cam, lat, lon, pressure=p)
    pieces, cur = [], []
    for k in range(ts.size):
        if vis[k]:
            cur.append(uv[k])
        elif cur:
            pieces.append(np.array(cur))
            cur = []
    if cur:
        pieces.append(np.array(cur))
    return [pc for pc in pieces if pc.shape[0] >= 2]


def frame_plumes(trajectories: dict, cam: CameraModel, adv: AdvectionConfig, t: float, w_lo: float, w_hi: float) -> list[PixelPlume]:
    """Pixel plumes at frame ``t`` keeping segments formed within ``[w_lo, w_hi]``."""
    plumes = []
    for fid in sorted(trajectories):
        traj = trajectories[fid]
        if traj.parcels.t_emit[0] > t:
            continue
        try:
            th = traj.plume_at(t, adv.initial_width, adv.width_growth)
        except ContrailMatchError as exc:
            raise ContrailMatchError(f"frame t={t}: flight {fid}: {exc}") from exc
        sel = (th.formation_time >= w_lo) & (th.formation_time <= w_hi)
        if not sel.any():
            continue
        polys, keep = project_quads(cam, th.quads(adv.epsilon)[sel], adv.densify_step)
        if polys:
            plumes.append(PixelPlume(fid, th.formation_time[sel][keep], polys))
    return plumes


def attribute_sequence(
    ann: io.Annotations,
    tracks: list[FlightTrack],
    grid: MetGrid,
    cam: CameraModel,
    match: MatchConfig = MatchConfig(),
    adv: AdvectionConfig = AdvectionConfig(),
    neighbourhood_km: float = DEFAULT_NEIGHBOURHOOD_KM,
    with_overlays: bool = False,
) -> SequenceResult:
    """Advect, project and attribute every annotated frame in time order."""
    state = AttributionState()
    if not ann.frame_times:
        return SequenceResult(state, [], [], 0)
    t_first, t_last = ann.frame_times[0], ann.frame_times[-1]
    formation = np.array(sorted({c.formation_time for c in ann.contrails.values()}))
    t_lo = float(formation.min()) - match.dt_before
    t_hi = min(float(formation.max()) + match.dt_after, t_last)
    if not grid.covers_time(t_lo, t_last):
        raise OutOfDomainError(
            f"met grid times {grid.times[0]:g}..{grid.times[-1]:g} do not cover the video window "
            f"{t_lo:g}..{t_last:g} (first frame minus dt_before to last frame)"
        )

    cands = prefilter_flights(tracks, cam, t_lo, t_last, neighbourhood_km)
    logger.info("%d of %d flights within %g km of the camera", len(cands), len(tracks), neighbourhood_km)

    trajectories = {}
    pad = adv.emission_interval + 1e-6
    for tr in cands:
        parcels = emit_parcels(tr, adv.emission_interval)
        # only parcels whose segments can pass some contrail's time window matter
        sel = (parcels.t_emit >= t_lo - pad) & (parcels.t_emit <= t_hi + pad)
        if sel.sum() < 2:
            continue
        sub = type(parcels)(parcels.flight_id, parcels.t_emit[sel], parcels.lat[sel], parcels.lon[sel], parcels.pressure[sel])
        trajectories[tr.flight_id] = ParcelTrajectories(sub, grid, adv.step, t_max=t_last)

    frames, overlays = [], []
    prev = None
    for t in ann.frame_times:
        assert prev is None or t > prev, "frames must be processed in time order"
        prev = t
        obs = [ann.contrails[cid].observation(t) for cid in ann.frames[t]]
        if obs:
            ft = np.array([o.formation_time for o in obs])
            w_lo, w_hi = ft.min() - match.dt_before, ft.max() + match.dt_after
        plumes = frame_plumes(trajectories, cam, adv, t, w_lo, w_hi) if obs else []
        frame = Frame(t, obs, plumes)
        try:
            result = attribute_frame(state, frame, match)
        except (ValueError, ContrailMatchError) as exc:
            raise ContrailMatchError(f"frame t={t}: {exc}") from exc
        frames.append(frame)
        if with_overlays:
            by = result.by_contrail()
            ov = overlay.FrameOverlay(t)
            for o in obs:
                ov.contrails[o.contrail_id] = (o.polygons, by[o.contrail_id].flight_id)
            for pl in plumes:
                ov.plumes[pl.flight_id] = pl.polygons
            for tr in cands:
                pieces = _track_pixels(cam, tr, t)
                if pieces:
                    ov.trajectories[tr.flight_id] = pieces
            overlays.append(ov)
    return SequenceResult(state, frames, overlays, len(cands))


# ---------------------------------------------------------------------------
# Full run
# ---------------------------------------------------------------------------


@dataclass
class PipelineResult:
    history: list[AttributionResult]
    reports: dict[str, SummaryReport]
    overlay_paths: list[Path]
    sequence: SequenceResult | None = None


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Load inputs, attribute every frame, evaluate and write outputs to ``cfg.out``."""
    cfg.validate()
    ann = io.load_annotations(cfg.annotations)
    tracks = io.load_flights(cfg.flights)
    grid = load_met_grid(cfg.met, level_band=cfg.level_band)
    cam = load_camera(cfg.camera)
    if not ann.frame_times or not ann.contrails:
        logger.warning("annotation file %s contains no contrails; writing an empty report", cfg.annotations)

    seq = attribute_sequence(ann, tracks, grid, cam, cfg.match, cfg.advection, cfg.neighbourhood_km, cfg.overlays)
    out = Path(cfg.out) if cfg.out is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        io.write_records(out / "records.csv", seq.history)
    reports = evaluate(ann.contrails.values(), seq.assignment_map(), cfg.evaluation_points)
    paths: list[Path] = []
    if out is not None:
        io.write_report(out, reports)
        if cfg.overlays:
            paths = overlay.emit_overlays(seq.overlays, out / "overlays", cam.width, cam.height)
    return PipelineResult(seq.history, reports, paths, seq)


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    """Copy of ``cfg`` with match/advection fields and top-level keys overridden (``None`` ignored)."""
    kw = {k: v for k, v in kw.items() if v is not None}
    match_keys = {f.name for f in fields(MatchConfig)}
    adv_keys = {f.name for f in fields(AdvectionConfig)}
    m = {k: kw.pop(k) for k in list(kw) if k in match_keys}
    a = {k: kw.pop(k) for k in list(kw) if k in adv_keys}
    try:
        new = replace(cfg, **kw)
        if m:
            new.match = replace(cfg.match, **m)
        if a:
            new.advection = replace(cfg.advection, **a)
    except (TypeError, ValueError) as exc:
        raise LoadError(f"invalid parameter override: {exc}") from exc
    return new


def resolved_config_json(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True, default=lambda o: None if isinstance(o, float) and math.isnan(o) else str(o)) + "\n"
