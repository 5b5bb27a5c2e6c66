"""Frame-by-frame contrail-to-flight attribution.

Each frame runs: temporal filtering of plume segments around every
contrail's formation time, directed Hausdorff distances with a cut-off,
EWMA smoothing of the distances, a softmax over candidates with a
probability floor, and finally an assignment of flights to contrails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import shapely
from scipy.optimize import linear_sum_assignment

from contrailmatch import geometry
from contrailmatch.geometry import Polyline

TIE = 1e-12


@dataclass(frozen=True)
class MatchConfig:
    """Matching hyperparameters.

    ``d_cap`` replaces an infinite current distance when updating the memory
    of a pair that has been seen before; ``None`` means "use ``tau_d``".
    """

    dt_before: float = 120.0
    dt_after: float = 120.0
    tau_d: float = 30.0
    alpha: float = 0.7
    beta: float = 1.0
    tau_p: float = 0.5
    normalization: Literal["row", "global"] = "row"
    assignment: Literal["greedy", "hungarian"] = "greedy"
    d_cap: float | None = None
    sentinel: float = -1e9
    sample_spacing: float = geometry.DEFAULT_SAMPLE_SPACING
    max_cycle_rank: int = geometry.DEFAULT_MAX_CYCLE_RANK

    def __post_init__(self):
        if self.dt_before < 0 or self.dt_after < 0:
            raise ValueError("temporal tolerances must be non-negative")
        if not self.tau_d > 0:
            raise ValueError("tau_d must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not 0.0 <= self.tau_p <= 1.0:
            raise ValueError("tau_p must lie in [0, 1]")
        if self.normalization not in ("row", "global"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        if self.assignment not in ("greedy", "hungarian"):
            raise ValueError(f"unknown assignment {self.assignment!r}")
        if self.d_cap is not None and not self.d_cap >= 0:
            raise ValueError("d_cap must be non-negative")

    @property
    def cap(self) -> float:
        return self.tau_d if self.d_cap is None else self.d_cap


@dataclass(eq=False)
class ObservedContrail:
    """An annotated contrail across the frames in which it appears.

    ``polygons`` maps frame time to the pixel multipolygon in that frame.
    ``flight_id`` is the ground-truth generating flight (new contrails only)
    and is never read by the matcher.
    """

    contrail_id: str
    status: str
    formation_time: float
    polygons: dict[float, list] = field(default_factory=dict)
    flight_id: str | None = None

    def __post_init__(self):
        if self.status not in ("new", "old"):
            raise ValueError(f"status must be 'new' or 'old', got {self.status!r}")
        if self.polygons and self.formation_time > min(self.polygons) + 1e-9:
            raise ValueError(f"contrail {self.contrail_id}: formation time after first appearance")

    @property
    def frame_times(self) -> list[float]:
        return sorted(self.polygons)

    def observation(self, frame_time: float) -> "ContrailObservation":
        return ContrailObservation(self.contrail_id, self.formation_time, self.polygons[frame_time])


@dataclass(eq=False)
class ContrailObservation:
    """One contrail in one frame, with its centrelines computed on demand."""

    contrail_id: str
    formation_time: float
    polygons: list
    lines: list[Polyline] | None = None

    def centerlines(self, max_cycle_rank: int = geometry.DEFAULT_MAX_CYCLE_RANK) -> list[Polyline]:
        if self.lines is None:
            self.lines = geometry.centerlines(self.polygons, max_cycle_rank=max_cycle_rank)
        return self.lines


@dataclass(eq=False)
class PixelPlume:
    """A theoretical contrail already projected to pixels for one frame."""

    flight_id: str
    formation_times: np.ndarray
    polygons: list[np.ndarray]

    def __post_init__(self):
        self.formation_times = np.asarray(self.formation_times, dtype=float).reshape(-1)
        if self.formation_times.size != len(self.polygons):
            raise ValueError("one formation time per polygon required")


@dataclass(eq=False)
class Frame:
    frame_time: float
    contrails: list[ContrailObservation]
    plumes: list[PixelPlume]


@dataclass(frozen=True)
class ContrailAssignment:
    contrail_id: str
    flight_id: str | None
    probability: float | None
    aggregated_distance: float | None
    raw_distance: float | None


@dataclass
class AttributionResult:
    frame_time: float
    assignments: list[ContrailAssignment]

    def by_contrail(self) -> dict[str, ContrailAssignment]:
        return {a.contrail_id: a for a in self.assignments}


@dataclass
class AttributionState:
    """Persistent EWMA memory plus the last probability matrix and history."""

    memory: dict[tuple[str, str], float] = field(default_factory=dict)
    probabilities: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    row_ids: list[str] = field(default_factory=list)
    col_ids: list[str] = field(default_factory=list)
    history: list[AttributionResult] = field(default_factory=list)
    last_frame_time: float | None = None


# ---------------------------------------------------------------------------
# Steps
# ---------------------------------------------------------------------------


def retained_polygons(formation_time: float, plume: PixelPlume, cfg: MatchConfig) -> list[np.ndarray]:
    """Plume polygons whose formation time lies in the contrail's window."""
    t = plume.formation_times
    keep = (t >= formation_time - cfg.dt_before) & (t <= formation_time + cfg.dt_after)
    return [plume.polygons[k] for k in np.flatnonzero(keep)]


def temporal_filter(c: ContrailObservation, plume: PixelPlume, cfg: MatchConfig):
    """Unary union of the retained plume polygons, or ``None`` when the pair is discarded."""
    polys = retained_polygons(c.formation_time, plume, cfg)
    if not polys:
        return None
    shapes = [shapely.make_valid(shapely.Polygon(p)) for p in polys]
    return shapely.unary_union(shapes)


def pairwise_distance(c_geom, filtered, tau_d: float, spacing: float = geometry.DEFAULT_SAMPLE_SPACING) -> float:
    """Directed Hausdorff distance, replaced by ``inf`` when it exceeds ``tau_d``.

    ``filtered`` may be the union returned by :func:`temporal_filter` or the
    list of retained polygons; the distance to a union of filled regions is
    the minimum over its parts, so both give the same value.
    """
    if filtered is None:
        return math.inf
    polys = geometry.as_multipolygon(filtered)
    if not polys or not c_geom:
        return math.inf
    d = geometry.directed_hausdorff(c_geom, polys, spacing=spacing, cutoff=tau_d)
    return math.inf if d > tau_d else d


def update_memory(state: AttributionState, distances: dict, alpha: float, d_cap: float) -> AttributionState:
    """EWMA update of the pairwise memory.

    First observations initialise the memory to the current distance; an
    infinite distance for a known pair pulls the memory toward ``d_cap``;
    infinite distances for unknown pairs and pairs absent from
    ``distances`` leave the memory untouched.
    """
    mem = state.memory
    for pair, d in distances.items():
        if pair in mem:
            x = d if math.isfinite(d) else d_cap
            mem[pair] = alpha * mem[pair] + (1.0 - alpha) * x
        elif math.isfinite(d):
            mem[pair] = d
    return state


def softmax_probabilities(D, beta: float, mode: str = "row", sentinel: float = -1e9) -> np.ndarray:
    """Softmax of ``-D`` with excluded (infinite) entries scored at ``sentinel``."""
    D = np.asarray(D, dtype=float)
    finite = np.isfinite(D)
    S = np.where(finite, -np.where(finite, D, 0.0), sentinel) * beta
    P = np.zeros_like(S)
    if D.size == 0:
        return P
    if mode == "row":
        live = finite.any(axis=1)
        if live.any():
            s = S[live]
            e = np.exp(s - s.max(axis=1, keepdims=True))
            P[live] = e / e.sum(axis=1, keepdims=True)
    elif mode == "global":
        if finite.any():
            e = np.exp(S - S.max())
            P = e / e.sum()
    else:
        raise ValueError(f"unknown normalization {mode!r}")
    return P


def to_probabilities(D, beta: float, tau_p: float, mode: str = "row", sentinel: float = -1e9) -> np.ndarray:
    """Softmax probabilities with entries below ``tau_p`` set to zero."""
    P = softmax_probabilities(D, beta, mode, sentinel)
    return np.where(P < tau_p, 0.0, P)


def assign_greedy(P, D=None, flight_ids=None) -> list[int | None]:
    """Row-wise argmax over non-zero entries; no one-to-one constraint.

    Ties go to the lowest aggregated distance, then the smallest flight id.
    """
    P = np.asarray(P, dtype=float)
    m, n = P.shape
    D = np.zeros_like(P) if D is None else np.asarray(D, dtype=float)
    ids = [str(j) for j in range(n)] if flight_ids is None else list(flight_ids)
    out = []
    for i in range(m):
        row = P[i]
        nz = np.flatnonzero(row > 0)
        if nz.size == 0:
            out.append(None)
            continue
        top = row[nz].max()
        cands = [j for j in nz if row[j] == top]
        out.append(min(cands, key=lambda j: (D[i, j], ids[j])))
    return out


def assign_hungarian(P) -> list[int | None]:
    """One-to-one assignment maximising total probability over non-zero entries.

    Zero entries (below the floor) act as dummy profit, so leaving a row
    unmatched costs nothing; rectangular matrices are handled directly.
    """
    P = np.asarray(P, dtype=float)
    m = P.shape[0]
    out: list[int | None] = [None] * m
    if P.size == 0:
        return out
    rows, cols = linear_sum_assignment(P, maximize=True)
    for i, j in zip(rows, cols):
        if P[i, j] > 0:
            out[i] = int(j)
    return out


def attribute_frame(state: AttributionState, frame: Frame, cfg: MatchConfig) -> AttributionResult:
    """Run one frame through filter, distance, memory, probabilities and assignment."""
    if state.last_frame_time is not None and frame.frame_time < state.last_frame_time:
        raise ValueError(f"frame {frame.frame_time} arrives after frame {state.last_frame_time}")
    contrails = sorted(frame.contrails, key=lambda c: c.contrail_id)
    plumes = sorted(frame.plumes, key=lambda p: p.flight_id)
    row_ids = [c.contrail_id for c in contrails]
    col_ids = [p.flight_id for p in plumes]
    if len(set(row_ids)) != len(row_ids):
        raise ValueError(f"duplicate contrail id in frame {frame.frame_time}")

    raw: dict[tuple[str, str], float] = {}
    for c in contrails:
        lines = c.centerlines(cfg.max_cycle_rank)
        for p in plumes:
            polys = retained_polygons(c.formation_time, p, cfg)
            if not polys:
                continue
            raw[(c.contrail_id, p.flight_id)] = pairwise_distance(lines, polys, cfg.tau_d, cfg.sample_spacing)

    update_memory(state, raw, cfg.alpha, cfg.cap)

    m, n = len(row_ids), len(col_ids)
    D = np.full((m, n), np.inf)
    for i, cid in enumerate(row_ids):
        for j, fid in enumerate(col_ids):
            pair = (cid, fid)
            if pair in raw and pair in state.memory:
                D[i, j] = state.memory[pair]
    P = to_probabilities(D, cfg.beta, cfg.tau_p, cfg.normalization, cfg.sentinel)
    if cfg.assignment == "greedy":
        picks = assign_greedy(P, D, col_ids)
    else:
        picks = assign_hungarian(P)

    out = []
    for i, cid in enumerate(row_ids):
        j = picks[i]
        if j is None:
            out.append(ContrailAssignment(cid, None, None, None, None))
        else:
            fid = col_ids[j]
            out.append(ContrailAssignment(cid, fid, float(P[i, j]), float(D[i, j]), float(raw[(cid, fid)])))
    result = AttributionResult(frame.frame_time, out)
    state.probabilities = P
    state.row_ids = row_ids
    state.col_ids = col_ids
    state.history.append(result)
    state.last_frame_time = frame.frame_time
    return result
