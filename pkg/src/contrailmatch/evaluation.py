"""Outcome classification and dataset-level summaries."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from contrailmatch.errors import DataError


class Outcome(str, enum.Enum):
    CORRECT_ATTRIBUTION = "correct_attribution"
    WRONG_ATTRIBUTION = "wrong_attribution"
    FALSE_ATTRIBUTION = "false_attribution"
    CORRECT_OMISSION = "correct_omission"
    MISSED_ATTRIBUTION = "missed_attribution"

    @property
    def attributed(self) -> bool:
        return self in (Outcome.CORRECT_ATTRIBUTION, Outcome.WRONG_ATTRIBUTION, Outcome.FALSE_ATTRIBUTION)


# (status, attributed, outcome) in report order
FLOW_ORDER = (
    ("new", True, Outcome.CORRECT_ATTRIBUTION),
    ("new", True, Outcome.WRONG_ATTRIBUTION),
    ("new", False, Outcome.MISSED_ATTRIBUTION),
    ("old", True, Outcome.FALSE_ATTRIBUTION),
    ("old", False, Outcome.CORRECT_OMISSION),
)

EVALUATION_POINTS = ("first", "last")


def classify_outcome(assigned: str | None, status: str, truth_flight: str | None = None) -> Outcome:
    status = status.lower()
    if status == "new":
        if truth_flight is None:
            raise DataError("new contrail without a ground-truth flight id")
        if assigned is None:
            return Outcome.MISSED_ATTRIBUTION
        return Outcome.CORRECT_ATTRIBUTION if assigned == truth_flight else Outcome.WRONG_ATTRIBUTION
    if status == "old":
        return Outcome.CORRECT_OMISSION if assigned is None else Outcome.FALSE_ATTRIBUTION
    raise DataError(f"unknown contrail status {status!r}")


def _ratio(a: int, b: int) -> Fraction | None:
    return Fraction(a, b) if b else None


@dataclass
class SummaryReport:
    """Counts, fractions and within-group rates at one evaluation point.

    Fractions are kept as exact :class:`~fractions.Fraction` values so they
    sum to one without rounding; use :meth:`to_dict` for floats.
    """

    point: str
    counts: dict[Outcome, int]
    status_counts: dict[str, int]
    outcomes: dict[str, Outcome] = field(default_factory=dict, repr=False)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def fraction(self, outcome: Outcome) -> Fraction:
        return _ratio(self.counts[outcome], self.total) or Fraction(0)

    @property
    def fractions(self) -> dict[Outcome, Fraction]:
        return {o: self.fraction(o) for o in Outcome}

    @property
    def rates(self) -> dict[str, Fraction | None]:
        c = self.counts
        n_new = self.status_counts.get("new", 0)
        n_old = self.status_counts.get("old", 0)
        attributed = sum(v for o, v in c.items() if o.attributed)
        return {
            "new_correct_rate": _ratio(c[Outcome.CORRECT_ATTRIBUTION], n_new),
            "new_wrong_rate": _ratio(c[Outcome.WRONG_ATTRIBUTION], n_new),
            "new_missed_rate": _ratio(c[Outcome.MISSED_ATTRIBUTION], n_new),
            "old_omission_rate": _ratio(c[Outcome.CORRECT_OMISSION], n_old),
            "old_false_rate": _ratio(c[Outcome.FALSE_ATTRIBUTION], n_old),
            "precision": _ratio(c[Outcome.CORRECT_ATTRIBUTION], attributed),
            "recall": _ratio(c[Outcome.CORRECT_ATTRIBUTION], n_new),
        }

    def flows(self) -> list[dict]:
        """Sankey flow rows, always all five, in a stable order."""
        rows = []
        for status, attributed, outcome in FLOW_ORDER:
            n = self.counts[outcome]
            rows.append(
                {
                    "point": self.point,
                    "status": status,
                    "attributed": attributed,
                    "outcome": outcome.value,
                    "count": n,
                    "fraction": float(self.fraction(outcome)),
                }
            )
        return rows

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "total": self.total,
            "status_counts": dict(sorted(self.status_counts.items())),
            "counts": {o.value: self.counts[o] for o in Outcome},
            "fractions": {o.value: float(self.fraction(o)) for o in Outcome},
            "rates": {k: (None if v is None else float(v)) for k, v in self.rates.items()},
        }

    def to_table(self) -> str:
        lines = [f"evaluation point: {self.point}  (contrails: {self.total})"]
        for status, attributed, outcome in FLOW_ORDER:
            tag = "attributed" if attributed else "unattributed"
            n = self.counts[outcome]
            lines.append(f"  {status:<4} {tag:<13} {outcome.value:<20} {n:>6}  {100 * float(self.fraction(outcome)):6.1f}%")
        for k, v in self.rates.items():
            lines.append(f"  {k:<18} {'n/a' if v is None else f'{100 * float(v):.1f}%'}")
        return "\n".join(lines)


def aggregate(outcomes: Mapping[str, tuple[str, Outcome]], point: str) -> SummaryReport:
    """Summarise ``{contrail_id: (status, outcome)}`` at one evaluation point."""
    if point not in EVALUATION_POINTS:
        raise ValueError(f"evaluation point must be one of {EVALUATION_POINTS}")
    counts = {o: 0 for o in Outcome}
    status_counts = {"new": 0, "old": 0}
    per = {}
    for cid, (status, outcome) in outcomes.items():
        counts[outcome] += 1
        status_counts[status] += 1
        per[cid] = outcome
    return SummaryReport(point, counts, status_counts, per)


def outcomes_at(contrails: Iterable, assignments: Mapping[tuple[float, str], str | None], point: str) -> dict[str, tuple[str, Outcome]]:
    """Classify every contrail at its first or last visible frame.

    ``assignments`` maps ``(frame_time, contrail_id)`` to the assigned
    flight id (``None`` when unattributed).
    """
    out = {}
    for c in contrails:
        times = c.frame_times
        if not times:
            continue
        t = times[0] if point == "first" else times[-1]
        assigned = assignments.get((t, c.contrail_id))
        out[c.contrail_id] = (c.status, classify_outcome(assigned, c.status, c.flight_id))
    return out


def evaluate(contrails, assignments, points: Iterable[str] = EVALUATION_POINTS) -> dict[str, SummaryReport]:
    contrails = list(contrails)
    return {p: aggregate(outcomes_at(contrails, assignments, p), p) for p in points}
