"""Best-worst-scaling aggregation over human judgment logs.

A system's score is the fraction of times it is chosen best minus the
fraction chosen worst, in [-1, 1]. Fractions are kept exact (stdlib
Fraction) so the per-vote zero-sum identity holds bit-exactly; report
code formats them as floats.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

BWS_MODES = ("per_majority", "per_vote")


class BwsError(ValueError):
    pass


@dataclass(frozen=True)
class JudgmentRecord:
    event_id: str
    t: int
    judge_id: str
    display_order: tuple[str, ...]
    best: str
    worst: str
    justification: str = ""
    elapsed_ms: int = 0
    task_type: str = "bws_judgment"
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.best == self.worst:
            raise BwsError("best and worst must differ")
        if self.best not in self.display_order or self.worst not in self.display_order:
            raise BwsError("best and worst must be among the displayed systems")
        if len(set(self.display_order)) != len(self.display_order):
            raise BwsError("display_order must be a permutation (no repeats)")

    @property
    def item_id(self) -> str:
        return f"{self.event_id}:{self.t}"

    def to_record(self) -> dict:
        return {
            "item_id": self.item_id,
            "judge_id": self.judge_id,
            "display_order": list(self.display_order),
            "best": self.best,
            "worst": self.worst,
            "justification": self.justification,
            "elapsed_ms": self.elapsed_ms,
            "task_type": self.task_type,
            "flags": list(self.flags),
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "JudgmentRecord":
        event_id, t = str(record["item_id"]).rsplit(":", 1)
        return cls(
            event_id=event_id,
            t=int(t),
            judge_id=str(record["judge_id"]),
            display_order=tuple(record["display_order"]),
            best=record["best"],
            worst=record["worst"],
            justification=record.get("justification", ""),
            elapsed_ms=int(record.get("elapsed_ms", 0)),
            task_type=record.get("task_type", "bws_judgment"),
            flags=tuple(record.get("flags", [])),
        )


@dataclass(frozen=True)
class ItemDesignation:
    """Best/worst system sets for one item, from any judging method
    (BWS majority picks, BUS score designations, BUS-Human)."""

    event_id: str
    t: int
    best: frozenset[str]
    worst: frozenset[str]


@dataclass(frozen=True)
class MajorityPick:
    best: str | None
    worst: str | None


def group_by_item(judgments: Iterable[JudgmentRecord]) -> dict[str, list[JudgmentRecord]]:
    items: dict[str, list[JudgmentRecord]] = {}
    for judgment in judgments:
        items.setdefault(judgment.item_id, []).append(judgment)
    return items


def majority_pick(item_judgments: Sequence[JudgmentRecord]) -> MajorityPick:
    """Strict majority (> J/2 votes) or none."""
    if not item_judgments:
        raise BwsError("majority_pick needs at least one judgment")
    judges = len(item_judgments)
    best_votes = Counter(j.best for j in item_judgments)
    worst_votes = Counter(j.worst for j in item_judgments)

    def winner(votes: Counter) -> str | None:
        system, count = votes.most_common(1)[0]
        return system if count * 2 > judges else None

    return MajorityPick(best=winner(best_votes), worst=winner(worst_votes))


@dataclass(frozen=True)
class BwsResult:
    system_id: str
    best_count: int
    worst_count: int
    denominator: int

    @property
    def best_fraction(self) -> Fraction:
        return Fraction(self.best_count, self.denominator)

    @property
    def worst_fraction(self) -> Fraction:
        return Fraction(self.worst_count, self.denominator)

    @property
    def bws(self) -> Fraction:
        return self.best_fraction - self.worst_fraction

    def to_record(self, mode: str) -> dict:
        return {
            "system_id": self.system_id,
            "mode": mode,
            "best_count": self.best_count,
            "worst_count": self.worst_count,
            "denominator": self.denominator,
            "best_fraction": float(self.best_fraction),
            "worst_fraction": float(self.worst_fraction),
            "bws": float(self.bws),
        }


@dataclass
class BwsReport:
    mode: str
    results: dict[str, BwsResult] = field(default_factory=dict)
    items: int = 0
    judgments: int = 0
    no_majority_best: int = 0
    no_majority_worst: int = 0

    def as_records(self) -> list[dict]:
        return [self.results[s].to_record(self.mode) for s in sorted(self.results)]


def bws_scores(judgments: Sequence[JudgmentRecord], mode: str = "per_majority") -> BwsReport:
    """Aggregate a judgment log.

    per_vote: fractions over all individual judgments. per_majority:
    fractions over majority picks with ALL items in the denominator;
    items without a strict majority count toward no system.
    """
    if mode not in BWS_MODES:
        raise BwsError(f"mode must be one of {BWS_MODES}, got {mode!r}")
    if not judgments:
        raise BwsError("bws_scores got zero judgments")

    systems = sorted({s for j in judgments for s in j.display_order})
    items = group_by_item(judgments)
    report = BwsReport(mode=mode, items=len(items), judgments=len(judgments))

    best_counts = {s: 0 for s in systems}
    worst_counts = {s: 0 for s in systems}
    if mode == "per_vote":
        for judgment in judgments:
            best_counts[judgment.best] += 1
            worst_counts[judgment.worst] += 1
        denominator = len(judgments)
    else:
        for item_judgments in items.values():
            pick = majority_pick(item_judgments)
            if pick.best is not None:
                best_counts[pick.best] += 1
            else:
                report.no_majority_best += 1
            if pick.worst is not None:
                worst_counts[pick.worst] += 1
            else:
                report.no_majority_worst += 1
        denominator = len(items)

    for system in systems:
        report.results[system] = BwsResult(
            system_id=system,
            best_count=best_counts[system],
            worst_count=worst_counts[system],
            denominator=denominator,
        )
    return report


@dataclass
class VoteDistribution:
    judges: int
    # system -> vote count k -> number of items with exactly k votes
    best: dict[str, Counter] = field(default_factory=dict)
    worst: dict[str, Counter] = field(default_factory=dict)

    def as_records(self) -> list[dict]:
        records = []
        for kind, table in (("best", self.best), ("worst", self.worst)):
            for system in sorted(table):
                for k in range(self.judges + 1):
                    records.append(
                        {
                            "system_id": system,
                            "kind": kind,
                            "votes": k,
                            "items": table[system][k],
                        }
                    )
        return records


def vote_distribution(
    judgments: Sequence[JudgmentRecord], judges: int = 3
) -> VoteDistribution:
    """Per system, the histogram over items of how many judges picked it
    best (and worst) — the plot-ready agreement table."""
    items = group_by_item(judgments)
    systems = sorted({s for j in judgments for s in j.display_order})
    dist = VoteDistribution(judges=judges)
    for system in systems:
        dist.best[system] = Counter()
        dist.worst[system] = Counter()
    for item_judgments in items.values():
        best_votes = Counter(j.best for j in item_judgments)
        worst_votes = Counter(j.worst for j in item_judgments)
        for system in systems:
            dist.best[system][best_votes.get(system, 0)] += 1
            dist.worst[system][worst_votes.get(system, 0)] += 1
    return dist


@dataclass(frozen=True)
class EventTallyRow:
    event_id: str
    system_id: str
    best: int
    worst: int
    flagged_empty: bool = False

    def to_record(self) -> dict:
        return {
            "event_id": self.event_id,
            "system_id": self.system_id,
            "best": self.best,
            "worst": self.worst,
            "flagged_empty": self.flagged_empty,
        }


def majority_designations(judgments: Sequence[JudgmentRecord]) -> list[ItemDesignation]:
    """Majority picks reshaped for tallying alongside BUS designations."""
    designations = []
    for item_id, item_judgments in sorted(group_by_item(judgments).items()):
        pick = majority_pick(item_judgments)
        event_id, t = item_id.rsplit(":", 1)
        designations.append(
            ItemDesignation(
                event_id=event_id,
                t=int(t),
                best=frozenset([pick.best] if pick.best else []),
                worst=frozenset([pick.worst] if pick.worst else []),
            )
        )
    return designations


def per_event_tally(
    designations: Iterable[ItemDesignation],
    events: Sequence[str] | None = None,
    systems: Sequence[str] | None = None,
) -> list[EventTallyRow]:
    """Best/worst counts grouped by event and system, in the shape of the
    per-event comparison bar charts. Events with no designations get an
    explicit flagged zero row."""
    designations = list(designations)
    seen_events = sorted({d.event_id for d in designations})
    seen_systems = sorted(
        {s for d in designations for s in d.best | d.worst}
    )
    events = list(events) if events is not None else seen_events
    systems = list(systems) if systems is not None else seen_systems

    counts: dict[tuple[str, str], list[int]] = {
        (e, s): [0, 0] for e in events for s in systems
    }
    for d in designations:
        for system in d.best:
            if (d.event_id, system) in counts:
                counts[(d.event_id, system)][0] += 1
        for system in d.worst:
            if (d.event_id, system) in counts:
                counts[(d.event_id, system)][1] += 1

    covered = {d.event_id for d in designations}
    rows = []
    for event_id in events:
        for system in systems:
            best, worst = counts[(event_id, system)]
            rows.append(
                EventTallyRow(
                    event_id=event_id,
                    system_id=system,
                    best=best,
                    worst=worst,
                    flagged_empty=event_id not in covered,
                )
            )
    return rows
