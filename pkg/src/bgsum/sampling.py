"""Seed-deterministic sampling of evaluation items.

An evaluation item is one (event, timestep) pair from the test split for
which every compared system has produced a background. Sampling refuses
to run when coverage is insufficient and reports exactly what is
missing.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from .timeline import Corpus


class CoverageError(ValueError):
    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class EvalItem:
    event_id: str
    t: int

    @property
    def item_id(self) -> str:
        return f"{self.event_id}:{self.t}"


def covered_items(
    corpus: Corpus,
    outputs_by_system: Mapping[str, Mapping[str, Mapping[int, dict]]],
    split: str = "test",
) -> tuple[list[EvalItem], dict]:
    """Items of the split covered by every system, plus a coverage report.

    outputs_by_system maps system id -> event id -> step index -> record.
    """
    systems = sorted(outputs_by_system)
    items: list[EvalItem] = []
    report: dict = {"split": split, "systems": systems, "missing": {}}
    for timeline in corpus.for_split(split):
        event_id = timeline.event.event_id
        for step in timeline.steps:
            if step.index == 1:
                continue
            missing = [
                system
                for system in systems
                if step.index not in outputs_by_system[system].get(event_id, {})
            ]
            if missing:
                report["missing"].setdefault(event_id, {})[step.index] = missing
            else:
                items.append(EvalItem(event_id=event_id, t=step.index))
    report["covered"] = len(items)
    return items, report


def sample_eval_items(
    items: Sequence[EvalItem],
    n: int,
    seed: int,
    stratify: bool = False,
) -> list[EvalItem]:
    """Uniform sample without replacement, deterministic for a seed.

    With stratify on, counts are balanced per event (differ by at most
    one), remainder going to seed-shuffled events first.
    """
    pool = sorted(items, key=lambda i: (i.event_id, i.t))
    if n > len(pool):
        raise CoverageError(
            f"asked for {n} items but only {len(pool)} are covered",
            {"covered": len(pool), "requested": n},
        )
    rng = random.Random(seed)
    if not stratify:
        return sorted(rng.sample(pool, n), key=lambda i: (i.event_id, i.t))

    by_event: dict[str, list[EvalItem]] = {}
    for item in pool:
        by_event.setdefault(item.event_id, []).append(item)
    events = sorted(by_event)
    base, remainder = divmod(n, len(events))
    extra_order = list(events)
    rng.shuffle(extra_order)
    quotas = {e: base for e in events}
    for event_id in extra_order[:remainder]:
        quotas[event_id] += 1
    short = {
        e: (quotas[e], len(by_event[e])) for e in events if quotas[e] > len(by_event[e])
    }
    if short:
        raise CoverageError(
            "stratified quota exceeds coverage for some events",
            {e: {"quota": q, "covered": c} for e, (q, c) in short.items()},
        )
    chosen: list[EvalItem] = []
    for event_id in events:
        chosen.extend(rng.sample(by_event[event_id], quotas[event_id]))
    return sorted(chosen, key=lambda i: (i.event_id, i.t))
