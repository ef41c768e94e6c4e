"""Canonical data model for events, timelines, updates, and backgrounds.

A timeline is a strictly date-ordered sequence of timesteps for one major
news event. Every timestep carries the per-annotator rewritten updates
and (after the first step) per-annotator background summaries, plus the
raw pre-merge source texts. All types are immutable after construction;
operations are pure functions.

On-disk format: one timestep per JSONL line, UTF-8, LF endings, with a
sidecar manifest listing the event records of a corpus.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import jsonl

SPLITS = ("train", "dev", "test")

# The 14 events of the released corpus and their split assignment.
KNOWN_EVENTS = {
    "swine-flu": "train",
    "financial-crisis": "train",
    "iraq-war": "train",
    "haitian-earthquake": "dev",
    "michael-jackson-death": "dev",
    "bp-oil-spill": "dev",
    "nsa-leak": "test",
    "gaza-conflict": "test",
    "mh370-disappearance": "test",
    "yemen-crisis": "test",
    "russian-ukraine-conflict": "test",
    "libyan-crisis": "test",
    "egyptian-crisis": "test",
    "syrian-crisis": "test",
}

# Common alternate slugs normalized to the canonical id.
EVENT_ALIASES = {
    "mj-death": "michael-jackson-death",
    "michael-jackson": "michael-jackson-death",
    "haiti-earthquake": "haitian-earthquake",
    "libyan-war": "libyan-crisis",
    "libya-crisis": "libyan-crisis",
    "egypt-crisis": "egyptian-crisis",
    "syria-crisis": "syrian-crisis",
    "yemen-war": "yemen-crisis",
    "mh370-flight-disappearance": "mh370-disappearance",
    "mh370": "mh370-disappearance",
    "russia-ukraine-conflict": "russian-ukraine-conflict",
    "ukraine-conflict": "russian-ukraine-conflict",
    "h1n1": "swine-flu",
}


class TimelineError(ValueError):
    pass


class SplitError(TimelineError):
    """Raised when an event has no split assignment (never defaulted)."""


def _parse_date(value, *, context: str = "") -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    text = str(value).strip()
    # Datetimes are floored to the day.
    text = text.split("T")[0].split(" ")[0]
    try:
        return dt.date.fromisoformat(text)
    except ValueError as exc:
        where = f" in {context}" if context else ""
        raise TimelineError(f"unparseable date {value!r}{where}") from exc


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


def word_count(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class DateRange:
    start: dt.date
    end: dt.date

    def __post_init__(self):
        if self.start > self.end:
            raise TimelineError(f"period start {self.start} after end {self.end}")


@dataclass(frozen=True)
class SourceCount:
    dataset: str
    timelines: int


@dataclass(frozen=True)
class EventRecord:
    event_id: str
    title: str
    split: str
    period: DateRange
    source_datasets: tuple[SourceCount, ...] = ()

    def __post_init__(self):
        if self.split not in SPLITS:
            raise TimelineError(f"split must be one of {SPLITS}, got {self.split!r}")

    def to_record(self) -> dict:
        return {
            "event_id": self.event_id,
            "title": self.title,
            "split": self.split,
            "period": {"start": self.period.start.isoformat(), "end": self.period.end.isoformat()},
            "source_datasets": [
                {"dataset": s.dataset, "timelines": s.timelines} for s in self.source_datasets
            ],
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "EventRecord":
        period = record["period"]
        return cls(
            event_id=record["event_id"],
            title=record.get("title", record["event_id"]),
            split=record["split"],
            period=DateRange(_parse_date(period["start"]), _parse_date(period["end"])),
            source_datasets=tuple(
                SourceCount(s["dataset"], int(s["timelines"]))
                for s in record.get("source_datasets", [])
            ),
        )


@dataclass(frozen=True)
class AnnotatedText:
    """One annotator's text for a timestep (an update or a background)."""

    annotator_id: int
    text: str

    @property
    def word_count(self) -> int:
        return word_count(self.text)


@dataclass(frozen=True)
class RawUpdate:
    source_id: str
    text: str


@dataclass(frozen=True)
class TimeStep:
    date: dt.date
    index: int
    updates: tuple[AnnotatedText, ...]
    backgrounds: tuple[AnnotatedText, ...] = ()
    raw_source_updates: tuple[RawUpdate, ...] = ()

    def __post_init__(self):
        if self.index < 1:
            raise TimelineError(f"timestep index must be >= 1, got {self.index}")

    def update_for(self, annotator_id: int) -> AnnotatedText:
        for update in self.updates:
            if update.annotator_id == annotator_id:
                return update
        raise TimelineError(
            f"step {self.index} has no update from annotator {annotator_id}"
        )


@dataclass(frozen=True)
class Timeline:
    event: EventRecord
    steps: tuple[TimeStep, ...]

    @property
    def length(self) -> int:
        return len(self.steps)

    def step(self, t: int) -> TimeStep:
        if not 1 <= t <= len(self.steps):
            raise TimelineError(f"step {t} out of range 1..{len(self.steps)}")
        return self.steps[t - 1]


@dataclass(frozen=True)
class SourceEntry:
    date: dt.date
    text: str


@dataclass(frozen=True)
class SourceTimeline:
    """One publisher's timeline before merging; entries sorted at load."""

    source_id: str
    entries: tuple[SourceEntry, ...]

    @classmethod
    def from_pairs(cls, source_id: str, pairs: Iterable[tuple] ) -> "SourceTimeline":
        entries = []
        for raw_date, text in pairs:
            if not str(text).strip():
                raise TimelineError(f"source {source_id!r}: entry with empty text")
            entries.append(SourceEntry(_parse_date(raw_date, context=f"source {source_id!r}"), str(text)))
        entries.sort(key=lambda e: e.date)
        return cls(source_id=source_id, entries=tuple(entries))

    @classmethod
    def load(cls, path) -> "SourceTimeline":
        """Read a JSONL file of {"date", "text"} lines; the file stem is
        the source id unless lines carry their own."""
        path = Path(path)
        entries = []
        source_id = path.stem
        for line_no, record in jsonl.read_records(path):
            if "date" not in record or "text" not in record:
                raise jsonl.RecordError(path, line_no, "expected keys 'date' and 'text'")
            if not str(record["text"]).strip():
                raise jsonl.RecordError(path, line_no, "entry with empty text")
            source_id = record.get("source_id", source_id)
            try:
                date = _parse_date(record["date"])
            except TimelineError as exc:
                raise jsonl.RecordError(path, line_no, str(exc)) from exc
            entries.append(SourceEntry(date, str(record["text"])))
        entries.sort(key=lambda e: e.date)
        return cls(source_id=source_id, entries=tuple(entries))


def canonical_event_id(event_id: str) -> str:
    slug = event_id.strip().lower()
    return EVENT_ALIASES.get(slug, slug)


def assign_split(event_id: str, overrides: Mapping[str, str] | None = None) -> str:
    """Split assignment for the 14 known events; a user table overrides
    and extends it. Unknown events raise — there is no silent default."""
    slug = canonical_event_id(event_id)
    if overrides:
        normalized = {canonical_event_id(k): v for k, v in overrides.items()}
        if slug in normalized:
            split = normalized[slug]
            if split not in SPLITS:
                raise SplitError(f"override for {event_id!r} has invalid split {split!r}")
            return split
    if slug in KNOWN_EVENTS:
        return KNOWN_EVENTS[slug]
    raise SplitError(
        f"event {event_id!r} has no split assignment; pass an override table"
    )


def merge_timelines(
    sources: Sequence[SourceTimeline], event: EventRecord | None = None
) -> Timeline:
    """Merge source timelines into one per-event timeline keyed by date.

    One timestep per distinct date across all sources, ascending. All raw
    texts are retained in source order; exact duplicates (whitespace
    normalized, case sensitive) are collapsed to the first occurrence.
    The updates field is seeded with the joined raw texts pending
    annotator rewrite (annotator id 0 marks unrewritten text).
    """
    if not sources:
        raise TimelineError("merge needs at least one source timeline")
    total_entries = sum(len(s.entries) for s in sources)
    if total_entries == 0:
        raise TimelineError("merge got sources with zero entries")

    by_date: dict[dt.date, list[RawUpdate]] = {}
    seen: dict[dt.date, set[str]] = {}
    for source in sources:
        for entry in source.entries:
            key = normalize_ws(entry.text)
            bucket = seen.setdefault(entry.date, set())
            if key in bucket:
                continue
            bucket.add(key)
            by_date.setdefault(entry.date, []).append(
                RawUpdate(source_id=source.source_id, text=entry.text)
            )

    steps = []
    for index, date in enumerate(sorted(by_date), start=1):
        raw = tuple(by_date[date])
        seed_text = "\n".join(r.text for r in raw)
        steps.append(
            TimeStep(
                date=date,
                index=index,
                updates=(AnnotatedText(annotator_id=0, text=seed_text),),
                backgrounds=(),
                raw_source_updates=raw,
            )
        )

    if event is None:
        event = EventRecord(
            event_id="merged",
            title="Merged timeline",
            split="test",
            period=DateRange(steps[0].date, steps[-1].date),
            source_datasets=tuple(
                SourceCount(dataset=s.source_id, timelines=1) for s in sources
            ),
        )
    return Timeline(event=event, steps=tuple(steps))


@dataclass(frozen=True)
class CorpusStats:
    num_steps: int
    update_word_mean: float
    background_word_mean: float
    has_backgrounds: bool

    def rounded(self) -> dict:
        return {
            "timesteps": self.num_steps,
            "update_words": round(self.update_word_mean),
            "background_words": round(self.background_word_mean),
        }


def corpus_stats(timeline: Timeline) -> CorpusStats:
    """Timeline length and mean word counts pooled over all annotator
    texts (backgrounds exclude the first step by construction)."""
    update_counts = [u.word_count for step in timeline.steps for u in step.updates]
    background_counts = [
        b.word_count for step in timeline.steps if step.index > 1 for b in step.backgrounds
    ]
    update_mean = sum(update_counts) / len(update_counts) if update_counts else 0.0
    if background_counts:
        background_mean = sum(background_counts) / len(background_counts)
        has_backgrounds = True
    else:
        background_mean = 0.0
        has_backgrounds = False
    return CorpusStats(
        num_steps=len(timeline.steps),
        update_word_mean=update_mean,
        background_word_mean=background_mean,
        has_backgrounds=has_backgrounds,
    )


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    context: tuple[tuple[str, object], ...] = ()

    @classmethod
    def make(cls, code: str, message: str, **context) -> "Diagnostic":
        return cls(code=code, message=message, context=tuple(sorted(context.items())))


def validate_timeline(timeline: Timeline) -> list[Diagnostic]:
    """Report every invariant violation; an empty list means valid."""
    diagnostics: list[Diagnostic] = []
    steps = timeline.steps

    for i, step in enumerate(steps):
        expected = i + 1
        if step.index != expected:
            diagnostics.append(
                Diagnostic.make(
                    "index-gap",
                    f"step at position {i + 1} has index {step.index}, expected {expected}",
                    position=i + 1,
                    index=step.index,
                )
            )

    for prev, cur in zip(steps, steps[1:]):
        if cur.date <= prev.date:
            diagnostics.append(
                Diagnostic.make(
                    "date-order",
                    f"steps {prev.index} and {cur.index} are not strictly increasing "
                    f"by date ({prev.date} then {cur.date})",
                    first=prev.index,
                    second=cur.index,
                )
            )

    for step in steps:
        if step.index > 1 and not step.backgrounds:
            diagnostics.append(
                Diagnostic.make(
                    "missing-backgrounds",
                    f"step {step.index} has no background summaries",
                    index=step.index,
                )
            )
        if step.index == 1 and step.backgrounds:
            diagnostics.append(
                Diagnostic.make(
                    "backgrounds-at-first-step",
                    "the first step must not carry backgrounds",
                    index=step.index,
                )
            )
        if not step.updates:
            diagnostics.append(
                Diagnostic.make(
                    "missing-updates", f"step {step.index} has no updates", index=step.index
                )
            )
        for update in step.updates:
            if not normalize_ws(update.text):
                diagnostics.append(
                    Diagnostic.make(
                        "empty-update",
                        f"step {step.index} annotator {update.annotator_id} update is empty",
                        index=step.index,
                        annotator_id=update.annotator_id,
                    )
                )

    update_sets = {tuple(sorted(u.annotator_id for u in step.updates)) for step in steps}
    if len(update_sets) > 1:
        diagnostics.append(
            Diagnostic.make(
                "annotator-set",
                "update annotator sets differ across timesteps: "
                + ", ".join(str(list(s)) for s in sorted(update_sets)),
            )
        )
    background_sets = {
        tuple(sorted(b.annotator_id for b in step.backgrounds))
        for step in steps
        if step.index > 1 and step.backgrounds
    }
    if len(background_sets) > 1:
        diagnostics.append(
            Diagnostic.make(
                "annotator-set",
                "background annotator sets differ across timesteps: "
                + ", ".join(str(list(s)) for s in sorted(background_sets)),
            )
        )
    return diagnostics


# ---------------------------------------------------------------------------
# Persistence


def step_to_record(event_id: str, step: TimeStep) -> dict:
    return {
        "event_id": event_id,
        "t": step.index,
        "date": step.date.isoformat(),
        "updates": [
            {"annotator_id": u.annotator_id, "text": u.text} for u in step.updates
        ],
        "backgrounds": [
            {"annotator_id": b.annotator_id, "text": b.text} for b in step.backgrounds
        ],
        "raw_source_updates": [
            {"source_id": r.source_id, "text": r.text} for r in step.raw_source_updates
        ],
    }


def step_from_record(record: Mapping) -> TimeStep:
    return TimeStep(
        date=_parse_date(record["date"]),
        index=int(record["t"]),
        updates=tuple(
            AnnotatedText(int(u["annotator_id"]), u["text"]) for u in record["updates"]
        ),
        backgrounds=tuple(
            AnnotatedText(int(b["annotator_id"]), b["text"])
            for b in record.get("backgrounds", [])
        ),
        raw_source_updates=tuple(
            RawUpdate(r.get("source_id", ""), r["text"])
            for r in record.get("raw_source_updates", [])
        ),
    )


def save_timeline(timeline: Timeline, path) -> None:
    jsonl.write_records(
        path, (step_to_record(timeline.event.event_id, step) for step in timeline.steps)
    )


def load_steps(path) -> dict[str, list[TimeStep]]:
    """Group timestep records by event id, ordered by index."""
    by_event: dict[str, list[TimeStep]] = {}
    for line_no, record in jsonl.read_records(path):
        try:
            step = step_from_record(record)
        except (KeyError, TimelineError, TypeError) as exc:
            raise jsonl.RecordError(path, line_no, f"bad timestep record: {exc}") from exc
        by_event.setdefault(record["event_id"], []).append(step)
    for steps in by_event.values():
        steps.sort(key=lambda s: s.index)
    return by_event


@dataclass
class Corpus:
    events: dict[str, EventRecord] = field(default_factory=dict)
    timelines: dict[str, Timeline] = field(default_factory=dict)

    def for_split(self, split: str) -> list[Timeline]:
        return [
            tl for tl in self.timelines.values() if tl.event.split == split
        ]

    def ordered(self) -> list[Timeline]:
        order = {split: i for i, split in enumerate(SPLITS)}
        return sorted(
            self.timelines.values(),
            key=lambda tl: (order[tl.event.split], tl.event.event_id),
        )


MANIFEST_NAME = "manifest.json"
TIMELINES_NAME = "timelines.jsonl"


def save_corpus(corpus: Corpus, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "events": [corpus.events[eid].to_record() for eid in sorted(corpus.events)]
    }
    with open(directory / MANIFEST_NAME, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, ensure_ascii=False, indent=2)
        fh.write("\n")
    records = []
    for eid in sorted(corpus.timelines):
        timeline = corpus.timelines[eid]
        records.extend(step_to_record(eid, step) for step in timeline.steps)
    jsonl.write_records(directory / TIMELINES_NAME, records)


def load_corpus(directory) -> Corpus:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise TimelineError(f"no {MANIFEST_NAME} in {directory}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    corpus = Corpus()
    for record in manifest.get("events", []):
        event = EventRecord.from_record(record)
        corpus.events[event.event_id] = event
    steps_by_event = load_steps(directory / TIMELINES_NAME)
    for event_id, steps in steps_by_event.items():
        if event_id not in corpus.events:
            raise TimelineError(
                f"timeline records for {event_id!r} but no manifest entry"
            )
        corpus.timelines[event_id] = Timeline(
            event=corpus.events[event_id], steps=tuple(steps)
        )
    return corpus
