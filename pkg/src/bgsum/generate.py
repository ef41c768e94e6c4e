"""Background-generation orchestration.

Renders the generic and query-focused prompt templates, extracts
entity-keyword queries, iterates timesteps of a timeline, and records a
SystemRun per (event, system, mode). Prompts carry provenance segments
so the no-future-content guarantee is checkable after the fact: the
past-updates section at step t may only contain text from steps before t.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from . import jsonl
from .gateway import ChatClient, ChatExchange, GatewayError, ModelProfile, TokenBudget, truncate_oldest
from .timeline import Timeline

MODES = ("generic", "query_focused")
QUERY_FORMS = ("full_update", "named_entities")

GENERIC_PREFIX = "summarize: "
GENERIC_SUFFIX_INSTRUCTION = "Provide a short summary of the above article."
QUERY_FOCUSED_INSTRUCTION = "Generate a short query-focused summary of the background."


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class GenerationSpec:
    mode: str
    profile_id: str
    event_id: str
    annotator_id: int = 1
    query_form: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise GenerationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "query_focused":
            if self.query_form not in QUERY_FORMS:
                raise GenerationError(
                    f"query_focused mode needs query_form in {QUERY_FORMS}"
                )
        elif self.query_form is not None:
            raise GenerationError("query_form is only valid in query_focused mode")

    @property
    def system_id(self) -> str:
        return self.profile_id


# --- entity-keyword queries ---------------------------------------------

# lowercase words allowed inside a capitalized run ("Gulf of Mexico")
_CONNECTORS = {"of", "the", "al", "el", "de", "la", "le", "da", "di", "van", "von", "bin", "ibn"}

# single capitalized sentence openers that are not names
_SENTENCE_OPENERS = {
    "the", "a", "an", "in", "on", "at", "it", "he", "she", "they", "we", "this",
    "that", "these", "those", "but", "and", "or", "after", "before", "when",
    "while", "however", "meanwhile", "also", "now", "later", "earlier", "today",
    "for", "with", "as", "by", "his", "her", "their", "its", "there", "some",
    "many", "more", "one", "two", "three", "no", "not", "nothing",
}

# abbreviation-style tokens whose trailing period does not end the run
_TITLE_ABBREVS = {
    "dr", "mr", "mrs", "ms", "st", "gen", "col", "sen", "rep", "gov", "prof",
    "lt", "sgt", "capt", "maj", "adm", "pres", "sec", "u.s", "u.n",
}

_LEAD_PUNCT = "\"'“”‘’([{"
_TRAIL_PUNCT = "\"'“”‘’)]}.,;:!?"


def _first_alpha(token: str) -> str:
    for ch in token:
        if ch.isalpha():
            return ch
    return ""


def _is_capitalized(token: str) -> bool:
    first = _first_alpha(token)
    if first and first.isupper():
        return True
    # connector-prefixed surnames like "al-Keeb"
    return bool(re.match(r"^[a-z]{1,3}-[A-Z]", token.lstrip(_LEAD_PUNCT)))


def _run_continues_past(token: str) -> bool:
    """Whether a run may continue after a period-terminated token."""
    if not token.endswith("."):
        return True
    bare = token.rstrip(".").lstrip(_LEAD_PUNCT).lower()
    return bare in _TITLE_ABBREVS or len(bare) <= 2


@dataclass(frozen=True)
class EntityQuery:
    entities: tuple[str, ...]
    rendered: str

    @property
    def empty(self) -> bool:
        return not self.entities


def extract_entities(
    text: str,
    query_limit: int | None = None,
    recognizer: Callable[[str], Sequence[str]] | None = None,
) -> EntityQuery:
    """Entity keywords from an update, by rule or external recognizer.

    Default rule: maximal runs of capitalized tokens (connectors like
    "of" allowed inside), in order of first appearance, deduplicated
    case-insensitively. A lone capitalized sentence opener ("The", "In")
    is not an entity. Zero entities yields an empty query; the caller
    falls back to generic rendering for that timestep.
    """
    if not text.strip():
        raise GenerationError("extract_entities needs non-empty text")

    if recognizer is not None:
        surfaces = list(recognizer(text))
    else:
        surfaces = _rule_entities(text)

    seen = set()
    ordered = []
    for surface in surfaces:
        key = surface.lower()
        if key and key not in seen:
            seen.add(key)
            ordered.append(surface)

    rendered = ", ".join(ordered)
    if query_limit is not None:
        rendered = " ".join(rendered.split()[:query_limit])
    return EntityQuery(entities=tuple(ordered), rendered=rendered)


def _rule_entities(text: str) -> list[str]:
    tokens = text.split()
    sentence_start = [True] + [
        tokens[i - 1].rstrip(_LEAD_PUNCT).endswith((".", "!", "?"))
        for i in range(1, len(tokens))
    ]

    runs: list[tuple[int, list[str]]] = []
    i = 0
    while i < len(tokens):
        if not _is_capitalized(tokens[i]):
            i += 1
            continue
        run = [tokens[i]]
        start = i
        j = i + 1
        while j < len(tokens) and _run_continues_past(tokens[j - 1]):
            if _is_capitalized(tokens[j]):
                run.append(tokens[j])
                j += 1
            elif (
                tokens[j].lower() in _CONNECTORS
                and j + 1 < len(tokens)
                and _is_capitalized(tokens[j + 1])
            ):
                run.append(tokens[j])
                run.append(tokens[j + 1])
                j += 2
            else:
                break
        runs.append((start, run))
        i = j

    surfaces = []
    for start, run in runs:
        if (
            len(run) == 1
            and sentence_start[start]
            and run[0].rstrip(_TRAIL_PUNCT).lower() in _SENTENCE_OPENERS
        ):
            continue
        surface = " ".join(run)
        surface = surface.lstrip(_LEAD_PUNCT).rstrip(_TRAIL_PUNCT)
        # keep abbreviation periods ("Dr." mid-run loses nothing)
        if surface:
            surfaces.append(surface)
    return surfaces


# --- prompt rendering ---------------------------------------------------

@dataclass(frozen=True)
class PastUpdate:
    index: int
    text: str
    date: str | None = None


@dataclass(frozen=True)
class PromptSegment:
    kind: str  # "instruction" | "query" | "update" | "sep"
    text: str
    source_index: int | None = None


@dataclass(frozen=True)
class PromptRender:
    text: str
    segments: tuple[PromptSegment, ...]
    token_estimate: int
    dropped_updates: int
    trimmed_first: bool
    fallback_generic: bool = False

    def past_update_indices(self) -> list[int]:
        return [s.source_index for s in self.segments if s.kind == "update"]


def _truncate_query(query: str, profile: ModelProfile) -> str:
    words = query.split()
    if len(words) <= profile.query_limit:
        return query.strip()
    return " ".join(words[: profile.query_limit])


def render_prompt(
    spec: GenerationSpec,
    profile: ModelProfile,
    past_updates: Sequence[PastUpdate],
    query: str | None = None,
    include_dates: bool = False,
    force_generic: bool = False,
) -> PromptRender:
    """Instantiate the prompt for one timestep, truncating the oldest
    updates so the whole prompt fits the profile's enforced budget."""
    if not past_updates:
        raise GenerationError("render_prompt needs at least one past update")
    mode = "generic" if force_generic else spec.mode
    if mode == "query_focused" and query is None:
        raise GenerationError("query_focused rendering needs a query")

    query_text = _truncate_query(query, profile) if mode == "query_focused" else None

    if mode == "generic":
        if profile.request_style == "prefix":
            head = [PromptSegment("instruction", GENERIC_PREFIX)]
            tail: list[PromptSegment] = []
        else:
            head = []
            tail = [
                PromptSegment("sep", "\n\n"),
                PromptSegment("instruction", GENERIC_SUFFIX_INSTRUCTION),
            ]
    else:
        if profile.request_style == "prefix":
            head = [
                PromptSegment(
                    "instruction", QUERY_FOCUSED_INSTRUCTION + " Query: "
                ),
                PromptSegment("query", query_text),
                PromptSegment("instruction", ", Background: "),
            ]
            tail = []
        else:
            head = [
                PromptSegment("instruction", "Query: "),
                PromptSegment("query", query_text),
                PromptSegment("instruction", ", Background: "),
            ]
            tail = [
                PromptSegment("sep", "\n\n"),
                PromptSegment("instruction", QUERY_FOCUSED_INSTRUCTION),
            ]

    skeleton = "".join(s.text for s in head) + "".join(s.text for s in tail)
    budget = profile.budget()
    reserved = budget.estimate(skeleton)
    if reserved >= budget.limit:
        raise GenerationError(
            f"instruction and query alone ({reserved} tokens) exceed the "
            f"enforced budget of {budget.limit}"
        )

    texts = [
        f"{u.date}. {u.text}" if include_dates and u.date else u.text
        for u in past_updates
    ]
    kept = truncate_oldest(texts, budget, reserved)
    offset = len(texts) - len(kept)
    trimmed_first = kept[0] != texts[offset]

    update_segments: list[PromptSegment] = []
    for pos, text in enumerate(kept):
        if pos:
            update_segments.append(PromptSegment("sep", "\n"))
        update_segments.append(
            PromptSegment("update", text, source_index=past_updates[offset + pos].index)
        )

    segments = tuple(head + update_segments + tail)
    rendered = "".join(s.text for s in segments)
    estimate = budget.estimate(rendered)
    if estimate > budget.limit:
        raise GenerationError(
            f"rendered prompt estimate {estimate} over budget {budget.limit}"
        )
    return PromptRender(
        text=rendered,
        segments=segments,
        token_estimate=estimate,
        dropped_updates=offset,
        trimmed_first=trimmed_first,
        fallback_generic=force_generic,
    )


def assert_causal(render: PromptRender, t: int) -> None:
    """Every past-updates segment must come from a step before t."""
    bad = [i for i in render.past_update_indices() if i is None or i >= t]
    if bad:
        raise GenerationError(f"prompt for step {t} leaked updates from steps {bad}")


# --- generation ---------------------------------------------------------

@dataclass(frozen=True)
class GenerationResult:
    t: int
    date: str
    background: str
    exchange: ChatExchange
    render: PromptRender


def generate_background(
    timeline: Timeline,
    t: int,
    spec: GenerationSpec,
    client: ChatClient,
    profile: ModelProfile | None = None,
    include_dates: bool = False,
) -> GenerationResult:
    """Generate the background for step t from steps 1..t-1 of the
    configured annotator's update stream. In query-focused mode the
    query derives from step t's update, whose content never enters the
    past-updates section."""
    if not 2 <= t <= timeline.length:
        raise GenerationError(f"t must be in 2..{timeline.length}, got {t}")
    profile = profile or client.profile(spec.profile_id)

    past = [
        PastUpdate(
            index=step.index,
            text=step.update_for(spec.annotator_id).text,
            date=step.date.isoformat(),
        )
        for step in timeline.steps[: t - 1]
    ]

    query = None
    force_generic = False
    if spec.mode == "query_focused":
        current = timeline.step(t).update_for(spec.annotator_id).text
        if spec.query_form == "full_update":
            query = current
        else:
            entity_query = extract_entities(current, query_limit=profile.query_limit)
            if entity_query.empty:
                force_generic = True
            else:
                query = entity_query.rendered

    render = render_prompt(
        spec,
        profile,
        past,
        query=query,
        include_dates=include_dates,
        force_generic=force_generic,
    )
    assert_causal(render, t)

    params = {"task": "background", "event_id": spec.event_id, "t": t}
    try:
        exchange = client.complete(profile, render.text, params)
    except GatewayError as exc:
        raise GenerationError(f"step {t} of {spec.event_id!r}: {exc}") from exc
    return GenerationResult(
        t=t,
        date=timeline.step(t).date.isoformat(),
        background=exchange.response,
        exchange=exchange,
        render=render,
    )


# --- system runs --------------------------------------------------------

@dataclass
class SystemRun:
    spec: GenerationSpec
    outputs: dict[int, dict] = field(default_factory=dict)
    errors: list[tuple[int, str]] = field(default_factory=list)
    skipped: int = 0

    @property
    def complete(self) -> bool:
        return not self.errors


def output_record(spec: GenerationSpec, result: GenerationResult) -> dict:
    return {
        "event_id": spec.event_id,
        "system_id": spec.system_id,
        "mode": spec.mode,
        "query_form": spec.query_form,
        "annotator_id": spec.annotator_id,
        "t": result.t,
        "date": result.date,
        "background": result.background,
        "exchange_ref": result.exchange.digest,
    }


def run_key(record: Mapping) -> tuple:
    return (
        record["event_id"],
        record["system_id"],
        record["mode"],
        record.get("query_form"),
        record.get("annotator_id", 1),
    )


def load_run_outputs(path) -> dict[tuple, dict[int, dict]]:
    """Existing outputs grouped by run identity, keyed by step index."""
    runs: dict[tuple, dict[int, dict]] = {}
    path = Path(path)
    if not path.exists():
        return runs
    for _, record in jsonl.read_records(path):
        runs.setdefault(run_key(record), {})[int(record["t"])] = record
    return runs


def load_runs(paths: Iterable) -> dict[str, dict[str, dict[int, dict]]]:
    """Outputs of many run files as system id -> event id -> t -> record.

    A (system, event, t) collision with differing text means two runs of
    the same system were mixed into one comparison set; that is refused
    rather than silently overwritten.
    """
    by_system: dict[str, dict[str, dict[int, dict]]] = {}
    for path in paths:
        for _, record in jsonl.read_records(path):
            system = by_system.setdefault(record["system_id"], {})
            steps = system.setdefault(record["event_id"], {})
            t = int(record["t"])
            if t in steps and steps[t]["background"] != record["background"]:
                raise GenerationError(
                    f"conflicting outputs for {record['system_id']}/"
                    f"{record['event_id']}:{t} across run files"
                )
            steps[t] = record
    return by_system


def run_event(
    timeline: Timeline,
    spec: GenerationSpec,
    client: ChatClient,
    out_path=None,
    force: bool = False,
    include_dates: bool = False,
) -> SystemRun:
    """Generate backgrounds for every step after the first, resumably.

    Existing outputs for this run are skipped unless force is set; each
    new output is appended to out_path as soon as it exists. Failures
    are collected per step so a partial run is still usable."""
    run = SystemRun(spec=spec)
    existing: dict[int, dict] = {}
    if out_path is not None:
        out_path = Path(out_path)
        if force and out_path.exists():
            out_path.unlink()
        elif out_path.exists():
            existing = load_run_outputs(out_path).get(
                (spec.event_id, spec.system_id, spec.mode, spec.query_form, spec.annotator_id),
                {},
            )

    for t in range(2, timeline.length + 1):
        if t in existing:
            run.outputs[t] = existing[t]
            run.skipped += 1
            continue
        try:
            result = generate_background(
                timeline, t, spec, client, include_dates=include_dates
            )
        except GenerationError as exc:
            run.errors.append((t, str(exc)))
            continue
        record = output_record(spec, result)
        run.outputs[t] = record
        if out_path is not None:
            jsonl.append_record(out_path, record)
    return run
