"""Background Utility Score: the percentage of questions about an update
that a candidate background answers.

Five questions are generated per update, answers are extracted from each
system's background, and an ordered, versioned pattern list decides
answerability. Roll-ups sum raw counts (never average percentages), so
the corpus score is exactly the count-sum of the event scores.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .bws import ItemDesignation
from .gateway import ChatClient, ModelProfile

QUESTION_COUNT = 5

QUESTION_TEMPLATE = (
    "Update: {update}\n"
    "Imagine you read the above update about a news story. You have no prior "
    "information about the story. Generate five background questions you might "
    "have about the story."
)

ANSWER_TEMPLATE = (
    "Background: {background}\n"
    "Questions: {questions}\n"
    "For each question, list answers from the background text when available. "
    'Say "unanswerable" if the question is not answered in the background text.'
)

REASK_NOTE = "Respond with exactly five numbered questions, one per line."


class BusError(ValueError):
    pass


class BusParseError(BusError):
    def __init__(self, message: str, raw: str):
        super().__init__(f"{message}; raw response attached")
        self.raw = raw


# --- answerability rules -------------------------------------------------

@dataclass(frozen=True)
class AnswerPattern:
    id: str
    kind: str  # "exact" | "prefix" | "substring"
    pattern: str


@dataclass(frozen=True)
class AnswerRules:
    version: str
    patterns: tuple[AnswerPattern, ...]
    sha256: str

    @property
    def ids(self) -> list[str]:
        return [p.id for p in self.patterns]


def load_answer_rules(path=None) -> AnswerRules:
    """Load the ordered rule list; scores cite the file hash."""
    if path is None:
        raw = (
            resources.files("bgsum").joinpath("data/answer_patterns.json").read_bytes()
        )
    else:
        raw = Path(path).read_bytes()
    data = json.loads(raw.decode("utf-8"))
    patterns = tuple(
        AnswerPattern(id=p["id"], kind=p["kind"], pattern=p["pattern"])
        for p in data["patterns"]
    )
    for p in patterns:
        if p.kind not in ("exact", "prefix", "substring"):
            raise BusError(f"pattern {p.id!r} has unknown kind {p.kind!r}")
    return AnswerRules(
        version=str(data.get("version", "?")),
        patterns=patterns,
        sha256=hashlib.sha256(raw).hexdigest(),
    )


def _normalize_answer(text: str) -> str:
    text = " ".join(text.split()).strip()
    return text.strip("\"'“”‘’()[]").lower()


def classify_answerable(
    answer_text: str, rules: AnswerRules | None = None
) -> tuple[bool, str]:
    """False when any pattern in the ordered list matches the normalized
    answer; the fired pattern id is returned ("none" when answerable)."""
    rules = rules or load_answer_rules()
    normalized = _normalize_answer(answer_text)
    for pattern in rules.patterns:
        if pattern.kind == "exact":
            hit = normalized == pattern.pattern
        elif pattern.kind == "prefix":
            hit = normalized.startswith(pattern.pattern)
        else:
            hit = pattern.pattern in normalized
        if hit:
            return False, pattern.id
    return True, "none"


# --- question generation --------------------------------------------------

@dataclass(frozen=True)
class BusQuestionSet:
    event_id: str
    t: int
    source: str  # profile id or "human"
    questions: tuple[str, ...]

    def __post_init__(self):
        if len(self.questions) != QUESTION_COUNT or not all(
            q.strip() for q in self.questions
        ):
            raise BusError(
                f"a question set holds exactly {QUESTION_COUNT} non-empty questions"
            )

    def to_record(self) -> dict:
        return {
            "event_id": self.event_id,
            "t": self.t,
            "source": self.source,
            "questions": list(self.questions),
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "BusQuestionSet":
        return cls(
            event_id=record["event_id"],
            t=int(record["t"]),
            source=record["source"],
            questions=tuple(record["questions"]),
        )


_ITEM_PREFIX = re.compile(r"^\s*(?:[Qq]?(\d+)[.):\-]|\-|\*)\s*(.*)$")


def parse_numbered_list(text: str, expected: int = QUESTION_COUNT) -> list[str]:
    """Parse a numbered or line-separated list of exactly `expected` items."""
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    matches = [_ITEM_PREFIX.match(line) for line in lines]
    if any(m and m.group(2) for m in matches):
        # numbered/bulleted: each marker starts an item, bare lines continue it
        items: list[str] = []
        for line, match in zip(lines, matches):
            if match and match.group(2):
                items.append(match.group(2).strip())
            elif items:
                items[-1] = f"{items[-1]} {line}"
            else:
                items.append(line)
    else:
        items = lines
    if len(items) != expected:
        raise BusParseError(f"expected {expected} items, parsed {len(items)}", text)
    return items


def render_question_prompt(update_text: str) -> str:
    return QUESTION_TEMPLATE.format(update=update_text)


def gen_questions(
    update_text: str,
    profile: ModelProfile | str,
    client: ChatClient,
    event_id: str,
    t: int,
) -> BusQuestionSet:
    """Generate five background questions for an update; one templated
    re-ask on malformed output, then a hard parse failure."""
    if not update_text.strip():
        raise BusError("gen_questions needs a non-empty update")
    prompt = render_question_prompt(update_text)
    params = {"task": "bus_questions", "event_id": event_id, "t": t}
    exchange = client.complete(profile, prompt, params)
    source = exchange.profile_id
    try:
        questions = parse_numbered_list(exchange.response)
    except BusParseError:
        retry = client.complete(profile, f"{prompt}\n{REASK_NOTE}", params)
        questions = parse_numbered_list(retry.response)
    return BusQuestionSet(
        event_id=event_id, t=t, source=source, questions=tuple(questions)
    )


# --- answer extraction ------------------------------------------------------

@dataclass(frozen=True)
class BusAnswer:
    question_index: int
    text: str
    answerable: bool
    pattern: str  # fired rule id, "none", "alignment-error", or "human-none"

    def to_record(self, question: str) -> dict:
        return {
            "q": question,
            "text": self.text,
            "answerable": self.answerable,
            "pattern": self.pattern,
        }


def render_answer_prompt(background: str, questions: Sequence[str]) -> str:
    numbered = "\n".join(f"{i + 1}. {q}" for i, q in enumerate(questions))
    return ANSWER_TEMPLATE.format(background=background, questions=numbered)


def _split_answers(text: str) -> dict[int, str]:
    answers: dict[int, str] = {}
    current: int | None = None
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        match = re.match(r"^(?:[Aa]nswer\s*)?[Qq]?(\d+)\s*[.):\-]\s*(.*)$", stripped)
        if match:
            current = int(match.group(1))
            answers[current] = match.group(2).strip()
        elif current is not None:
            answers[current] = f"{answers[current]} {stripped}".strip()
    return answers


def extract_answers(
    background_text: str,
    questions: Sequence[str],
    profile: ModelProfile | str,
    client: ChatClient,
    event_id: str,
    t: int,
    rules: AnswerRules | None = None,
) -> list[BusAnswer]:
    """Extract per-question answers from one background and classify
    each; questions the response fails to align with are conservatively
    unanswerable."""
    if len(questions) != QUESTION_COUNT:
        raise BusError(f"extract_answers needs {QUESTION_COUNT} questions")
    rules = rules or load_answer_rules()
    prompt = render_answer_prompt(background_text, questions)
    params = {"task": "bus_answers", "event_id": event_id, "t": t}
    exchange = client.complete(profile, prompt, params)
    parsed = _split_answers(exchange.response)

    answers = []
    for i in range(1, QUESTION_COUNT + 1):
        if i not in parsed:
            answers.append(
                BusAnswer(question_index=i, text="", answerable=False, pattern="alignment-error")
            )
            continue
        answerable, pattern = classify_answerable(parsed[i], rules)
        answers.append(
            BusAnswer(question_index=i, text=parsed[i], answerable=answerable, pattern=pattern)
        )
    return answers


# --- scoring ---------------------------------------------------------------

@dataclass(frozen=True)
class ItemAnswers:
    """All five classified answers of one system for one item."""

    event_id: str
    t: int
    system_id: str
    answers: tuple[BusAnswer, ...]
    source: str = "model"

    @property
    def answered(self) -> int:
        return sum(1 for a in self.answers if a.answerable)

    def to_record(self, questions: Sequence[str] | None = None) -> dict:
        questions = questions or [""] * len(self.answers)
        return {
            "event_id": self.event_id,
            "t": self.t,
            "system_id": self.system_id,
            "source": self.source,
            "answers": [a.to_record(q) for a, q in zip(self.answers, questions)],
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "ItemAnswers":
        answers = tuple(
            BusAnswer(
                question_index=i + 1,
                text=a.get("text", ""),
                answerable=bool(a["answerable"]),
                pattern=a.get("pattern", "none"),
            )
            for i, a in enumerate(record["answers"])
        )
        return cls(
            event_id=record["event_id"],
            t=int(record["t"]),
            system_id=record["system_id"],
            answers=answers,
            source=record.get("source", "model"),
        )


@dataclass(frozen=True)
class BusScore:
    system_id: str
    scope: str  # "item" | "event" | "corpus"
    key: str  # "event:t", event id, or "corpus"
    answered: int
    total: int

    @property
    def score(self) -> float:
        return 100.0 * self.answered / self.total if self.total else 0.0

    def to_record(self) -> dict:
        return {
            "system_id": self.system_id,
            "scope": self.scope,
            "key": self.key,
            "answered": self.answered,
            "total": self.total,
            "score": self.score,
        }


@dataclass
class BusReport:
    items: list[BusScore] = field(default_factory=list)
    events: list[BusScore] = field(default_factory=list)
    corpus: list[BusScore] = field(default_factory=list)
    excluded_items: list[str] = field(default_factory=list)
    rules_sha256: str = ""

    def corpus_score(self, system_id: str) -> BusScore:
        for score in self.corpus:
            if score.system_id == system_id:
                return score
        raise BusError(f"no corpus score for system {system_id!r}")


def bus_score(item_answers: Iterable[ItemAnswers], rules: AnswerRules | None = None) -> BusReport:
    """Scores at item, event, and corpus scope.

    Items not covered by every system are excluded from all systems so
    the comparison stays fair; roll-ups sum counts, never percentages."""
    by_item: dict[tuple[str, int], dict[str, ItemAnswers]] = {}
    systems: set[str] = set()
    for ia in item_answers:
        by_item.setdefault((ia.event_id, ia.t), {})[ia.system_id] = ia
        systems.add(ia.system_id)
    if not by_item:
        raise BusError("bus_score got no items")

    report = BusReport(rules_sha256=(rules.sha256 if rules else load_answer_rules().sha256))
    covered: dict[tuple[str, int], dict[str, ItemAnswers]] = {}
    for key in sorted(by_item):
        row = by_item[key]
        if set(row) != systems:
            report.excluded_items.append(f"{key[0]}:{key[1]}")
            continue
        covered[key] = row

    event_counts: dict[tuple[str, str], list[int]] = {}
    corpus_counts: dict[str, list[int]] = {}
    for (event_id, t), row in covered.items():
        for system_id, ia in row.items():
            total = len(ia.answers)
            report.items.append(
                BusScore(
                    system_id=system_id,
                    scope="item",
                    key=f"{event_id}:{t}",
                    answered=ia.answered,
                    total=total,
                )
            )
            ec = event_counts.setdefault((system_id, event_id), [0, 0])
            ec[0] += ia.answered
            ec[1] += total
            cc = corpus_counts.setdefault(system_id, [0, 0])
            cc[0] += ia.answered
            cc[1] += total

    for (system_id, event_id), (answered, total) in sorted(event_counts.items()):
        report.events.append(
            BusScore(system_id=system_id, scope="event", key=event_id, answered=answered, total=total)
        )
    for system_id, (answered, total) in sorted(corpus_counts.items()):
        report.corpus.append(
            BusScore(system_id=system_id, scope="corpus", key="corpus", answered=answered, total=total)
        )
    return report


def designate_best_worst(report: BusReport) -> list[ItemDesignation]:
    """Per item, every system at the max score is best, every system at
    the min is worst (all are both when all scores tie)."""
    by_item: dict[str, dict[str, BusScore]] = {}
    for score in report.items:
        by_item.setdefault(score.key, {})[score.system_id] = score

    designations = []
    for key in sorted(by_item):
        row = by_item[key]
        if len(row) < 2:
            raise BusError(f"item {key} has fewer than 2 systems")
        values = {system: score.score for system, score in row.items()}
        high = max(values.values())
        low = min(values.values())
        event_id, t = key.rsplit(":", 1)
        designations.append(
            ItemDesignation(
                event_id=event_id,
                t=int(t),
                best=frozenset(s for s, v in values.items() if v == high),
                worst=frozenset(s for s, v in values.items() if v == low),
            )
        )
    return designations
