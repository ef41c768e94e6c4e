"""From-scratch ROUGE-1 / ROUGE-2 / summary-level ROUGE-Lsum with
multi-reference max, plus the annotator-agreement report built on it.

Scores are plain fractions in [0, 1]; report tables multiply by 100 for
display. Tokenization is pinned by a rule id in the config so results
are reproducible across runs and machines.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

from .stemmer import stem_token
from .timeline import Timeline

VARIANTS = ("rouge1", "rouge2", "rougeLsum")

_ALNUM_RUNS = re.compile(r"[a-z0-9]+")
_ALNUM_RUNS_CASED = re.compile(r"[A-Za-z0-9]+")
_SENT_BOUNDARY = re.compile(r"(?<=[.!?])\s+")

_TOKENIZERS: dict[str, Callable[[str, bool], list[str]]] = {}


def _non_alnum_tokenizer(text: str, lowercase: bool) -> list[str]:
    if lowercase:
        return _ALNUM_RUNS.findall(text.lower())
    return _ALNUM_RUNS_CASED.findall(text)


_TOKENIZERS["non_alnum"] = _non_alnum_tokenizer


class RougeError(ValueError):
    pass


@dataclass(frozen=True)
class RougeConfig:
    variant: str = "rouge1"
    lowercase: bool = True
    stemmer: bool = False
    tokenizer: str = "non_alnum"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise RougeError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.tokenizer not in _TOKENIZERS:
            raise RougeError(f"unknown tokenizer rule {self.tokenizer!r}")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    def as_record(self, variant: str) -> dict:
        return {
            "variant": variant,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@lru_cache(maxsize=65536)
def _tokenize_cached(text: str, tokenizer: str, lowercase: bool, stemmer: bool) -> tuple[str, ...]:
    tokens = _TOKENIZERS[tokenizer](text, lowercase)
    if stemmer:
        tokens = [stem_token(t) for t in tokens]
    return tuple(tokens)


def tokenize(text: str, config: RougeConfig) -> list[str]:
    # corpus-level agreement rescoring hits the same texts many times
    return list(_tokenize_cached(text, config.tokenizer, config.lowercase, config.stemmer))


def split_sentences(text: str) -> list[str]:
    """Split on newlines, then on terminal punctuation followed by space."""
    sentences = []
    for line in text.split("\n"):
        line = line.strip()
        if not line:
            continue
        for sent in _SENT_BOUNDARY.split(line):
            sent = sent.strip()
            if sent:
                sentences.append(sent)
    return sentences


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(hypothesis: str, reference: str, n: int, config: RougeConfig | None = None) -> RougeScore:
    """Clipped n-gram overlap; empty sides score 0 on their component."""
    if n not in (1, 2):
        raise RougeError(f"n must be 1 or 2, got {n}")
    config = config or RougeConfig()
    hyp = _ngram_counts(tokenize(hypothesis, config), n)
    ref = _ngram_counts(tokenize(reference, config), n)
    hyp_total = sum(hyp.values())
    ref_total = sum(ref.values())
    matches = sum(min(count, ref[gram]) for gram, count in hyp.items())
    precision = matches / hyp_total if hyp_total else 0.0
    recall = matches / ref_total if ref_total else 0.0
    return RougeScore(precision, recall, _f1(precision, recall))


def _lcs_table(a: Sequence[str], b: Sequence[str]) -> list[list[int]]:
    rows = len(a)
    cols = len(b)
    table = [[0] * (cols + 1) for _ in range(rows + 1)]
    for i in range(1, rows + 1):
        for j in range(1, cols + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table


def _lcs_indices(ref: Sequence[str], other: Sequence[str]) -> list[int]:
    """Indices into `ref` of one longest common subsequence.

    Backtrack convention: on a match take it; otherwise move in the
    `other` direction when it is strictly better. Pinned so scores are
    deterministic.
    """
    table = _lcs_table(ref, other)
    i, j = len(ref), len(other)
    indices = []
    while i > 0 and j > 0:
        if ref[i - 1] == other[j - 1]:
            indices.append(i - 1)
            i -= 1
            j -= 1
        elif table[i][j - 1] > table[i - 1][j]:
            j -= 1
        else:
            i -= 1
    indices.reverse()
    return indices


def _union_lcs_tokens(ref_sent: Sequence[str], hyp_sents: Sequence[Sequence[str]]) -> list[str]:
    hit_indices: set[int] = set()
    for hyp in hyp_sents:
        hit_indices.update(_lcs_indices(ref_sent, hyp))
    return [ref_sent[i] for i in sorted(hit_indices)]


def rouge_lsum(hypothesis: str, reference: str, config: RougeConfig | None = None) -> RougeScore:
    """Summary-level LCS: per reference sentence, union of LCS matches
    against all hypothesis sentences, with every token on either side
    creditable at most once."""
    config = config or RougeConfig()
    ref_sents = [tokenize(s, config) for s in split_sentences(reference)]
    hyp_sents = [tokenize(s, config) for s in split_sentences(hypothesis)]
    ref_sents = [s for s in ref_sents if s]
    hyp_sents = [s for s in hyp_sents if s]

    ref_total = sum(len(s) for s in ref_sents)
    hyp_total = sum(len(s) for s in hyp_sents)
    if not ref_total or not hyp_total:
        return RougeScore(0.0, 0.0, 0.0)

    ref_budget = Counter()
    hyp_budget = Counter()
    for s in ref_sents:
        ref_budget.update(s)
    for s in hyp_sents:
        hyp_budget.update(s)

    hits = 0
    for ref_sent in ref_sents:
        for token in _union_lcs_tokens(ref_sent, hyp_sents):
            if ref_budget[token] > 0 and hyp_budget[token] > 0:
                hits += 1
                ref_budget[token] -= 1
                hyp_budget[token] -= 1

    precision = hits / hyp_total
    recall = hits / ref_total
    return RougeScore(precision, recall, _f1(precision, recall))


def score(hypothesis: str, reference: str, config: RougeConfig) -> RougeScore:
    if config.variant == "rouge1":
        return rouge_n(hypothesis, reference, 1, config)
    if config.variant == "rouge2":
        return rouge_n(hypothesis, reference, 2, config)
    return rouge_lsum(hypothesis, reference, config)


def multi_ref_max(hypothesis: str, references: Sequence[str], config: RougeConfig) -> RougeScore:
    """Best single-reference score by F1; ties go to the earliest reference."""
    if not references:
        raise RougeError("multi_ref_max needs at least one reference")
    best: RougeScore | None = None
    for reference in references:
        candidate = score(hypothesis, reference, config)
        if best is None or candidate.f1 > best.f1:
            best = candidate
    return best


@dataclass(frozen=True)
class IaaCell:
    mean_f1: float
    count: int


@dataclass
class IaaReport:
    """Per (section, annotator, variant) mean of multi-reference-max F1,
    macro-averaged over timesteps pooled across all events in scope."""

    cells: dict[tuple[str, int, str], IaaCell] = field(default_factory=dict)

    def annotators(self) -> list[int]:
        return sorted({key[1] for key in self.cells})

    def as_records(self) -> list[dict]:
        records = []
        for (section, annotator_id, variant), cell in sorted(self.cells.items()):
            records.append(
                {
                    "section": section,
                    "annotator_id": annotator_id,
                    "variant": variant,
                    "mean_f1": cell.mean_f1,
                    "timesteps": cell.count,
                }
            )
        return records


class IaaError(ValueError):
    pass


def _iaa_section(
    texts_per_step: list[tuple[str, int, dict[int, str]]],
    variants: Sequence[str],
    lowercase: bool,
    stemmer: bool,
) -> dict[tuple[int, str], IaaCell]:
    sums: dict[tuple[int, str], float] = {}
    counts: dict[tuple[int, str], int] = {}
    configs = {
        v: RougeConfig(variant=v, lowercase=lowercase, stemmer=stemmer) for v in variants
    }
    for event_id, t, by_annotator in texts_per_step:
        if len(by_annotator) < 2:
            raise IaaError(
                f"event {event_id!r} step {t}: agreement needs at least 2 annotators, "
                f"found {len(by_annotator)}"
            )
        for annotator_id, hypothesis in by_annotator.items():
            references = [
                text for other, text in by_annotator.items() if other != annotator_id
            ]
            for variant in variants:
                result = multi_ref_max(hypothesis, references, configs[variant])
                key = (annotator_id, variant)
                sums[key] = sums.get(key, 0.0) + result.f1
                counts[key] = counts.get(key, 0) + 1
    return {
        key: IaaCell(mean_f1=sums[key] / counts[key], count=counts[key]) for key in sums
    }


def compute_iaa(
    timelines: Iterable[Timeline],
    variants: Sequence[str] = VARIANTS,
    lowercase: bool = True,
    stemmer: bool = False,
) -> IaaReport:
    """Score each annotator's text against the other annotators' texts
    (multi-reference max), separately for rewritten updates and for
    backgrounds (which exist only after the first step)."""
    update_steps: list[tuple[str, int, dict[int, str]]] = []
    background_steps: list[tuple[str, int, dict[int, str]]] = []
    for timeline in timelines:
        for step in timeline.steps:
            update_steps.append(
                (timeline.event.event_id, step.index, {u.annotator_id: u.text for u in step.updates})
            )
            if step.index > 1:
                background_steps.append(
                    (
                        timeline.event.event_id,
                        step.index,
                        {b.annotator_id: b.text for b in step.backgrounds},
                    )
                )

    report = IaaReport()
    for (annotator_id, variant), cell in _iaa_section(
        update_steps, variants, lowercase, stemmer
    ).items():
        report.cells[("updates", annotator_id, variant)] = cell
    for (annotator_id, variant), cell in _iaa_section(
        background_steps, variants, lowercase, stemmer
    ).items():
        report.cells[("backgrounds", annotator_id, variant)] = cell
    return report
