"""Command-line surface for the whole pipeline.

Commands operate on a workspace directory with the conventional layout
(corpus/, runs/, logs/, scores/, cache/, report/). Every command is
idempotent for a fixed config and cache, all randomness is seeded, and
outputs are written with sorted keys so reruns are byte-identical.

Exit codes: 0 success, 1 partial (some steps failed, results usable),
2 configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__, jsonl
from .bus import (
    BusError,
    BusParseError,
    ItemAnswers,
    bus_score,
    designate_best_worst,
    extract_answers,
    gen_questions,
    load_answer_rules,
)
from .bws import (
    JudgmentRecord,
    bws_scores,
    majority_designations,
    per_event_tally,
    vote_distribution,
)
from .gateway import ChatClient, ClientConfig, GatewayError, profile_registry
from .generate import (
    GenerationError,
    GenerationSpec,
    load_runs,
    run_event,
)
from .rouge import RougeConfig, VARIANTS, compute_iaa, multi_ref_max
from .sampling import CoverageError, EvalItem, covered_items, sample_eval_items
from .service import AnnotationService, ServiceConfig, serve_annotation
from .timeline import (
    Corpus,
    DateRange,
    EventRecord,
    SourceTimeline,
    SplitError,
    TimelineError,
    assign_split,
    canonical_event_id,
    corpus_stats,
    load_corpus,
    merge_timelines,
    save_corpus,
    validate_timeline,
)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    workspace: Path = Path(".")
    seed: int = 13
    concurrency: int = 4
    profiles: dict = field(default_factory=dict)
    fixtures: str | None = None
    cache: bool = True
    too_fast_floor_ms: int = 10_000
    judge_task_cap: int = 333
    assignments: dict = field(
        default_factory=lambda: {"bws_judgment": 3, "qa_questions": 1, "qa_answers": 1}
    )

    @property
    def corpus_dir(self) -> Path:
        return self.workspace / "corpus"

    @property
    def runs_dir(self) -> Path:
        return self.workspace / "runs"

    @property
    def logs_dir(self) -> Path:
        return self.workspace / "logs"

    @property
    def scores_dir(self) -> Path:
        return self.workspace / "scores"

    @property
    def cache_dir(self) -> Path | None:
        return self.workspace / "cache" if self.cache else None

    @property
    def exchange_log(self) -> Path:
        return self.logs_dir / "exchanges.jsonl"

    def registry(self):
        try:
            return profile_registry(self.profiles)
        except (GatewayError, TypeError) as exc:
            raise ConfigError(f"bad profile override: {exc}") from exc

    def client(self) -> ChatClient:
        return ChatClient(
            profiles=self.registry(),
            config=ClientConfig(
                cache_dir=str(self.cache_dir) if self.cache_dir else None,
                log_path=str(self.exchange_log),
                concurrency=self.concurrency,
                fixtures_path=self.fixtures,
            ),
        )


def load_config(args) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg})") from exc
        for key in (
            "seed",
            "concurrency",
            "profiles",
            "fixtures",
            "cache",
            "too_fast_floor_ms",
            "judge_task_cap",
            "assignments",
        ):
            if key in data:
                setattr(config, key, data[key])
        if "workspace" in data:
            config.workspace = Path(data["workspace"])
    if getattr(args, "workspace", None):
        config.workspace = Path(args.workspace)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    config.registry()  # validate profile overrides early
    return config


# --- small output helpers ------------------------------------------------

def render_grid(headers: list[str], rows: list[list]) -> str:
    table = [headers] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    lines = []
    for r, row in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
        if r == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(headers))))
    return "\n".join(lines)


def write_score_records(path: Path, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    jsonl.write_records(path, records)


def _load_corpus(config: RunConfig, override: str | None) -> Corpus:
    directory = Path(override) if override else config.corpus_dir
    try:
        return load_corpus(directory)
    except (TimelineError, jsonl.RecordError, OSError) as exc:
        raise ConfigError(f"cannot load corpus: {exc}") from exc


# --- commands -------------------------------------------------------------

def cmd_merge(args, config: RunConfig) -> int:
    sources = []
    for path in args.sources:
        try:
            sources.append(SourceTimeline.load(path))
        except (jsonl.RecordError, TimelineError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    event_id = canonical_event_id(args.event)
    try:
        split = args.split or assign_split(event_id)
    except SplitError as exc:
        print(f"error: {exc} (or pass --split)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        merged = merge_timelines(sources)
    except TimelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    event = EventRecord(
        event_id=event_id,
        title=args.title or event_id.replace("-", " ").title(),
        split=split,
        period=DateRange(merged.steps[0].date, merged.steps[-1].date),
        source_datasets=merged.event.source_datasets,
    )
    merged = replace(merged, event=event)

    out_dir = Path(args.out) if args.out else config.corpus_dir
    if (out_dir / "manifest.json").exists():
        corpus = load_corpus(out_dir)
    else:
        corpus = Corpus()
    corpus.events[event_id] = event
    corpus.timelines[event_id] = merged
    save_corpus(corpus, out_dir)
    diagnostics = validate_timeline(merged)
    annotation_pending = sum(1 for d in diagnostics if d.code == "missing-backgrounds")
    print(
        f"merged {len(sources)} source(s) into {event_id}: {merged.length} timesteps "
        f"({annotation_pending} awaiting background annotation)"
    )
    return EXIT_OK


def cmd_stats(args, config: RunConfig) -> int:
    corpus = _load_corpus(config, args.corpus)
    rows = []
    records = []
    for timeline in corpus.ordered():
        stats = corpus_stats(timeline)
        rounded = stats.rounded()
        rows.append(
            [
                timeline.event.split,
                timeline.event.event_id,
                stats.num_steps,
                rounded["update_words"],
                rounded["background_words"],
            ]
        )
        records.append(
            {
                "event_id": timeline.event.event_id,
                "split": timeline.event.split,
                "timesteps": stats.num_steps,
                "update_words": rounded["update_words"],
                "background_words": rounded["background_words"],
                "update_words_exact": stats.update_word_mean,
                "background_words_exact": stats.background_word_mean,
                "has_backgrounds": stats.has_backgrounds,
            }
        )
    print(render_grid(["split", "event", "timesteps", "len(update)", "len(background)"], rows))
    out = Path(args.out) if args.out else config.scores_dir / "stats.jsonl"
    write_score_records(out, records)
    return EXIT_OK


def cmd_iaa(args, config: RunConfig) -> int:
    corpus = _load_corpus(config, args.corpus)
    timelines = corpus.ordered()
    if not timelines:
        print("error: corpus is empty", file=sys.stderr)
        return EXIT_CONFIG
    report = compute_iaa(timelines, stemmer=args.stemmer)
    rows = []
    for section in ("updates", "backgrounds"):
        for annotator in report.annotators():
            row = [section, annotator]
            for variant in VARIANTS:
                cell = report.cells[(section, annotator, variant)]
                row.append(f"{100 * cell.mean_f1:.1f}")
            rows.append(row)
    print(render_grid(["section", "annotator", *VARIANTS], rows))
    out = Path(args.out) if args.out else config.scores_dir / "iaa.jsonl"
    write_score_records(out, report.as_records())
    return EXIT_OK


def _run_paths(config: RunConfig, override: str | None) -> list[Path]:
    directory = Path(override) if override else config.runs_dir
    if directory.is_file():
        return [directory]
    if not directory.exists():
        raise ConfigError(f"no runs at {directory}")
    return sorted(directory.glob("*.jsonl"))


def cmd_summarize(args, config: RunConfig) -> int:
    corpus = _load_corpus(config, args.corpus)
    client = config.client()
    if args.profile not in client.profiles:
        print(f"error: unknown profile {args.profile!r}", file=sys.stderr)
        return EXIT_CONFIG
    events = [canonical_event_id(args.event)] if args.event else sorted(corpus.timelines)
    missing = [e for e in events if e not in corpus.timelines]
    if missing:
        print(f"error: events not in corpus: {missing}", file=sys.stderr)
        return EXIT_CONFIG

    runs_dir = Path(args.runs) if args.runs else config.runs_dir
    runs_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for event_id in events:
        timeline = corpus.timelines[event_id]
        try:
            spec = GenerationSpec(
                mode=args.mode,
                profile_id=args.profile,
                event_id=event_id,
                annotator_id=args.annotator,
                query_form=args.query_form,
            )
        except GenerationError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        suffix = f"__{args.query_form}" if args.query_form else ""
        out_path = runs_dir / (
            f"{event_id}__{args.profile}__{args.mode}{suffix}__a{args.annotator}.jsonl"
        )
        run = run_event(timeline, spec, client, out_path=out_path, force=args.force)
        status = "complete" if run.complete else f"{len(run.errors)} failures"
        print(
            f"{event_id}: {len(run.outputs)} backgrounds "
            f"({run.skipped} resumed, {status}) -> {out_path}"
        )
        for t, message in run.errors:
            print(f"  step {t}: {message}", file=sys.stderr)
        failures += len(run.errors)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_rouge(args, config: RunConfig) -> int:
    corpus = _load_corpus(config, args.corpus)
    runs = load_runs(_run_paths(config, args.runs))
    if not runs:
        print("error: no run outputs found", file=sys.stderr)
        return EXIT_CONFIG
    configs = {
        variant: RougeConfig(variant=variant, stemmer=args.stemmer) for variant in VARIANTS
    }
    sums: dict[tuple[str, str, str], list[float]] = {}
    counts: dict[tuple[str, str, str], int] = {}
    skipped = 0
    for system_id, by_event in sorted(runs.items()):
        for event_id, steps in sorted(by_event.items()):
            timeline = corpus.timelines.get(event_id)
            if timeline is None:
                skipped += len(steps)
                continue
            split = timeline.event.split
            for t, record in sorted(steps.items()):
                references = [b.text for b in timeline.step(t).backgrounds]
                if not references:
                    skipped += 1
                    continue
                for variant in VARIANTS:
                    result = multi_ref_max(record["background"], references, configs[variant])
                    key = (system_id, split, variant)
                    bucket = sums.setdefault(key, [0.0, 0.0, 0.0])
                    bucket[0] += result.precision
                    bucket[1] += result.recall
                    bucket[2] += result.f1
                    counts[key] = counts.get(key, 0) + 1

    records = []
    rows = []
    for key in sorted(sums):
        system_id, split, variant = key
        n = counts[key]
        p, r, f = (value / n for value in sums[key])
        records.append(
            {
                "system_id": system_id,
                "split": split,
                "variant": variant,
                "precision": p,
                "recall": r,
                "f1": f,
                "items": n,
            }
        )
        rows.append([system_id, split, variant, f"{100 * f:.1f}", n])
    print(render_grid(["system", "split", "variant", "F1", "items"], rows))
    if skipped:
        print(f"note: {skipped} outputs skipped (missing event or references)")
    out = Path(args.out) if args.out else config.scores_dir / "rouge.jsonl"
    write_score_records(out, records)
    return EXIT_OK


def _human_answers_key(record: dict) -> tuple:
    return (record["event_id"], int(record["t"]), record["system_id"], record.get("source"))


def cmd_bus(args, config: RunConfig) -> int:
    corpus = _load_corpus(config, args.corpus)
    runs = load_runs(_run_paths(config, args.runs))
    if not runs:
        print("error: no run outputs found", file=sys.stderr)
        return EXIT_CONFIG
    client = config.client()
    if args.profile not in client.profiles:
        print(f"error: unknown profile {args.profile!r}", file=sys.stderr)
        return EXIT_CONFIG
    rules = load_answer_rules(args.rules) if args.rules else load_answer_rules()

    items, coverage = covered_items(corpus, runs, split=args.split)
    if not items:
        print(f"error: no covered items: {coverage}", file=sys.stderr)
        return EXIT_CONFIG
    if args.n:
        try:
            items = sample_eval_items(items, args.n, seed=config.seed, stratify=args.stratify)
        except CoverageError as exc:
            print(f"error: {exc}: {exc.report}", file=sys.stderr)
            return EXIT_CONFIG

    systems: dict[str, dict[str, dict[int, dict]]] = dict(runs)
    if args.include_human:
        human: dict[str, dict[int, dict]] = {}
        for item in items:
            step = corpus.timelines[item.event_id].step(item.t)
            texts = [b.text for b in step.backgrounds if b.annotator_id == args.annotator]
            if texts:
                human.setdefault(item.event_id, {})[item.t] = {"background": texts[0]}
        systems["human"] = human

    logs_dir = config.logs_dir
    questions_path = Path(args.questions) if args.questions else logs_dir / "bus_questions.jsonl"
    answers_path = Path(args.answers) if args.answers else logs_dir / "bus_answers.jsonl"

    existing_questions = {}
    if questions_path.exists():
        for _, record in jsonl.read_records(questions_path):
            existing_questions[(record["event_id"], int(record["t"]), record["source"])] = record
    existing_answers = set()
    if answers_path.exists():
        for _, record in jsonl.read_records(answers_path):
            existing_answers.add(_human_answers_key(record))

    failures = 0
    question_sets = {}
    for item in items:
        key = (item.event_id, item.t, args.profile)
        if key in existing_questions:
            question_sets[item] = existing_questions[key]["questions"]
            continue
        update_text = (
            corpus.timelines[item.event_id].step(item.t).update_for(args.annotator).text
        )
        try:
            qs = gen_questions(update_text, args.profile, client, item.event_id, item.t)
        except (BusParseError, GatewayError) as exc:
            print(f"  {item.item_id}: question generation failed: {exc}", file=sys.stderr)
            failures += 1
            continue
        question_sets[item] = list(qs.questions)
        jsonl.append_record(questions_path, qs.to_record())

    item_answers: list[ItemAnswers] = []
    for item in items:
        if item not in question_sets:
            continue
        questions = question_sets[item]
        for system_id in sorted(systems):
            steps = systems[system_id].get(item.event_id, {})
            if item.t not in steps:
                continue
            akey = (item.event_id, item.t, system_id, args.profile)
            if akey in existing_answers:
                continue
            background = steps[item.t]["background"]
            try:
                answers = extract_answers(
                    background, questions, args.profile, client, item.event_id, item.t, rules
                )
            except GatewayError as exc:
                print(f"  {item.item_id}/{system_id}: {exc}", file=sys.stderr)
                failures += 1
                continue
            ia = ItemAnswers(
                event_id=item.event_id,
                t=item.t,
                system_id=system_id,
                answers=tuple(answers),
                source=args.profile,
            )
            jsonl.append_record(answers_path, ia.to_record(questions))

    # score everything persisted for this QA source (old + new)
    for _, record in jsonl.read_records(answers_path):
        if record.get("source") == args.profile:
            item_answers.append(ItemAnswers.from_record(record))
    if not item_answers:
        print("error: no answers to score", file=sys.stderr)
        return EXIT_CONFIG
    report = bus_score(item_answers, rules)

    rows = [
        [s.system_id, s.answered, s.total, f"{s.score:.1f}"] for s in report.corpus
    ]
    print(render_grid(["system", "answered", "total", "BUS"], rows))
    if report.excluded_items:
        print(f"note: excluded for fairness (uneven coverage): {report.excluded_items}")

    out_dir = Path(args.out) if args.out else config.scores_dir
    write_score_records(
        out_dir / f"bus_{args.profile}.jsonl",
        [s.to_record() for s in report.items + report.events + report.corpus],
    )
    designations = designate_best_worst(report)
    write_score_records(
        out_dir / f"bus_designations_{args.profile}.jsonl",
        [
            {
                "event_id": d.event_id,
                "t": d.t,
                "best": sorted(d.best),
                "worst": sorted(d.worst),
                "method": f"bus:{args.profile}",
            }
            for d in designations
        ],
    )
    print(f"rule file sha256: {report.rules_sha256}")
    return EXIT_PARTIAL if failures else EXIT_OK


def _read_judgments(path: Path) -> list[JudgmentRecord]:
    if not path.exists():
        raise ConfigError(f"no judgment log at {path}")
    return [JudgmentRecord.from_record(record) for _, record in jsonl.read_records(path)]


def cmd_bws(args, config: RunConfig) -> int:
    log_path = Path(args.log) if args.log else config.logs_dir / "judgments.jsonl"
    judgments = _read_judgments(log_path)
    if args.drop_flagged:
        judgments = [j for j in judgments if "too-fast" not in j.flags]
    report = bws_scores(judgments, mode=args.bws_mode)
    rows = [
        [
            r.system_id,
            r.best_count,
            r.worst_count,
            f"{float(r.bws):+.4f}",
        ]
        for r in (report.results[s] for s in sorted(report.results))
    ]
    print(f"mode: {report.mode} (items={report.items}, judgments={report.judgments})")
    print(render_grid(["system", "best", "worst", "BWS"], rows))

    dist = vote_distribution(judgments, judges=args.judges)
    dist_rows = [
        [record["system_id"], record["kind"], record["votes"], record["items"]]
        for record in dist.as_records()
    ]
    print()
    print(render_grid(["system", "kind", "votes", "items"], dist_rows))

    out = Path(args.out) if args.out else config.scores_dir / "bws.jsonl"
    write_score_records(out, report.as_records() + dist.as_records())
    return EXIT_OK


def _designations_from_answer_log(path: Path) -> dict[str, list]:
    """BUS designations grouped by QA source from an answers log.

    Sources whose items never cover two systems (e.g. a half-collected
    human study) cannot be designated and are skipped with a note."""
    by_source: dict[str, list[ItemAnswers]] = {}
    for _, record in jsonl.read_records(path):
        by_source.setdefault(record.get("source", "model"), []).append(
            ItemAnswers.from_record(record)
        )
    out = {}
    for source, answers in sorted(by_source.items()):
        try:
            out[source] = designate_best_worst(bus_score(answers))
        except BusError as exc:
            print(f"note: skipping {path}:{source}: {exc}", file=sys.stderr)
    return out


def cmd_compare(args, config: RunConfig) -> int:
    methods: dict[str, list] = {}
    bws_log = Path(args.bws_log) if args.bws_log else config.logs_dir / "judgments.jsonl"
    if bws_log.exists():
        methods["bws"] = majority_designations(_read_judgments(bws_log))
    for answers_file in args.bus_answers or []:
        for source, designations in _designations_from_answer_log(Path(answers_file)).items():
            methods[f"bus:{source}"] = designations
    if not methods:
        print("error: nothing to compare (no judgment log, no answer logs)", file=sys.stderr)
        return EXIT_CONFIG

    records = []
    rows = []
    for method in sorted(methods):
        for row in per_event_tally(methods[method]):
            records.append(dict(row.to_record(), method=method))
            rows.append([method, row.event_id, row.system_id, row.best, row.worst])
    print(render_grid(["method", "event", "system", "best", "worst"], rows))
    out = Path(args.out) if args.out else config.scores_dir / "compare.jsonl"
    write_score_records(out, records)
    return EXIT_OK


def cmd_serve(args, config: RunConfig) -> int:
    corpus = _load_corpus(config, args.corpus)
    runs = load_runs(_run_paths(config, args.runs))
    items, coverage = covered_items(corpus, runs, split=args.split)
    if not items:
        print(f"error: no covered items to annotate: {coverage}", file=sys.stderr)
        return EXIT_CONFIG
    if args.n:
        try:
            items = sample_eval_items(items, args.n, seed=config.seed, stratify=args.stratify)
        except CoverageError as exc:
            print(f"error: {exc}: {exc.report}", file=sys.stderr)
            return EXIT_CONFIG
    ui_dir = Path(args.ui) if args.ui else None
    if ui_dir is None and Path("frontend/dist/index.html").exists():
        ui_dir = Path("frontend/dist")
    service = AnnotationService(
        ServiceConfig(
            logs_dir=config.logs_dir,
            assignments=config.assignments,
            judge_task_cap=config.judge_task_cap,
            too_fast_floor_ms=config.too_fast_floor_ms,
            seed=config.seed,
            ui_dir=ui_dir,
        ),
        corpus,
        runs,
        items,
        human_annotator=args.annotator,
    )
    server = serve_annotation(service, host=args.host, port=args.port)
    host, port = server.server_address[:2]
    # flush so wrappers watching the pipe see the bound port immediately
    print(f"annotation service on http://{host}:{port}/ ({len(items)} items)", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return EXIT_OK


def cmd_report(args, config: RunConfig) -> int:
    """Bundle every score table the workspace can produce into report/."""
    report: dict = {"version": __version__, "seed": config.seed}
    corpus = _load_corpus(config, args.corpus)

    stats_records = []
    for timeline in corpus.ordered():
        stats = corpus_stats(timeline)
        stats_records.append(
            dict(
                event_id=timeline.event.event_id,
                split=timeline.event.split,
                **stats.rounded(),
            )
        )
    report["stats"] = stats_records

    scores_dir = config.scores_dir
    for name in ("iaa", "rouge", "bws", "compare"):
        path = scores_dir / f"{name}.jsonl"
        if path.exists():
            report[name] = jsonl.load_records(path)
    bus_files = sorted(scores_dir.glob("bus_*.jsonl"))
    if bus_files:
        report["bus"] = {p.stem: jsonl.load_records(p) for p in bus_files}

    out_dir = Path(args.out) if args.out else config.workspace / "report"
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / "report.json"
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, sort_keys=True, ensure_ascii=False, indent=2)
        fh.write("\n")
    print(f"report written to {out_path}")
    sections = ", ".join(k for k in sorted(report) if k not in ("version", "seed"))
    print(f"sections: {sections}")
    return EXIT_OK


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bgsum",
        description="Workbench for background summaries of news event timelines.",
    )
    parser.add_argument("--version", action="version", version=f"bgsum {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--workspace", help="workspace directory (default: .)")
    common.add_argument("--seed", type=int, help="override the config seed")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("merge", parents=[common], help="merge source timelines into the corpus")
    p.add_argument("sources", nargs="+", help="JSONL files of {date, text} entries")
    p.add_argument("--event", required=True, help="event id for the merged timeline")
    p.add_argument("--title")
    p.add_argument("--split", choices=("train", "dev", "test"))
    p.add_argument("--out", help="corpus directory (default: workspace/corpus)")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("stats", parents=[common], help="corpus statistics table")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("iaa", parents=[common], help="inter-annotator agreement table")
    p.add_argument("--corpus")
    p.add_argument("--stemmer", action="store_true", help="apply Porter stemming")
    p.add_argument("--out")
    p.set_defaults(func=cmd_iaa)

    p = sub.add_parser("summarize", parents=[common], help="generate background summaries")
    p.add_argument("--corpus")
    p.add_argument("--runs", help="output directory (default: workspace/runs)")
    p.add_argument("--event", help="one event only (default: all)")
    p.add_argument("--profile", required=True)
    p.add_argument("--mode", choices=("generic", "query_focused"), default="generic")
    p.add_argument("--query-form", choices=("full_update", "named_entities"))
    p.add_argument("--annotator", type=int, default=1)
    p.add_argument("--force", action="store_true", help="regenerate existing outputs")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("rouge", parents=[common], help="score runs against reference backgrounds")
    p.add_argument("--corpus")
    p.add_argument("--runs")
    p.add_argument("--stemmer", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rouge)

    p = sub.add_parser("bus", parents=[common], help="QA-based utility score over runs")
    p.add_argument("--corpus")
    p.add_argument("--runs")
    p.add_argument("--profile", required=True, help="QA model profile (mock for offline)")
    p.add_argument("--split", default="test")
    p.add_argument("--n", type=int, help="sample size (default: all covered items)")
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--annotator", type=int, default=1)
    p.add_argument("--include-human", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--rules", help="answerability rule file override")
    p.add_argument("--questions", help="questions log (default: logs/bus_questions.jsonl)")
    p.add_argument("--answers", help="answers log (default: logs/bus_answers.jsonl)")
    p.add_argument("--out", help="scores directory")
    p.set_defaults(func=cmd_bus)

    p = sub.add_parser("bws", parents=[common], help="best-worst scaling over a judgment log")
    p.add_argument("--log", help="judgment log (default: logs/judgments.jsonl)")
    p.add_argument("--bws-mode", choices=("per_majority", "per_vote"), default="per_majority")
    p.add_argument("--judges", type=int, default=3)
    p.add_argument("--drop-flagged", action="store_true", help="drop too-fast submissions")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bws)

    p = sub.add_parser("compare", parents=[common], help="three-way BWS vs BUS tally per event")
    p.add_argument("--bws-log")
    p.add_argument("--bus-answers", nargs="*", help="answer logs (model and/or human)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", parents=[common], help="run the local annotation service")
    p.add_argument("--corpus")
    p.add_argument("--runs")
    p.add_argument("--split", default="test")
    p.add_argument("--n", type=int)
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--annotator", type=int, default=1)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--ui", help="UI bundle directory (e.g. frontend/dist)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("report", parents=[common], help="bundle all available score tables")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except jsonl.RecordError as exc:
        print(f"bad record: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
