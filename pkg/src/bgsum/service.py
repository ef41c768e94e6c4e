"""Local annotation service: task queue plus judgment intake.

Replaces the crowdsourcing platform for desk-scale studies. Three task
types are served: best/worst judging of three shuffled backgrounds,
writing five background questions per update, and answering five
questions against one background. Judges are login-free tokens;
assignment is atomic; all records land in append-only JSONL logs, which
are also the source of truth when the service restarts.

Best/worst task payloads never contain system identifiers — the service
keeps the permutation and resolves submitted indices back to systems.
"""

from __future__ import annotations

import json
import random
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from urllib.parse import parse_qs, urlparse

from . import jsonl
from .bus import QUESTION_COUNT, BusQuestionSet
from .bws import BwsError, JudgmentRecord
from .sampling import EvalItem
from .timeline import Corpus

TASK_TYPES = ("bws_judgment", "qa_questions", "qa_answers")

JUDGMENTS_LOG = "judgments.jsonl"
QUESTIONS_LOG = "questions.jsonl"
ANSWERS_LOG = "answers.jsonl"


class ServiceError(ValueError):
    def __init__(self, message: str, status: int = 400):
        super().__init__(message)
        self.status = status


class ConflictError(ServiceError):
    def __init__(self, message: str):
        super().__init__(message, status=409)


@dataclass
class ServiceConfig:
    logs_dir: Path
    assignments: Mapping[str, int] = field(
        default_factory=lambda: {"bws_judgment": 3, "qa_questions": 1, "qa_answers": 1}
    )
    judge_task_cap: int = 333
    too_fast_floor_ms: int = 10_000
    seed: int = 13
    ui_dir: Path | None = None
    summaries_per_task: int = 3


@dataclass
class AnnotationTask:
    task_id: str
    task_type: str
    event_id: str
    t: int
    payload: dict
    display_order: tuple[str, ...] | None = None  # bws only, never sent to clients
    system_id: str | None = None  # qa_answers only
    submissions: set[str] = field(default_factory=set)
    assigned: dict[str, bool] = field(default_factory=dict)

    def public_payload(self) -> dict:
        return {
            "task_id": self.task_id,
            "task_type": self.task_type,
            "event_id": self.event_id,
            "t": self.t,
            "payload": self.payload,
        }


def build_bws_tasks(
    corpus: Corpus,
    runs_by_system: Mapping[str, Mapping[str, Mapping[int, dict]]],
    items: Sequence[EvalItem],
    seed: int,
    human_system: str = "human",
    human_annotator: int = 1,
    summaries_per_task: int = 3,
) -> list[AnnotationTask]:
    """One blind comparison task per sampled item.

    The human-written background joins the generated ones under the
    `human_system` label; the per-item display order is a seeded uniform
    permutation, recorded but never shown. The protocol compares exactly
    `summaries_per_task` summaries, so the system count must match.
    """
    systems = sorted(runs_by_system) + [human_system]
    if len(systems) != summaries_per_task:
        raise ServiceError(
            f"blind comparison needs exactly {summaries_per_task} systems "
            f"(human + {summaries_per_task - 1} runs), got {systems}"
        )
    tasks = []
    for item in items:
        timeline = corpus.timelines[item.event_id]
        step = timeline.step(item.t)
        update_text = step.update_for(human_annotator).text
        summaries = {}
        for system in runs_by_system:
            summaries[system] = runs_by_system[system][item.event_id][item.t]["background"]
        human_texts = [b.text for b in step.backgrounds if b.annotator_id == human_annotator]
        if not human_texts:
            raise ServiceError(f"no human background for {item.item_id}")
        summaries[human_system] = human_texts[0]

        order = sorted(summaries)
        rng = random.Random(f"{seed}:{item.event_id}:{item.t}")
        rng.shuffle(order)
        tasks.append(
            AnnotationTask(
                task_id=f"bws:{item.item_id}",
                task_type="bws_judgment",
                event_id=item.event_id,
                t=item.t,
                payload={
                    "update": update_text,
                    "summaries": [summaries[s] for s in order],
                },
                display_order=tuple(order),
            )
        )
    assert all(set(t.display_order) == set(systems) for t in tasks)
    return tasks


def build_question_tasks(
    corpus: Corpus,
    items: Sequence[EvalItem],
    human_annotator: int = 1,
) -> list[AnnotationTask]:
    tasks = []
    for item in items:
        step = corpus.timelines[item.event_id].step(item.t)
        tasks.append(
            AnnotationTask(
                task_id=f"qq:{item.item_id}",
                task_type="qa_questions",
                event_id=item.event_id,
                t=item.t,
                payload={"update": step.update_for(human_annotator).text},
            )
        )
    return tasks


class AnnotationService:
    """Task assignment and submission intake; thread-safe."""

    def __init__(
        self,
        config: ServiceConfig,
        corpus: Corpus,
        runs_by_system: Mapping[str, Mapping[str, Mapping[int, dict]]],
        items: Sequence[EvalItem],
        human_system: str = "human",
        human_annotator: int = 1,
    ):
        self.config = config
        self.corpus = corpus
        self.runs_by_system = dict(runs_by_system)
        self.items = list(items)
        self.human_system = human_system
        self.human_annotator = human_annotator
        self._lock = threading.Lock()
        self._judge_counts: dict[str, int] = {}

        logs = Path(config.logs_dir)
        logs.mkdir(parents=True, exist_ok=True)
        self.judgments_path = logs / JUDGMENTS_LOG
        self.questions_path = logs / QUESTIONS_LOG
        self.answers_path = logs / ANSWERS_LOG

        self.tasks: dict[str, AnnotationTask] = {}
        for task in build_bws_tasks(
            corpus,
            runs_by_system,
            items,
            config.seed,
            human_system,
            human_annotator,
            config.summaries_per_task,
        ):
            self.tasks[task.task_id] = task
        for task in build_question_tasks(corpus, items, human_annotator):
            self.tasks[task.task_id] = task

        self._replay_logs()

    # -- state rebuild ----------------------------------------------------

    def _replay_logs(self) -> None:
        if self.judgments_path.exists():
            for _, record in jsonl.read_records(self.judgments_path):
                task = self.tasks.get(f"bws:{record['item_id']}")
                if task is not None:
                    judge = str(record["judge_id"])
                    task.submissions.add(judge)
                    self._bump_judge(judge)
        if self.questions_path.exists():
            for _, record in jsonl.read_records(self.questions_path):
                task = self.tasks.get(f"qq:{record['event_id']}:{record['t']}")
                judge = str(record.get("judge_id", "unknown"))
                if task is not None:
                    task.submissions.add(judge)
                    self._bump_judge(judge)
                self._spawn_answer_tasks(
                    record["event_id"], int(record["t"]), record["questions"]
                )
        if self.answers_path.exists():
            for _, record in jsonl.read_records(self.answers_path):
                task_id = f"qa:{record['event_id']}:{record['t']}:{record['system_id']}"
                task = self.tasks.get(task_id)
                if task is not None:
                    judge = str(record.get("judge_id", "unknown"))
                    task.submissions.add(judge)
                    self._bump_judge(judge)

    def _bump_judge(self, judge: str) -> None:
        self._judge_counts[judge] = self._judge_counts.get(judge, 0) + 1

    def _spawn_answer_tasks(self, event_id: str, t: int, questions: Sequence[str]) -> None:
        """Once an item has human questions, each (item, system) pair
        becomes one answering task."""
        item = EvalItem(event_id=event_id, t=t)
        if not any(i == item for i in self.items):
            return
        step = self.corpus.timelines[event_id].step(t)
        backgrounds = {
            system: self.runs_by_system[system][event_id][t]["background"]
            for system in self.runs_by_system
        }
        human_texts = [
            b.text for b in step.backgrounds if b.annotator_id == self.human_annotator
        ]
        if human_texts:
            backgrounds[self.human_system] = human_texts[0]
        for system, background in sorted(backgrounds.items()):
            task_id = f"qa:{event_id}:{t}:{system}"
            if task_id in self.tasks:
                continue
            self.tasks[task_id] = AnnotationTask(
                task_id=task_id,
                task_type="qa_answers",
                event_id=event_id,
                t=t,
                payload={
                    "update": step.update_for(self.human_annotator).text,
                    "background": background,
                    "questions": list(questions),
                },
                system_id=system,
            )

    # -- assignment ---------------------------------------------------------

    def assign_task(self, task_type: str, judge: str) -> dict | None:
        if task_type not in TASK_TYPES:
            raise ServiceError(f"unknown task type {task_type!r}")
        if not judge:
            raise ServiceError("judge token required")
        limit = self.config.assignments.get(task_type, 1)
        with self._lock:
            if self._judge_counts.get(judge, 0) >= self.config.judge_task_cap:
                raise ServiceError(
                    f"judge {judge!r} reached the task cap "
                    f"({self.config.judge_task_cap})",
                    status=403,
                )
            # a reload re-issues the judge's open assignment
            for task_id in sorted(self.tasks):
                task = self.tasks[task_id]
                if (
                    task.task_type == task_type
                    and judge in task.assigned
                    and judge not in task.submissions
                ):
                    return task.public_payload()
            for task_id in sorted(self.tasks):
                task = self.tasks[task_id]
                if task.task_type != task_type:
                    continue
                if judge in task.submissions or judge in task.assigned:
                    continue
                active = len(task.submissions) + sum(
                    1 for j in task.assigned if j not in task.submissions
                )
                if active >= limit:
                    continue
                task.assigned[judge] = True
                return task.public_payload()
        return None

    # -- submissions ----------------------------------------------------------

    def _take_submission(self, task: AnnotationTask, judge: str) -> None:
        if judge in task.submissions:
            raise ConflictError(f"judge {judge!r} already submitted {task.task_id}")
        limit = self.config.assignments.get(task.task_type, 1)
        if len(task.submissions) >= limit:
            raise ConflictError(f"task {task.task_id} already has {limit} submissions")
        task.submissions.add(judge)
        task.assigned.pop(judge, None)
        self._bump_judge(judge)

    def submit_judgment(self, body: Mapping) -> dict:
        task = self._get_task(body, "bws_judgment")
        judge = str(body.get("judge_id", ""))
        if not judge:
            raise ServiceError("judge_id required")
        try:
            best_index = int(body["best_index"])
            worst_index = int(body["worst_index"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ServiceError(f"best_index/worst_index required: {exc}") from exc
        order = task.display_order
        if not (0 <= best_index < len(order) and 0 <= worst_index < len(order)):
            raise ServiceError("picked index out of range")
        elapsed_ms = int(body.get("elapsed_ms", 0))
        flags = []
        if elapsed_ms < self.config.too_fast_floor_ms:
            flags.append("too-fast")
        try:
            record = JudgmentRecord(
                event_id=task.event_id,
                t=task.t,
                judge_id=judge,
                display_order=order,
                best=order[best_index],
                worst=order[worst_index],
                justification=str(body.get("justification", "")),
                elapsed_ms=elapsed_ms,
                task_type="bws_judgment",
                flags=tuple(flags),
            )
        except BwsError as exc:
            raise ServiceError(str(exc)) from exc
        with self._lock:
            self._take_submission(task, judge)
            jsonl.append_record(self.judgments_path, record.to_record())
        return record.to_record()

    def submit_questions(self, body: Mapping) -> dict:
        task = self._get_task(body, "qa_questions")
        judge = str(body.get("judge_id", ""))
        if not judge:
            raise ServiceError("judge_id required")
        questions = body.get("questions")
        if not isinstance(questions, list) or len(questions) != QUESTION_COUNT:
            raise ServiceError(f"exactly {QUESTION_COUNT} questions required")
        if not all(str(q).strip() for q in questions):
            raise ServiceError("questions must be non-empty")
        question_set = BusQuestionSet(
            event_id=task.event_id,
            t=task.t,
            source="human",
            questions=tuple(str(q).strip() for q in questions),
        )
        record = dict(question_set.to_record(), judge_id=judge)
        with self._lock:
            self._take_submission(task, judge)
            jsonl.append_record(self.questions_path, record)
            self._spawn_answer_tasks(task.event_id, task.t, list(question_set.questions))
        return record

    def submit_answers(self, body: Mapping) -> dict:
        task = self._get_task(body, "qa_answers")
        judge = str(body.get("judge_id", ""))
        if not judge:
            raise ServiceError("judge_id required")
        answers = body.get("answers")
        if not isinstance(answers, list) or len(answers) != QUESTION_COUNT:
            raise ServiceError(f"exactly {QUESTION_COUNT} answers required")
        cleaned = []
        for i, answer in enumerate(answers):
            none_marked = bool(answer.get("none"))
            text = str(answer.get("text", "")).strip()
            if not none_marked and not text:
                raise ServiceError(f"answer {i + 1} must have text or the none mark")
            cleaned.append(
                {
                    "q": task.payload["questions"][i],
                    "text": "" if none_marked else text,
                    "answerable": not none_marked,
                    "pattern": "human-none" if none_marked else "none",
                }
            )
        record = {
            "event_id": task.event_id,
            "t": task.t,
            "system_id": task.system_id,
            "source": "human",
            "judge_id": judge,
            "answers": cleaned,
        }
        with self._lock:
            self._take_submission(task, judge)
            jsonl.append_record(self.answers_path, record)
        return record

    def _get_task(self, body: Mapping, expected_type: str) -> AnnotationTask:
        task_id = str(body.get("task_id", ""))
        task = self.tasks.get(task_id)
        if task is None:
            raise ServiceError(f"unknown task {task_id!r}", status=404)
        if task.task_type != expected_type:
            raise ServiceError(
                f"task {task_id!r} is {task.task_type}, not {expected_type}"
            )
        return task

    # -- progress ----------------------------------------------------------------

    def progress(self) -> dict:
        with self._lock:
            by_type: dict[str, dict[str, int]] = {}
            for task in self.tasks.values():
                limit = self.config.assignments.get(task.task_type, 1)
                stats = by_type.setdefault(
                    task.task_type, {"tasks": 0, "done": 0, "submissions": 0}
                )
                stats["tasks"] += 1
                stats["submissions"] += len(task.submissions)
                if len(task.submissions) >= limit:
                    stats["done"] += 1
            return {
                "types": by_type,
                "judges": dict(sorted(self._judge_counts.items())),
            }


# --- HTTP shell -------------------------------------------------------------

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".json": "application/json",
}


def make_handler(service: AnnotationService):
    ui_dir = service.config.ui_dir

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # keep test output quiet
            pass

        def _send_json(self, payload, status=200):
            body = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length) if length else b"{}"
            try:
                return json.loads(raw.decode("utf-8"))
            except json.JSONDecodeError as exc:
                raise ServiceError(f"invalid JSON body: {exc.msg}") from exc

        def do_GET(self):
            parsed = urlparse(self.path)
            try:
                if parsed.path == "/api/task":
                    query = parse_qs(parsed.query)
                    task_type = query.get("type", [""])[0]
                    judge = query.get("judge", [""])[0]
                    task = service.assign_task(task_type, judge)
                    self._send_json({"task": task})
                elif parsed.path == "/api/progress":
                    self._send_json(service.progress())
                else:
                    self._serve_static(parsed.path)
            except ServiceError as exc:
                self._send_json({"error": str(exc)}, status=exc.status)

        def do_POST(self):
            parsed = urlparse(self.path)
            routes = {
                "/api/judgment": service.submit_judgment,
                "/api/questions": service.submit_questions,
                "/api/answers": service.submit_answers,
            }
            handler = routes.get(parsed.path)
            if handler is None:
                self._send_json({"error": "not found"}, status=404)
                return
            try:
                record = handler(self._read_body())
                self._send_json({"ok": True, "record": record})
            except ServiceError as exc:
                self._send_json({"error": str(exc)}, status=exc.status)

        def _serve_static(self, path: str):
            if ui_dir is None:
                self._send_json({"error": "no UI bundle configured"}, status=404)
                return
            root = Path(ui_dir).resolve()
            name = path.lstrip("/") or "index.html"
            target = (root / name).resolve()
            if root not in target.parents and target != root:
                self._send_json({"error": "forbidden"}, status=403)
                return
            if target.is_dir():
                target = target / "index.html"
            if not target.is_file():
                self._send_json({"error": "not found"}, status=404)
                return
            body = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type",
                _CONTENT_TYPES.get(target.suffix, "application/octet-stream"),
            )
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler


def serve_annotation(service: AnnotationService, host: str = "127.0.0.1", port: int = 8765):
    """Run the blocking HTTP server; returns the server object when
    constructed with port 0 callers can read the bound port."""
    server = ThreadingHTTPServer((host, port), make_handler(service))
    return server
