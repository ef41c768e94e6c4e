"""Line-delimited JSON persistence shared by all pipeline stages.

Files are UTF-8 with LF line endings, one record per line. Writers emit
keys in sorted order so that identical data always produces identical
bytes (several commands promise bit-reproducible output).
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Iterable, Iterator


class RecordError(ValueError):
    """A malformed record, reported with file and line number."""

    def __init__(self, path: str | os.PathLike, line_no: int, reason: str):
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{self.path}:{line_no}: {reason}")


def dumps(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def read_records(path: str | os.PathLike) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (line_no, record) pairs; blank lines are skipped."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(path, line_no, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise RecordError(path, line_no, "record is not a JSON object")
            yield line_no, record


def load_records(path: str | os.PathLike) -> list[dict[str, Any]]:
    return [record for _, record in read_records(path)]


def write_records(path: str | os.PathLike, records: Iterable[dict[str, Any]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(dumps(record) + "\n")


def append_record(path: str | os.PathLike, record: dict[str, Any]) -> None:
    """Append one record; never rewrites existing lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(record) + "\n")
