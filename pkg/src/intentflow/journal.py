"""Append-only run journal.

One line-delimited JSON file per run; each event carries exactly
{run_id, event, task_key?, timestamp, detail}.  Line order is the monotone
event sequence every replay and ordering check relies on.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path


class Journal:
    """Single-writer event log for one run.

    With a path, events are flushed line by line to disk; without one the
    journal is purely in-memory (handy for unit-level executor runs).
    """

    def __init__(self, run_id: str, path: Path | str | None = None):
        self.run_id = run_id
        self.path = Path(path) if path is not None else None
        self._events: list[dict] = []
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, event: str, detail: dict | None = None,
               task_key: str | None = None) -> dict:
        record: dict = {"run_id": self.run_id, "event": event}
        if task_key is not None:
            record["task_key"] = task_key
        record["timestamp"] = time.time()
        record["detail"] = detail or {}
        with self._lock:
            self._events.append(record)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, separators=(",", ":")) + "\n")
        return record

    def events(self) -> list[dict]:
        with self._lock:
            return list(self._events)


def read_journal(path: Path | str) -> list[dict]:
    """Load a run's events in append order."""
    events = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            events.append(json.loads(line))
    return events
