"""Multi-input gateway: strict JSON intent documents and chat sessions.

Operator intents arrive as JSON text and are validated field by field against
a versioned schema (``schema_version`` "1", unknown fields rejected).  End-user
utterances are not interpreted here; they are appended to a session chat log
and handed to the planner verbatim.
"""

from __future__ import annotations

import json
import math
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    ConstraintViolation,
    MalformedDocument,
    SchemaViolation,
    UnknownSession,
)

SCHEMA_VERSION = "1"

_TOP_LEVEL_KEYS = {
    "schema_version",
    "intent_id",
    "goal",
    "task_requests",
    "latency_budget_ms",
    "utilization_budget",
    "combination_count",
}
_TASK_REQUEST_KEYS = {"task_key", "task_type", "depends_on", "input_data"}


@dataclass(frozen=True)
class TaskRequest:
    """One requested task inside an intent."""

    task_key: str
    task_type: str
    depends_on: tuple[str, ...] = ()
    input_data: tuple[str, ...] = ()


@dataclass(frozen=True)
class Intent:
    """A validated request: what to do, under which budgets, how many
    model combinations to try."""

    intent_id: str
    goal: str
    task_requests: tuple[TaskRequest, ...]
    latency_budget_ms: float  # math.inf encodes "no budget" (utterance path)
    utilization_budget: float
    combination_count: int

    def to_document(self) -> dict:
        """Canonical dict form; key order is the documented serialization
        order.  An infinite latency budget is encoded by omitting the key."""
        doc: dict = {
            "schema_version": SCHEMA_VERSION,
            "intent_id": self.intent_id,
            "goal": self.goal,
            "task_requests": [
                {
                    "task_key": t.task_key,
                    "task_type": t.task_type,
                    "depends_on": list(t.depends_on),
                    "input_data": list(t.input_data),
                }
                for t in self.task_requests
            ],
        }
        if not math.isinf(self.latency_budget_ms):
            doc["latency_budget_ms"] = self.latency_budget_ms
        doc["utilization_budget"] = self.utilization_budget
        doc["combination_count"] = self.combination_count
        return doc


def serialize_intent(intent: Intent) -> str:
    """Canonical JSON text for an intent (stable key order, compact)."""
    return json.dumps(intent.to_document(), separators=(", ", ": "))


def _type_name(value) -> str:
    return type(value).__name__


def _require_string(value, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaViolation(
            f"expected a string, got {_type_name(value)}", field_path=path)
    return value


def _require_number(value, path: str) -> float:
    # bool is an int subclass; reject it explicitly.
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation(
            f"expected a number, got {_type_name(value)}", field_path=path)
    if not math.isfinite(value):
        raise SchemaViolation("expected a finite number", field_path=path)
    return float(value)


def _require_string_list(value, path: str) -> list[str]:
    if not isinstance(value, list):
        raise SchemaViolation(
            f"expected a list, got {_type_name(value)}", field_path=path)
    out = []
    for i, item in enumerate(value):
        out.append(_require_string(item, f"{path}[{i}]"))
    return out


def _parse_task_request(raw, path: str) -> TaskRequest:
    if not isinstance(raw, dict):
        raise SchemaViolation(
            f"expected an object, got {_type_name(raw)}", field_path=path)
    unknown = set(raw) - _TASK_REQUEST_KEYS
    if unknown:
        raise SchemaViolation(
            f"unknown field '{sorted(unknown)[0]}'",
            field_path=f"{path}.{sorted(unknown)[0]}")
    for required in ("task_key", "task_type"):
        if required not in raw:
            raise SchemaViolation(
                f"missing required field '{required}'",
                field_path=f"{path}.{required}")
    task_key = _require_string(raw["task_key"], f"{path}.task_key")
    if not task_key:
        raise ConstraintViolation(
            "task_key must be non-empty", field_path=f"{path}.task_key")
    task_type = _require_string(raw["task_type"], f"{path}.task_type")
    if not task_type:
        raise ConstraintViolation(
            "task_type must be non-empty", field_path=f"{path}.task_type")
    depends_on = _require_string_list(
        raw.get("depends_on", []), f"{path}.depends_on")
    input_data = _require_string_list(
        raw.get("input_data", []), f"{path}.input_data")
    # Canonical order for dependency sets; duplicates collapse.
    depends_on = sorted(set(depends_on))
    return TaskRequest(
        task_key=task_key,
        task_type=task_type,
        depends_on=tuple(depends_on),
        input_data=tuple(input_data),
    )


def parse_intent(document: str) -> Intent:
    """Parse and fully validate a JSON intent document.

    Total over all text inputs: the result is an Intent or exactly one of
    MalformedDocument, SchemaViolation, ConstraintViolation.
    """
    if isinstance(document, (bytes, bytearray)):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocument(f"not valid UTF-8: {exc}") from exc
    if not isinstance(document, str):
        raise MalformedDocument(
            f"expected JSON text, got {_type_name(document)}")
    try:
        raw = json.loads(document)
    except (json.JSONDecodeError, RecursionError, ValueError) as exc:
        raise MalformedDocument(f"not parseable as JSON: {exc}") from exc

    if not isinstance(raw, dict):
        raise SchemaViolation(
            f"top level must be an object, got {_type_name(raw)}",
            field_path="$")

    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        first = sorted(unknown)[0]
        raise SchemaViolation(f"unknown field '{first}'", field_path=first)
    for required in ("schema_version", "task_requests", "latency_budget_ms",
                     "utilization_budget", "combination_count"):
        if required not in raw:
            raise SchemaViolation(
                f"missing required field '{required}'", field_path=required)

    version = _require_string(raw["schema_version"], "schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaViolation(
            f"unsupported schema_version '{version}' (expected '{SCHEMA_VERSION}')",
            field_path="schema_version")

    if "intent_id" in raw:
        intent_id = _require_string(raw["intent_id"], "intent_id")
        if not intent_id:
            raise ConstraintViolation(
                "intent_id must be non-empty when given", field_path="intent_id")
    else:
        intent_id = "i-" + uuid.uuid4().hex[:12]

    goal = _require_string(raw.get("goal", ""), "goal")

    if not isinstance(raw["task_requests"], list):
        raise SchemaViolation(
            f"expected a list, got {_type_name(raw['task_requests'])}",
            field_path="task_requests")
    requests = [
        _parse_task_request(item, f"task_requests[{i}]")
        for i, item in enumerate(raw["task_requests"])
    ]
    if not requests:
        raise ConstraintViolation(
            "task_requests must be non-empty", field_path="task_requests")

    seen: dict[str, int] = {}
    for i, req in enumerate(requests):
        if req.task_key in seen:
            raise ConstraintViolation(
                f"duplicate task_key '{req.task_key}' (first at "
                f"task_requests[{seen[req.task_key]}])",
                field_path=f"task_requests[{i}].task_key")
        seen[req.task_key] = i
    keys = set(seen)
    for i, req in enumerate(requests):
        for j, dep in enumerate(req.depends_on):
            if dep == req.task_key:
                raise ConstraintViolation(
                    f"task '{req.task_key}' depends on itself",
                    field_path=f"task_requests[{i}].depends_on")
            if dep not in keys:
                raise ConstraintViolation(
                    f"depends_on references unknown task_key '{dep}'",
                    field_path=f"task_requests[{i}].depends_on[{j}]")

    latency = _require_number(raw["latency_budget_ms"], "latency_budget_ms")
    if latency < 0:
        raise ConstraintViolation(
            "latency_budget_ms must be >= 0", field_path="latency_budget_ms")
    utilization = _require_number(raw["utilization_budget"], "utilization_budget")
    if not 0.0 <= utilization <= 1.0:
        raise ConstraintViolation(
            "utilization_budget must be within [0, 1]",
            field_path="utilization_budget")
    count = raw["combination_count"]
    if isinstance(count, bool) or not isinstance(count, int):
        raise SchemaViolation(
            f"expected an integer, got {_type_name(count)}",
            field_path="combination_count")
    if count < 1:
        raise ConstraintViolation(
            "combination_count must be >= 1", field_path="combination_count")

    return Intent(
        intent_id=intent_id,
        goal=goal,
        task_requests=tuple(requests),
        latency_budget_ms=latency,
        utilization_budget=utilization,
        combination_count=count,
    )


def default_utterance_intent(intent_id: str, goal: str) -> Intent:
    """Budget-permissive intent shell for the natural-language path: no
    latency cap, full utilization allowed, one combination."""
    return Intent(
        intent_id=intent_id,
        goal=goal,
        task_requests=(),
        latency_budget_ms=math.inf,
        utilization_budget=1.0,
        combination_count=1,
    )


# -- sessions -----------------------------------------------------------------

@dataclass(frozen=True)
class ChatEntry:
    role: str  # "user" | "system"
    text: str
    timestamp: float


@dataclass
class Session:
    session_id: str
    chat_log: list[ChatEntry] = field(default_factory=list)
    last_run_id: str | None = None


class IntentGateway:
    """Session store with append-only chat logs.

    Appends within one session are serialized; an optional journal file
    records every append so logs can be replayed.
    """

    def __init__(self, session_journal: Path | None = None):
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._journal_path = Path(session_journal) if session_journal else None
        if self._journal_path is not None:
            self._journal_path.parent.mkdir(parents=True, exist_ok=True)
            self._replay_journal()

    def open_session(self) -> str:
        session_id = "s-" + uuid.uuid4().hex[:12]
        with self._registry_lock:
            self._sessions[session_id] = Session(session_id=session_id)
            self._locks[session_id] = threading.Lock()
        self._write_journal({"op": "open", "session_id": session_id})
        return session_id

    def get_session(self, session_id: str) -> Session:
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session '{session_id}'")
        return session

    def list_sessions(self) -> list[Session]:
        with self._registry_lock:
            return list(self._sessions.values())

    def append_utterance(self, session_id: str, text: str) -> Session:
        return self._append(session_id, "user", text)

    def append_system(self, session_id: str, text: str) -> Session:
        return self._append(session_id, "system", text)

    def set_last_run(self, session_id: str, run_id: str) -> None:
        session = self.get_session(session_id)
        with self._locks[session_id]:
            session.last_run_id = run_id
        self._write_journal({
            "op": "last_run", "session_id": session_id, "run_id": run_id})

    def _append(self, session_id: str, role: str, text: str) -> Session:
        session = self.get_session(session_id)
        with self._locks[session_id]:
            now = time.time()
            if session.chat_log:
                now = max(now, session.chat_log[-1].timestamp)
            entry = ChatEntry(role=role, text=text, timestamp=now)
            session.chat_log.append(entry)
        self._write_journal({
            "op": "append",
            "session_id": session_id,
            "role": role,
            "text": text,
            "timestamp": entry.timestamp,
        })
        return session

    def _write_journal(self, record: dict) -> None:
        if self._journal_path is None:
            return
        with self._registry_lock:
            with self._journal_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, separators=(",", ":")) + "\n")

    def _replay_journal(self) -> None:
        if not self._journal_path.exists():
            return
        with self._journal_path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                sid = record["session_id"]
                if record["op"] == "open":
                    self._sessions[sid] = Session(session_id=sid)
                    self._locks[sid] = threading.Lock()
                elif record["op"] == "append" and sid in self._sessions:
                    self._sessions[sid].chat_log.append(ChatEntry(
                        role=record["role"],
                        text=record["text"],
                        timestamp=record["timestamp"],
                    ))
                elif record["op"] == "last_run" and sid in self._sessions:
                    self._sessions[sid].last_run_id = record["run_id"]
