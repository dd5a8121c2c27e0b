"""Translate intents or utterances into validated task graphs.

The structured path is the identity: an Intent's task_requests become the
graph verbatim.  Utterances go through a pluggable adapter; the shipped
rule-based adapter matches keywords against a configured table and chains the
hits in textual order.  An HTTP adapter can delegate planning to an external
completion endpoint; it is configuration-only and never exercised against a
live service by the test suite.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Protocol

from .errors import PlanningFailed, SchemaViolation, UnknownTaskType
from .gateway import ChatEntry, Intent
from .taskgraph import (
    TaskGraph,
    ValidationReport,
    build_graph,
    make_node,
    parse_graph,
    serialize_graph,
    validate_graph,
)

if TYPE_CHECKING:
    from .feedback import FeedbackReport

PREVIOUS_RESULT_PHRASES = ("previous result", "last output")

_UNKNOWN_TYPE_RE = re.compile(
    r"task '(?P<task_key>[^']*)': task_type '(?P<task_type>[^']*)' has no registered handler")


@dataclass(frozen=True)
class TaskTemplate:
    task_type: str
    params: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class KeywordTable:
    """keyword -> task template, plus a fallback map used when a produced
    task_type turns out to have no registered handler."""

    keywords: tuple[tuple[str, TaskTemplate], ...]
    fallbacks: tuple[tuple[str, str], ...] = ()

    @property
    def fallback_map(self) -> dict[str, str]:
        return dict(self.fallbacks)

    @staticmethod
    def from_dict(raw: dict) -> "KeywordTable":
        keywords = raw.get("keywords", raw)
        if not isinstance(keywords, dict) or not keywords:
            raise SchemaViolation("keyword table needs a non-empty 'keywords' map",
                                  field_path="keywords")
        entries = []
        for kw, template in sorted(keywords.items()):
            if isinstance(template, str):
                template = {"task_type": template}
            if not isinstance(template, dict) or "task_type" not in template:
                raise SchemaViolation(
                    f"keyword '{kw}' needs a task_type",
                    field_path=f"keywords.{kw}")
            params = template.get("params", {})
            entries.append((kw.lower(), TaskTemplate(
                task_type=str(template["task_type"]),
                params=tuple(sorted((str(k), str(v)) for k, v in params.items())),
            )))
        fallbacks = raw.get("fallbacks", {}) if isinstance(raw, dict) else {}
        return KeywordTable(
            keywords=tuple(entries),
            fallbacks=tuple(sorted((str(k), str(v)) for k, v in fallbacks.items())),
        )

    @staticmethod
    def load(path: Path | str) -> "KeywordTable":
        with open(path, encoding="utf-8") as fh:
            return KeywordTable.from_dict(json.load(fh))


@dataclass(frozen=True)
class PlanContext:
    """Everything an adapter may draw on for one planning call."""

    utterance: str
    chat_log: tuple[ChatEntry, ...] = ()
    run_id: str | None = None
    session_id: str | None = None
    last_output_name: str | None = None


class PlannerAdapter(Protocol):
    name: str

    def plan(self, context: PlanContext) -> TaskGraph: ...

    def revise(self, graph: TaskGraph, report: "FeedbackReport") -> TaskGraph: ...

    def accept_feedback(self, report: "FeedbackReport") -> None: ...


def _unknown_types_from_report(report: "FeedbackReport") -> list[tuple[str, str]]:
    """(task_key, task_type) pairs parsed from UnknownTaskType reasons."""
    pairs = []
    for reason in report.scores.reasons:
        if reason.code != "UnknownTaskType":
            continue
        match = _UNKNOWN_TYPE_RE.search(reason.message)
        if match:
            pairs.append((match.group("task_key"), match.group("task_type")))
    return pairs


def _report_is_clean(report: "FeedbackReport") -> bool:
    s = report.scores
    return s.planning == 1.0 and s.selection == 1.0 and s.execution == 1.0


class KeywordPlannerAdapter:
    """Deterministic rule-based planner.

    Keyword hits become tasks in order of appearance and are chained; the
    phrases "previous result" / "last output" attach the session's newest
    stored output to the root task.  Feedback naming an unknown task_type
    arms the fallback table for that session's next plan.
    """

    name = "keyword"

    def __init__(self, table: KeywordTable):
        self.table = table
        self.feedback_log: list["FeedbackReport"] = []
        self._run_sessions: dict[str, str] = {}
        self._session_retype: dict[str, dict[str, str]] = {}
        self._lock = threading.Lock()

    def plan(self, context: PlanContext) -> TaskGraph:
        if context.run_id and context.session_id:
            with self._lock:
                self._run_sessions[context.run_id] = context.session_id
        hits = self._match(context.utterance)
        if not hits:
            raise PlanningFailed(
                f"no keyword in table matched utterance: {context.utterance!r}")
        retype = {}
        if context.session_id:
            with self._lock:
                retype = dict(self._session_retype.get(context.session_id, {}))
        nodes = []
        previous_key: str | None = None
        wants_previous = any(
            phrase in context.utterance.lower() for phrase in PREVIOUS_RESULT_PHRASES)
        for position, (_, template) in enumerate(hits, start=1):
            task_type = retype.get(template.task_type, template.task_type)
            task_key = f"t{position}_{task_type}"
            input_data: tuple[str, ...] = ()
            if position == 1 and wants_previous and context.last_output_name:
                input_data = (context.last_output_name,)
            nodes.append(make_node(
                task_key=task_key,
                task_type=task_type,
                depends_on=(previous_key,) if previous_key else (),
                input_data=input_data,
                params=dict(template.params),
            ))
            previous_key = task_key
        return build_graph(nodes)

    def revise(self, graph: TaskGraph, report: "FeedbackReport") -> TaskGraph:
        fallback = self.table.fallback_map
        retyped = {key: fallback[old_type]
                   for key, old_type in _unknown_types_from_report(report)
                   if old_type in fallback}
        if not retyped:
            return graph
        nodes = [
            make_node(
                task_key=n.task_key,
                task_type=retyped.get(n.task_key, n.task_type),
                depends_on=n.depends_on,
                input_data=n.input_data,
                params=n.params_dict,
            )
            for n in graph.nodes
        ]
        return build_graph(nodes)

    def accept_feedback(self, report: "FeedbackReport") -> None:
        fallback = self.table.fallback_map
        with self._lock:
            self.feedback_log.append(report)
            session_id = self._run_sessions.get(report.run_id)
            if session_id is None:
                return
            retype = self._session_retype.setdefault(session_id, {})
            for _, old_type in _unknown_types_from_report(report):
                if old_type in fallback:
                    retype[old_type] = fallback[old_type]

    def _match(self, utterance: str) -> list[tuple[str, TaskTemplate]]:
        lowered = utterance.lower()
        found: list[tuple[int, str, TaskTemplate]] = []
        for keyword, template in self.table.keywords:
            for match in re.finditer(
                    r"\b" + re.escape(keyword) + r"\b", lowered):
                found.append((match.start(), keyword, template))
        found.sort(key=lambda item: (item[0], item[1]))
        return [(kw, template) for _, kw, template in found]


PLANNING_INSTRUCTIONS = (
    "Decompose the request into tasks. Respond with JSON of the form "
    '{"nodes": [{"task_key": str, "task_type": str, "depends_on": [str], '
    '"input_data": [str], "params": {str: str}}]} and nothing else. '
    "Use only the listed task types. Dependencies must form a directed "
    "acyclic graph."
)


class HttpPlannerAdapter:
    """Delegates planning to an external HTTP completion endpoint.

    The endpoint receives the instruction template, the utterance, the chat
    log, and any feedback summaries seen for the session, and must answer
    with a serialized task-graph document under the "graph" key.
    """

    name = "http"

    def __init__(self, endpoint: str, task_types: list[str] | None = None,
                 timeout_s: float = 30.0):
        import httpx

        self.endpoint = endpoint
        self.task_types = list(task_types or [])
        self.timeout_s = timeout_s
        self.feedback_log: list["FeedbackReport"] = []
        self._run_sessions: dict[str, str] = {}
        self._session_context: dict[str, list[str]] = {}
        self._client = httpx.Client(timeout=timeout_s)

    def plan(self, context: PlanContext) -> TaskGraph:
        if context.run_id and context.session_id:
            self._run_sessions[context.run_id] = context.session_id
        payload = {
            "instructions": PLANNING_INSTRUCTIONS,
            "task_types": self.task_types,
            "utterance": context.utterance,
            "chat_log": [
                {"role": e.role, "text": e.text} for e in context.chat_log],
            "last_output_name": context.last_output_name,
            "feedback": self._session_context.get(context.session_id or "", []),
        }
        return self._request(payload)

    def revise(self, graph: TaskGraph, report: "FeedbackReport") -> TaskGraph:
        payload = {
            "instructions": PLANNING_INSTRUCTIONS,
            "task_types": self.task_types,
            "graph": json.loads(serialize_graph(graph)),
            "report": {
                "run_id": report.run_id,
                "summary": report.formatted_summary,
                "reasons": [r.to_dict() for r in report.scores.reasons],
            },
        }
        return self._request(payload)

    def accept_feedback(self, report: "FeedbackReport") -> None:
        self.feedback_log.append(report)
        session_id = self._run_sessions.get(report.run_id)
        if session_id is not None:
            self._session_context.setdefault(session_id, []).append(
                report.formatted_summary)

    def _request(self, payload: dict) -> TaskGraph:
        try:
            response = self._client.post(self.endpoint, json=payload)
            response.raise_for_status()
            body = response.json()
        except Exception as exc:
            raise PlanningFailed(
                f"planner endpoint {self.endpoint} failed: {exc}") from exc
        graph_doc = body.get("graph") if isinstance(body, dict) else None
        if graph_doc is None:
            raise PlanningFailed("planner endpoint returned no 'graph' document")
        if isinstance(graph_doc, dict):
            graph_doc = json.dumps(graph_doc)
        try:
            return parse_graph(graph_doc)
        except SchemaViolation as exc:
            raise PlanningFailed(
                f"planner endpoint returned an invalid graph: {exc.message}") from exc


@dataclass
class Planner:
    """Plans, validates, and replans task graphs.

    ``registered_types`` supplies the task-type vocabulary (normally the
    model registry's task types); ``max_replans`` bounds how often one graph
    lineage may be revised before PlanningFailed.
    """

    adapter: PlannerAdapter
    registered_types: "set[str] | None" = None
    types_provider: "object | None" = None  # callable returning set[str]
    max_replans: int = 2
    _replans: dict[str, int] = field(default_factory=dict)
    _lineage: dict[str, str] = field(default_factory=dict)

    def vocabulary(self) -> set[str] | None:
        if self.types_provider is not None:
            return set(self.types_provider())  # type: ignore[operator]
        return self.registered_types

    def plan(self, source: Intent | str,
             chat_log: tuple[ChatEntry, ...] = (), *,
             run_id: str | None = None,
             session_id: str | None = None,
             last_output_name: str | None = None) -> TaskGraph:
        if isinstance(source, Intent):
            graph = build_graph([
                make_node(
                    task_key=req.task_key,
                    task_type=req.task_type,
                    depends_on=req.depends_on,
                    input_data=req.input_data,
                )
                for req in source.task_requests
            ])
        else:
            context = PlanContext(
                utterance=source,
                chat_log=tuple(chat_log),
                run_id=run_id,
                session_id=session_id,
                last_output_name=last_output_name,
            )
            graph = self.adapter.plan(context)
        self._require_valid(graph)
        return graph

    def validate(self, graph: TaskGraph) -> ValidationReport:
        return validate_graph(graph, self.vocabulary())

    def replan(self, graph: TaskGraph, report: "FeedbackReport") -> TaskGraph:
        if _report_is_clean(report):
            return graph
        root = self._lineage.get(graph.graph_id, graph.graph_id)
        attempts = self._replans.get(root, 0)
        if attempts >= self.max_replans:
            raise PlanningFailed(
                f"re-plan limit of {self.max_replans} reached for graph "
                f"lineage {root}")
        self._replans[root] = attempts + 1
        revised = self.adapter.revise(graph, report)
        self._lineage[revised.graph_id] = root
        self._require_valid(revised)
        return revised

    def _require_valid(self, graph: TaskGraph) -> None:
        report = self.validate(graph)
        if report.valid:
            return
        for finding in report.findings:
            if finding.code == "UnknownTaskType":
                node = graph.node(finding.task_key)
                raise UnknownTaskType(
                    finding.message, task_key=finding.task_key,
                    task_type=node.task_type)
        details = "; ".join(f.message for f in report.findings)
        raise PlanningFailed(f"graph failed validation: {details}")
