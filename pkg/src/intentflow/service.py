"""Run lifecycle orchestration: configuration, the five-stage pipeline, and
journal-backed recovery.

Each accepted submission becomes a run that advances planning -> selecting ->
executing -> reporting -> done (failed is reachable from any phase).  Every
transition and artifact is journaled per run, so a restarted service lists
all prior runs and a replayed journal regenerates the identical summary.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .datastore import DataCard, DataStore
from .errors import (
    ConstraintViolation,
    IntentFlowError,
    PlanningFailed,
    UnknownRun,
    UnknownTaskType,
)
from .executor import ExecutionRecord, execute_all
from .feedback import (
    FeedbackEmitter,
    FeedbackReport,
    StageScores,
    build_final_report,
    build_outcomes,
    score_stages,
    summarize,
)
from .gateway import Intent, IntentGateway, default_utterance_intent, parse_intent
from .journal import Journal, read_journal
from .models import ModelCard, ModelCombination, ModelLibrary
from .planner import HttpPlannerAdapter, KeywordPlannerAdapter, KeywordTable, Planner
from .taskgraph import (
    Finding,
    TaskGraph,
    ValidationReport,
    execution_stages,
    parse_graph,
    serialize_graph,
)

PHASES = ("planning", "selecting", "executing", "reporting", "done", "failed")
_PHASE_INDEX = {name: i for i, name in enumerate(PHASES[:-1])}


@dataclass
class Config:
    model_cards_dir: Path
    keyword_table: Path
    data_dir: Path
    journal_dir: Path
    max_replans: int = 2
    pool_size: int = 4
    clock: str = "simulated"
    wall_scale: float = 0.001
    external_planner_url: str | None = None
    listen_addr: str = "127.0.0.1:8350"
    max_concurrent_runs: int = 4

    ENV_PREFIX = "SAI_"

    @staticmethod
    def load(path: Path | str | None = None, overrides: dict | None = None) -> "Config":
        """Read the JSON config file, then apply SAI_* environment overrides
        and explicit overrides, in that order."""
        raw: dict = {}
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        env_map = {
            "SAI_MODEL_CARDS_DIR": "model_cards_dir",
            "SAI_KEYWORD_TABLE": "keyword_table",
            "SAI_DATA_DIR": "data_dir",
            "SAI_JOURNAL_DIR": "journal_dir",
            "SAI_MAX_REPLANS": "max_replans",
            "SAI_POOL_SIZE": "pool_size",
            "SAI_CLOCK_MODE": "clock",
            "SAI_WALL_SCALE": "wall_scale",
            "SAI_EXTERNAL_PLANNER_URL": "external_planner_url",
            "SAI_LISTEN_ADDR": "listen_addr",
            "SAI_MAX_CONCURRENT_RUNS": "max_concurrent_runs",
        }
        for env_name, key in env_map.items():
            if env_name in os.environ:
                raw[key] = os.environ[env_name]
        raw.update(overrides or {})

        missing = [k for k in ("model_cards_dir", "keyword_table", "data_dir",
                               "journal_dir") if k not in raw]
        if missing:
            raise ConstraintViolation(
                f"config missing required keys: {missing}",
                field_path=missing[0])
        config = Config(
            model_cards_dir=Path(raw["model_cards_dir"]),
            keyword_table=Path(raw["keyword_table"]),
            data_dir=Path(raw["data_dir"]),
            journal_dir=Path(raw["journal_dir"]),
            max_replans=int(raw.get("max_replans", 2)),
            pool_size=int(raw.get("pool_size", 4)),
            clock=str(raw.get("clock", "simulated")),
            wall_scale=float(raw.get("wall_scale", 0.001)),
            external_planner_url=raw.get("external_planner_url"),
            listen_addr=str(raw.get("listen_addr", "127.0.0.1:8350")),
            max_concurrent_runs=int(raw.get("max_concurrent_runs", 4)),
        )
        config.validate()
        return config

    def validate(self) -> None:
        if self.max_replans < 0:
            raise ConstraintViolation("max_replans must be >= 0",
                                      field_path="max_replans")
        if self.clock not in ("simulated", "wall"):
            raise ConstraintViolation("clock must be 'simulated' or 'wall'",
                                      field_path="clock")
        # Output directories are created; input paths must already exist.
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.journal_dir.mkdir(parents=True, exist_ok=True)
        for key in ("model_cards_dir", "keyword_table"):
            if not getattr(self, key).exists():
                raise ConstraintViolation(
                    f"configured path does not exist: {getattr(self, key)}",
                    field_path=key)


@dataclass
class RunState:
    run_id: str
    phase: str = "planning"
    source: str = "intent"  # "intent" | "utterance"
    session_id: str | None = None
    created_at: float = field(default_factory=time.time)
    intent_doc: dict | None = None
    utterance: str | None = None
    graph: TaskGraph | None = None
    validation: ValidationReport | None = None
    combinations: list[ModelCombination] = field(default_factory=list)
    records: list[ExecutionRecord] = field(default_factory=list)
    scores: StageScores | None = None
    summary: str | None = None
    final_report_doc: dict | None = None
    feedback_doc: dict | None = None
    error: dict | None = None
    last_output_name: str | None = None
    journal: Journal | None = None
    terminal: threading.Event = field(default_factory=threading.Event)

    def advance(self, phase: str) -> None:
        """Forward-only transition; 'failed' is allowed from anywhere."""
        if phase != "failed":
            if _PHASE_INDEX[phase] <= _PHASE_INDEX.get(self.phase, -1):
                raise RuntimeError(
                    f"illegal phase transition {self.phase} -> {phase}")
        self.phase = phase
        if self.journal is not None:
            self.journal.append("phase", detail={"phase": phase})
        if phase in ("done", "failed"):
            self.terminal.set()

    def to_api_dict(self) -> dict:
        stages = None
        if self.graph is not None:
            try:
                stages = execution_stages(self.graph)
            except IntentFlowError:
                stages = None
        return {
            "run_id": self.run_id,
            "phase": self.phase,
            "source": self.source,
            "session_id": self.session_id,
            "created_at": self.created_at,
            "intent": self.intent_doc,
            "utterance": self.utterance,
            "graph": (json.loads(serialize_graph(self.graph))
                      if self.graph is not None else None),
            "stages": stages,
            "validation": (self.validation.to_dict()
                           if self.validation is not None else None),
            "combinations": [c.to_document() for c in self.combinations],
            "records": [r.to_document() for r in self.records],
            "scores": (self.scores.to_document()
                       if self.scores is not None else None),
            "summary": self.summary,
            "final_report": self.final_report_doc,
            "error": self.error,
            "last_output_name": self.last_output_name,
        }


class OrchestratorService:
    """Owns the pipeline modules, the run registry, and persistence."""

    def __init__(self, config: Config):
        self.config = config
        self.gateway = IntentGateway(
            session_journal=config.journal_dir / "sessions.jsonl")
        self.registry = ModelLibrary()
        self.registry.load_directory(config.model_cards_dir)
        self.store = DataStore(config.data_dir)
        table = KeywordTable.load(config.keyword_table)
        if config.external_planner_url:
            self.adapter = HttpPlannerAdapter(
                config.external_planner_url,
                task_types=sorted(self.registry.task_types()))
        else:
            self.adapter = KeywordPlannerAdapter(table)
        self.planner = Planner(
            adapter=self.adapter,
            types_provider=self.registry.task_types,
            max_replans=config.max_replans,
        )
        self.emitter = FeedbackEmitter()
        self._runs: dict[str, RunState] = {}
        self._intent_ids: set[str] = set()
        self._lock = threading.Lock()
        self._session_plan_locks: dict[str, threading.Lock] = {}
        self._pool = ThreadPoolExecutor(
            max_workers=max(1, config.max_concurrent_runs))
        self._recover()

    def close(self) -> None:
        self._pool.shutdown(wait=True)

    # -- submissions ----------------------------------------------------------------

    def submit_intent(self, document: str) -> str:
        intent = parse_intent(document)
        with self._lock:
            if intent.intent_id in self._intent_ids:
                raise ConstraintViolation(
                    f"intent_id '{intent.intent_id}' was already submitted",
                    field_path="intent_id")
            self._intent_ids.add(intent.intent_id)
        run = self._create_run(source="intent")
        run.intent_doc = intent.to_document()
        run.journal.append("intent", detail={"document": run.intent_doc})
        run.journal.append("phase", detail={"phase": "planning"})
        self._pool.submit(self._pipeline, run, intent, None, None)
        return run.run_id

    def submit_utterance(self, session_id: str, text: str) -> str:
        session = self.gateway.append_utterance(session_id, text)
        run = self._create_run(source="utterance", session_id=session_id)
        run.utterance = text
        intent = default_utterance_intent("i-" + run.run_id, goal=text)
        run.intent_doc = intent.to_document()
        run.journal.append("utterance", detail={
            "text": text, "session_id": session_id})
        run.journal.append("intent", detail={"document": run.intent_doc})
        run.journal.append("phase", detail={"phase": "planning"})
        self._pool.submit(self._pipeline, run, intent, text, session)
        return run.run_id

    def _create_run(self, source: str, session_id: str | None = None) -> RunState:
        run_id = "r-" + uuid.uuid4().hex[:12]
        journal = Journal(run_id, self.config.journal_dir / f"{run_id}.jsonl")
        run = RunState(run_id=run_id, source=source, session_id=session_id,
                       journal=journal)
        journal.append("run_created", detail={
            "source": source, "session_id": session_id})
        with self._lock:
            self._runs[run_id] = run
            if session_id is not None:
                self._session_plan_locks.setdefault(session_id, threading.Lock())
        return run

    # -- queries ---------------------------------------------------------------------

    def get_run(self, run_id: str) -> RunState:
        run = self._runs.get(run_id)
        if run is None:
            raise UnknownRun(f"no run '{run_id}'")
        return run

    def list_runs(self) -> list[RunState]:
        with self._lock:
            return sorted(self._runs.values(), key=lambda r: r.created_at)

    def wait(self, run_id: str, timeout: float = 30.0) -> RunState:
        run = self.get_run(run_id)
        run.terminal.wait(timeout)
        return run

    # -- pipeline ----------------------------------------------------------------------

    def _pipeline(self, run: RunState, intent: Intent,
                  utterance: str | None, session) -> None:
        try:
            if utterance is None:
                graph = self.planner.plan(intent, run_id=run.run_id)
            else:
                lock = self._session_plan_locks[session.session_id]
                with lock:
                    graph = self.planner.plan(
                        utterance,
                        chat_log=tuple(session.chat_log),
                        run_id=run.run_id,
                        session_id=session.session_id,
                        last_output_name=self._session_last_output(session),
                    )
            run.graph = graph
            run.validation = self.planner.validate(graph)
            run.journal.append("graph", detail={
                "graph": json.loads(serialize_graph(graph))})
            run.journal.append("validation", detail=run.validation.to_dict())

            run.advance("selecting")
            run.combinations = self.registry.select_combinations(
                graph, intent, intent.combination_count)
            run.journal.append("combinations", detail={
                "combinations": [c.to_document() for c in run.combinations]})

            run.advance("executing")
            run.records = execute_all(
                graph, run.combinations, intent,
                registry=self.registry, store=self.store,
                journal=run.journal, run_id=run.run_id,
                pool_size=self.config.pool_size,
                clock=self.config.clock, wall_scale=self.config.wall_scale)

            run.advance("reporting")
            self._report(run, intent, session)
            run.advance("done")
        except IntentFlowError as exc:
            run.error = exc.to_dict()
            run.journal.append("error", detail=exc.to_dict())
            if run.validation is None:
                run.validation = _synthesize_validation(exc)
                run.journal.append("validation", detail=run.validation.to_dict())
            try:
                if _PHASE_INDEX.get(run.phase, 0) < _PHASE_INDEX["reporting"]:
                    run.advance("reporting")
                self._report(run, intent, session)
            except Exception:
                pass
            run.advance("failed")
        except Exception as exc:  # defensive: no run may hang
            run.error = {"error_kind": "InternalError", "field_path": None,
                         "message": str(exc)}
            run.journal.append("error", detail=run.error)
            run.advance("failed")

    def _report(self, run: RunState, intent: Intent, session) -> None:
        run.summary = summarize(run.run_id, run.graph, run.combinations,
                                run.records)
        run.scores = score_stages(run.validation, run.combinations,
                                  run.records, intent)
        report = FeedbackReport(
            run_id=run.run_id,
            formatted_summary=run.summary,
            scores=run.scores,
            outcomes=build_outcomes(run.records),
        )
        final = build_final_report(run.run_id, run.combinations, run.records)
        run.final_report_doc = final.to_document()
        run.feedback_doc = report.to_document()
        run.last_output_name = self._newest_output(run)

        run.journal.append("summary", detail={"text": run.summary})
        run.journal.append("scores", detail=run.scores.to_document())
        run.journal.append("final_report", detail=run.final_report_doc)
        run.journal.append("last_output", detail={"name": run.last_output_name})

        journal_dir = self.config.journal_dir
        (journal_dir / f"{run.run_id}.summary.txt").write_text(
            run.summary, encoding="utf-8")
        (journal_dir / f"{run.run_id}.final.json").write_text(
            json.dumps(run.final_report_doc, indent=2), encoding="utf-8")
        (journal_dir / f"{run.run_id}.feedback.json").write_text(
            json.dumps(run.feedback_doc, indent=2), encoding="utf-8")

        self.emitter.emit(report, self.adapter)
        run.journal.append("feedback_delivered", detail={})

        if session is not None:
            self.gateway.append_system(session.session_id, run.summary)
            self.gateway.set_last_run(session.session_id, run.run_id)

    def _session_last_output(self, session) -> str | None:
        if session.last_run_id is None:
            return None
        run = self._runs.get(session.last_run_id)
        return run.last_output_name if run else None

    def _newest_output(self, run: RunState) -> str | None:
        """Newest data name produced by the run: in the best complete record
        (else the last record), the ok task deepest in stage order."""
        if not run.records or run.graph is None:
            return None
        complete = [r for r in run.records if r.wall_status == "complete"]
        record = min(complete, key=lambda r: r.rank) if complete else run.records[-1]
        stages = execution_stages(run.graph)
        stage_of = {key: i for i, stage in enumerate(stages) for key in stage}
        best: tuple[int, str] | None = None
        for key, result in record.results:
            if result.status == "ok" and result.output_name:
                candidate = (stage_of.get(key, -1), key)
                if best is None or candidate > best:
                    best = candidate
        if best is None:
            return None
        return record.results_map[best[1]].output_name

    # -- registries ------------------------------------------------------------------

    def register_model(self, card: ModelCard) -> None:
        self.registry.register_model(card)

    def register_data(self, card: DataCard, payload: bytes) -> None:
        self.store.register_data(card, payload)

    # -- recovery ---------------------------------------------------------------------

    def _recover(self) -> None:
        for path in sorted(self.config.journal_dir.glob("r-*.jsonl")):
            try:
                run = replay_run(path)
            except Exception:
                continue
            with self._lock:
                self._runs[run.run_id] = run
                if run.intent_doc and run.source == "intent":
                    self._intent_ids.add(run.intent_doc.get("intent_id", ""))


def _synthesize_validation(exc: IntentFlowError) -> ValidationReport:
    if isinstance(exc, UnknownTaskType):
        return ValidationReport(shape="", findings=[Finding(
            code="UnknownTaskType", task_key=exc.task_key,
            message=exc.message)])
    if isinstance(exc, PlanningFailed):
        return ValidationReport(shape="", findings=[Finding(
            code="PlanningFailed", message=exc.message)])
    return ValidationReport(shape="", findings=[Finding(
        code=exc.error_kind, message=exc.message)])


def replay_run(path: Path | str) -> RunState:
    """Rebuild a RunState purely from its journal file."""
    events = read_journal(path)
    if not events:
        raise ValueError(f"empty journal: {path}")
    run = RunState(run_id=events[0]["run_id"])
    run.terminal.set()
    for event in events:
        kind = event["event"]
        detail = event.get("detail", {})
        if kind == "run_created":
            run.source = detail.get("source", "intent")
            run.session_id = detail.get("session_id")
            run.created_at = event.get("timestamp", run.created_at)
        elif kind == "intent":
            run.intent_doc = detail.get("document")
        elif kind == "utterance":
            run.utterance = detail.get("text")
        elif kind == "graph":
            run.graph = parse_graph(json.dumps(detail["graph"]))
        elif kind == "validation":
            run.validation = ValidationReport(
                shape=detail.get("shape", ""),
                findings=[Finding(code=f["code"], task_key=f.get("task_key"),
                                  message=f["message"])
                          for f in detail.get("findings", [])])
        elif kind == "combinations":
            run.combinations = [ModelCombination.from_document(c)
                                for c in detail.get("combinations", [])]
        elif kind == "record":
            run.records.append(ExecutionRecord.from_document(detail["record"]))
        elif kind == "scores":
            run.scores = StageScores.from_document(detail)
        elif kind == "summary":
            run.summary = detail.get("text")
        elif kind == "final_report":
            run.final_report_doc = detail
        elif kind == "last_output":
            run.last_output_name = detail.get("name")
        elif kind == "error":
            run.error = detail
        elif kind == "phase":
            run.phase = detail["phase"]
    return run
