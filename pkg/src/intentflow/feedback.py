"""Final output and feedback: summaries, per-stage scores, delivery.

The summary is plain structured text with stable section markers so that a
replay from the run journal reproduces it byte for byte.  Scores follow a
fixed fractional rubric: planning is all-or-nothing on graph validation,
selection is the fraction of requested combinations found, execution is the
fraction of ok task-runs; every sub-1 score carries at least one reason.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

from .errors import CyclicGraph, InconsistentRun
from .executor import ExecutionRecord
from .gateway import Intent
from .models import ModelCombination
from .taskgraph import TaskGraph, ValidationReport, execution_stages

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Reason:
    stage: str  # "planning" | "selection" | "execution"
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"stage": self.stage, "code": self.code, "message": self.message}


@dataclass(frozen=True)
class StageScores:
    planning: float
    selection: float
    execution: float
    reasons: tuple[Reason, ...] = ()

    def to_document(self) -> dict:
        return {
            "planning": self.planning,
            "selection": self.selection,
            "execution": self.execution,
            "reasons": [r.to_dict() for r in self.reasons],
        }

    @staticmethod
    def from_document(raw: dict) -> "StageScores":
        return StageScores(
            planning=float(raw["planning"]),
            selection=float(raw["selection"]),
            execution=float(raw["execution"]),
            reasons=tuple(Reason(r["stage"], r["code"], r["message"])
                          for r in raw["reasons"]),
        )


@dataclass(frozen=True)
class OutcomeRow:
    rank: int
    wall_status: str
    ok_tasks: int
    total_tasks: int

    def to_dict(self) -> dict:
        return {"rank": self.rank, "wall_status": self.wall_status,
                "ok_tasks": self.ok_tasks, "total_tasks": self.total_tasks}


@dataclass(frozen=True)
class FeedbackReport:
    run_id: str
    formatted_summary: str
    scores: StageScores
    outcomes: tuple[OutcomeRow, ...] = ()

    def to_document(self) -> dict:
        return {
            "run_id": self.run_id,
            "formatted_summary": self.formatted_summary,
            "scores": self.scores.to_document(),
            "outcomes": [o.to_dict() for o in self.outcomes],
        }


@dataclass(frozen=True)
class FinalEntry:
    rank: int
    assignment: tuple[tuple[str, str], ...]
    planned_critical_path_ms: float
    planned_peak_utilization: float
    observed_critical_path_ms: float | None
    observed_peak_utilization: float | None
    status: str

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "assignment": {k: v for k, v in self.assignment},
            "planned": {
                "critical_path_latency_ms": self.planned_critical_path_ms,
                "peak_utilization": self.planned_peak_utilization,
            },
            "observed": None if self.observed_critical_path_ms is None else {
                "critical_path_latency_ms": self.observed_critical_path_ms,
                "peak_utilization": self.observed_peak_utilization,
            },
            "status": self.status,
        }


@dataclass(frozen=True)
class FinalReport:
    run_id: str
    combinations: tuple[FinalEntry, ...]  # ascending rank
    best_rank: int | None

    def to_document(self) -> dict:
        return {
            "run_id": self.run_id,
            "combinations": [e.to_dict() for e in self.combinations],
            "best_rank": self.best_rank,
        }


def _num(value: float) -> str:
    return f"{value:g}"


def _task_order(graph: TaskGraph) -> list[str]:
    try:
        stages = execution_stages(graph)
    except CyclicGraph:
        return sorted(n.task_key for n in graph.nodes)
    return [key for stage in stages for key in stage]


def summarize(run_id: str, graph: TaskGraph | None,
              combinations: list[ModelCombination],
              records: list[ExecutionRecord]) -> str:
    """Three-section structured summary: planned tasks, selected
    combinations, per-combination inference results."""
    for record in records:
        if record.run_id != run_id:
            raise InconsistentRun(
                f"record for run '{record.run_id}' mixed into run '{run_id}'")
    ranks = {c.rank for c in combinations}
    for record in records:
        if record.rank not in ranks:
            raise InconsistentRun(
                f"record rank {record.rank} has no matching combination")
    if graph is not None:
        node_keys = set(graph.task_keys)
        for combination in combinations:
            if set(combination.assignment_map) != node_keys:
                raise InconsistentRun(
                    f"combination rank {combination.rank} does not cover the "
                    f"run's task graph")

    lines = [f"== run {run_id} =="]
    lines.append("== tasks ==")
    if graph is not None:
        for key in _task_order(graph):
            node = graph.node(key)
            deps = ", ".join(node.depends_on)
            inputs = ", ".join(node.input_data)
            lines.append(
                f"task={key} type={node.task_type} "
                f"depends_on=[{deps}] inputs=[{inputs}]")
    lines.append("== combinations ==")
    for combination in sorted(combinations, key=lambda c: c.rank):
        pairs = " ".join(f"{k}={v}" for k, v in combination.assignment)
        lines.append(
            f"rank={combination.rank} "
            f"critical_path_ms={_num(combination.critical_path_latency_ms)} "
            f"peak_utilization={_num(combination.peak_utilization)} "
            f"assignment[{pairs}]")
    lines.append("== results ==")
    for record in sorted(records, key=lambda r: r.rank):
        lines.append(
            f"rank={record.rank} wall_status={record.wall_status} "
            f"critical_path_ms={_num(record.observed_critical_path_ms)} "
            f"peak_utilization={_num(record.observed_peak_utilization)}")
        results_map = record.results_map
        row_order = (_task_order(graph) if graph is not None
                     else [key for key, _ in record.results])
        for key in row_order:
            if key not in results_map:
                continue
            result = results_map[key]
            if result.status == "ok":
                lines.append(
                    f"rank={record.rank} task={key} status=ok "
                    f"latency_ms={_num(result.simulated_latency_ms)} "
                    f"output={result.output_name}")
            else:
                code = result.error[0] if result.error else "Unknown"
                lines.append(
                    f"rank={record.rank} task={key} status=failed error={code}")
    return "\n".join(lines) + "\n"


def score_stages(validation: ValidationReport | None,
                 combinations: list[ModelCombination],
                 records: list[ExecutionRecord],
                 intent: Intent) -> StageScores:
    """Apply the scoring rubric; every stage scoring below 1 gains at least
    one reason tagged with that stage."""
    reasons: list[Reason] = []

    if validation is not None and validation.valid:
        planning = 1.0
    else:
        planning = 0.0
        if validation is None:
            reasons.append(Reason("planning", "PlanningFailed",
                                  "no task graph was produced"))
        else:
            seen = set()
            for finding in validation.findings:
                key = (finding.code, finding.message)
                if key not in seen:
                    seen.add(key)
                    reasons.append(Reason("planning", finding.code,
                                          finding.message))

    requested = max(1, intent.combination_count)
    selection = min(1.0, len(combinations) / requested)
    if not combinations:
        selection = 0.0
        reasons.append(Reason("selection", "NoFeasibleCombination",
                              "no feasible model combination was found"))
    elif selection < 1.0:
        reasons.append(Reason(
            "selection", "InsufficientCombinations",
            f"found {len(combinations)} of {requested} requested combinations"))

    total = sum(len(record.results) for record in records)
    ok = sum(record.ok_count for record in records)
    if total == 0:
        execution = 0.0
        reasons.append(Reason("execution", "NoExecutions",
                              "no task runs were recorded"))
    else:
        execution = ok / total
        counts: dict[str, int] = {}
        for record in records:
            for _, result in record.results:
                if result.error is not None:
                    counts[result.error[0]] = counts.get(result.error[0], 0) + 1
        for code in sorted(counts):
            reasons.append(Reason(
                "execution", code,
                f"{counts[code]} task run(s) failed with {code}"))

    return StageScores(planning=planning, selection=selection,
                       execution=execution, reasons=tuple(reasons))


def build_outcomes(records: list[ExecutionRecord]) -> tuple[OutcomeRow, ...]:
    return tuple(
        OutcomeRow(rank=r.rank, wall_status=r.wall_status,
                   ok_tasks=r.ok_count, total_tasks=len(r.results))
        for r in sorted(records, key=lambda r: r.rank))


def build_final_report(run_id: str, combinations: list[ModelCombination],
                       records: list[ExecutionRecord]) -> FinalReport:
    by_rank = {record.rank: record for record in records}
    entries = []
    best_rank: int | None = None
    for combination in sorted(combinations, key=lambda c: c.rank):
        record = by_rank.get(combination.rank)
        entries.append(FinalEntry(
            rank=combination.rank,
            assignment=combination.assignment,
            planned_critical_path_ms=combination.critical_path_latency_ms,
            planned_peak_utilization=combination.peak_utilization,
            observed_critical_path_ms=(
                record.observed_critical_path_ms if record else None),
            observed_peak_utilization=(
                record.observed_peak_utilization if record else None),
            status=record.wall_status if record else "not_run",
        ))
        if (best_rank is None and record is not None
                and record.wall_status == "complete"):
            best_rank = combination.rank
    return FinalReport(run_id=run_id, combinations=tuple(entries),
                       best_rank=best_rank)


class FeedbackEmitter:
    """Delivers each run's report to the planner adapter exactly once."""

    def __init__(self):
        self._delivered: set[str] = set()
        self._lock = threading.Lock()

    def emit(self, report: FeedbackReport, adapter) -> bool:
        with self._lock:
            if report.run_id in self._delivered:
                logger.info("feedback for run %s already delivered; skipping",
                            report.run_id)
                return False
            self._delivered.add(report.run_id)
        try:
            adapter.accept_feedback(report)
        except Exception:
            logger.exception("feedback delivery failed for run %s",
                             report.run_id)
        return True
