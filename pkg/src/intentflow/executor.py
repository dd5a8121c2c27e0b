"""Stage-parallel task-graph execution over simulated model executors.

Tasks dispatch as soon as every dependency finished ok (re-checked after each
completion); co-staged tasks run concurrently on a worker pool unless their
stage's summed utilization exceeds the intent budget, in which case that
stage is serialized by ascending task_key.  Failures never raise: the record
carries a terminal status for every node, with downstream tasks of a failure
marked UpstreamFailed.

Time is simulated by default: each task occupies the logical interval
[max(dependency ends), +latency) and the observed critical path is exact.
Wall mode additionally sleeps latency * wall_scale for demo realism.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, replace
from typing import Protocol

from .datastore import DataStore, IOEnvelope
from .errors import DataNotFound, ModalityMismatch
from .gateway import Intent
from .journal import Journal
from .models import (
    ModelCard,
    ModelCombination,
    critical_path_value,
    peak_stage_value,
)
from .taskgraph import TaskGraph, execution_stages


@dataclass(frozen=True)
class TaskResult:
    status: str  # "ok" | "failed"
    output_name: str | None = None
    simulated_latency_ms: float = 0.0
    error: tuple[str, str] | None = None  # (code, message)

    def to_document(self) -> dict:
        doc: dict = {"status": self.status,
                     "simulated_latency_ms": self.simulated_latency_ms}
        if self.output_name is not None:
            doc["output"] = self.output_name
        if self.error is not None:
            doc["error"] = {"code": self.error[0], "message": self.error[1]}
        return doc

    @staticmethod
    def from_document(raw: dict) -> "TaskResult":
        error = raw.get("error")
        return TaskResult(
            status=raw["status"],
            output_name=raw.get("output"),
            simulated_latency_ms=float(raw["simulated_latency_ms"]),
            error=(error["code"], error["message"]) if error else None,
        )


@dataclass(frozen=True)
class ExecutionRecord:
    run_id: str
    rank: int
    results: tuple[tuple[str, TaskResult], ...]  # task_key-sorted
    observed_critical_path_ms: float
    observed_peak_utilization: float
    wall_status: str  # "complete" | "aborted"

    @property
    def results_map(self) -> dict[str, TaskResult]:
        return dict(self.results)

    @property
    def ok_count(self) -> int:
        return sum(1 for _, r in self.results if r.status == "ok")

    def to_document(self) -> dict:
        return {
            "run_id": self.run_id,
            "rank": self.rank,
            "wall_status": self.wall_status,
            "observed_critical_path_ms": self.observed_critical_path_ms,
            "observed_peak_utilization": self.observed_peak_utilization,
            "results": {key: result.to_document() for key, result in self.results},
        }

    @staticmethod
    def from_document(raw: dict) -> "ExecutionRecord":
        return ExecutionRecord(
            run_id=raw["run_id"],
            rank=int(raw["rank"]),
            results=tuple(sorted(
                (key, TaskResult.from_document(doc))
                for key, doc in raw["results"].items())),
            observed_critical_path_ms=float(raw["observed_critical_path_ms"]),
            observed_peak_utilization=float(raw["observed_peak_utilization"]),
            wall_status=raw["wall_status"],
        )


class ModelExecutor(Protocol):
    model_name: str

    def run(self, envelopes: list[IOEnvelope],
            params: dict[str, str]) -> IOEnvelope: ...


def simulated_run(card: ModelCard, envelopes: list[IOEnvelope],
                  params: dict[str, str]) -> IOEnvelope:
    """Deterministic inference stand-in.

    Inputs must all be consumable by the card (runtime re-check of the
    pairwise match).  The output payload is a content hash over the sorted
    input payload hashes, the model name, and the params; the trace extends
    the concatenated input traces with this model.
    """
    for envelope in envelopes:
        if envelope.modality not in card.consumes:
            raise ModalityMismatch(
                f"model '{card.model_name}' does not consume modality "
                f"'{envelope.modality}' of input '{envelope.data_name}'")
    if not card.produces:
        raise ModalityMismatch(
            f"model '{card.model_name}' produces no modality")
    input_hashes = sorted(
        hashlib.sha256(e.payload).hexdigest() for e in envelopes)
    params_canon = json.dumps(dict(sorted(params.items())),
                              separators=(",", ":"))
    digest = hashlib.sha256("|".join(
        input_hashes + [card.model_name, params_canon]).encode("utf-8"))
    trace: tuple[str, ...] = ()
    for envelope in envelopes:
        trace += envelope.trace
    trace += (card.model_name,)
    return IOEnvelope(
        data_name="",
        modality=min(card.produces),
        payload=digest.hexdigest().encode("ascii"),
        trace=trace,
    )


class SimulatedModelExecutor:
    """ModelExecutor backed by a card's simulated inference."""

    def __init__(self, card: ModelCard):
        self.card = card
        self.model_name = card.model_name

    def run(self, envelopes: list[IOEnvelope],
            params: dict[str, str]) -> IOEnvelope:
        return simulated_run(self.card, envelopes, params)


def dependency_recheck(graph: TaskGraph, statuses: dict[str, str],
                       store: DataStore | None = None) -> list[str]:
    """Unstarted tasks whose dependencies are all ok and whose declared
    inputs resolve, sorted by task_key.  Recomputed after every completion."""
    keys = {n.task_key for n in graph.nodes}
    ready = []
    for node in graph.nodes:
        if statuses.get(node.task_key, "pending") != "pending":
            continue
        deps = [d for d in node.depends_on if d in keys]
        if any(statuses.get(d) != "ok" for d in deps):
            continue
        if store is not None and any(
                not store.exists(name) for name in node.input_data):
            continue
        ready.append(node.task_key)
    return sorted(ready)


def execute(graph: TaskGraph, combination: ModelCombination, intent: Intent, *,
            registry, store: DataStore, journal: Journal | None = None,
            run_id: str = "run", storage_run_id: str | None = None,
            pool_size: int = 4, clock: str = "simulated",
            wall_scale: float = 0.001) -> ExecutionRecord:
    """Run one combination over the graph and return its record.

    Raises DataNotFound only during pre-flight (a declared input_data name
    does not resolve); every runtime failure lands in the record instead.
    """
    engine = _Engine(graph, combination, intent, registry=registry,
                     store=store, journal=journal or Journal(run_id),
                     run_id=run_id,
                     storage_run_id=storage_run_id or run_id,
                     pool_size=pool_size, clock=clock, wall_scale=wall_scale)
    return engine.run()


def execute_all(graph: TaskGraph, combinations: list[ModelCombination],
                intent: Intent, *, registry, store: DataStore,
                journal: Journal | None = None, run_id: str = "run",
                pool_size: int = 4, clock: str = "simulated",
                wall_scale: float = 0.001) -> list[ExecutionRecord]:
    """One record per combination, in rank order.  Stored outputs are
    namespaced "<run_id>.r<rank>" so independent combinations never collide."""
    journal = journal or Journal(run_id)
    records = []
    for combination in sorted(combinations, key=lambda c: c.rank):
        records.append(execute(
            graph, combination, intent, registry=registry, store=store,
            journal=journal, run_id=run_id,
            storage_run_id=f"{run_id}.r{combination.rank}",
            pool_size=pool_size, clock=clock, wall_scale=wall_scale))
    return records


class _Engine:
    """Event-driven dispatcher for a single combination."""

    def __init__(self, graph, combination, intent, *, registry, store,
                 journal, run_id, storage_run_id, pool_size, clock, wall_scale):
        self.graph = graph
        self.combination = combination
        self.intent = intent
        self.store = store
        self.journal = journal
        self.run_id = run_id
        self.storage_run_id = storage_run_id
        self.pool_size = max(1, int(pool_size))
        self.clock = clock
        self.wall_scale = wall_scale

        self.nodes = {n.task_key: n for n in graph.nodes}
        self.cards: dict[str, ModelCard] = {
            key: registry.get(combination.assignment_map[key])
            for key in self.nodes
        }
        self.stages = execution_stages(graph)
        self.stage_of = {key: i for i, stage in enumerate(self.stages)
                         for key in stage}
        budget = intent.utilization_budget
        self.serialized_stage = {
            i: sum(self.cards[k].resource_utilization for k in stage) > budget
            for i, stage in enumerate(self.stages)
        }
        self.statuses: dict[str, str] = {key: "pending" for key in self.nodes}
        self.results: dict[str, TaskResult] = {}
        self.envelopes: dict[str, IOEnvelope] = {}
        self.sim_start: dict[str, float] = {}
        self.sim_end: dict[str, float] = {}
        self.serial_clock: dict[int, float] = {}
        self.state_lock = threading.Lock()

    # -- pre-flight --------------------------------------------------------------

    def _preflight(self) -> None:
        for node in self.graph.nodes:
            for name in node.input_data:
                if not self.store.exists(name):
                    raise DataNotFound(
                        f"task '{node.task_key}' declares input '{name}' "
                        f"which does not resolve")

    # -- dispatch loop -------------------------------------------------------------

    def run(self) -> ExecutionRecord:
        self._preflight()
        futures: dict[Future, str] = {}
        with ThreadPoolExecutor(max_workers=self.pool_size) as pool:
            while True:
                for key in self._eligible():
                    self._start(key)
                    futures[pool.submit(self._work, key)] = key
                if not futures:
                    if any(s == "pending" for s in self.statuses.values()):
                        raise RuntimeError(
                            "scheduler stalled with pending tasks")
                    break
                done, _ = wait(futures, return_when=FIRST_COMPLETED)
                finished = sorted(
                    done, key=lambda f: (self.stage_of[futures[f]], futures[f]))
                for future in finished:
                    key = futures.pop(future)
                    envelope, error = future.result()
                    if error is None:
                        self._complete_ok(key, envelope)
                    else:
                        self._complete_failed(key, error)
        return self._build_record()

    def _eligible(self) -> list[str]:
        ready = dependency_recheck(self.graph, self.statuses, self.store)
        out = []
        for key in ready:
            stage = self.stage_of[key]
            if self.serialized_stage[stage]:
                mates = self.stages[stage]
                if any(self.statuses[m] == "running" for m in mates):
                    continue
                if any(m < key and self.statuses[m] == "pending" for m in mates):
                    continue
            out.append(key)
        return sorted(out, key=lambda k: (self.stage_of[k], k))

    def _start(self, key: str) -> None:
        node = self.nodes[key]
        dep_end = max((self.sim_end[d] for d in node.depends_on
                       if d in self.sim_end), default=0.0)
        start = dep_end
        stage = self.stage_of[key]
        if self.serialized_stage[stage]:
            start = max(start, self.serial_clock.get(stage, 0.0))
        self.sim_start[key] = start
        self.statuses[key] = "running"
        self.journal.append("task_started", task_key=key, detail={
            "rank": self.combination.rank,
            "model": self.cards[key].model_name,
            "sim_start_ms": start,
        })

    def _work(self, key: str) -> tuple[IOEnvelope | None, tuple[str, str] | None]:
        node = self.nodes[key]
        card = self.cards[key]
        try:
            inputs = [self.store.resolve(name) for name in node.input_data]
            with self.state_lock:
                inputs += [self.envelopes[d] for d in node.depends_on
                           if d in self.envelopes]
            envelope = simulated_run(card, inputs, node.params_dict)
            if self.clock == "wall" and card.latency_ms > 0:
                time.sleep(card.latency_ms * self.wall_scale / 1000.0)
            return envelope, None
        except ModalityMismatch as exc:
            return None, ("ModalityMismatch", exc.message)
        except DataNotFound as exc:
            return None, ("DataNotFound", exc.message)

    def _complete_ok(self, key: str, envelope: IOEnvelope) -> None:
        card = self.cards[key]
        output_name = self.store.store_result(
            envelope, run_id=self.storage_run_id, task_key=key)
        stored = replace(envelope, data_name=output_name)
        end = self.sim_start[key] + card.latency_ms
        with self.state_lock:
            self.envelopes[key] = stored
            self.sim_end[key] = end
            stage = self.stage_of[key]
            self.serial_clock[stage] = max(self.serial_clock.get(stage, 0.0), end)
            self.statuses[key] = "ok"
            self.results[key] = TaskResult(
                status="ok", output_name=output_name,
                simulated_latency_ms=card.latency_ms)
        self.journal.append("task_ok", task_key=key, detail={
            "rank": self.combination.rank,
            "output": output_name,
            "simulated_latency_ms": card.latency_ms,
            "sim_end_ms": end,
        })

    def _complete_failed(self, key: str, error: tuple[str, str]) -> None:
        with self.state_lock:
            self.statuses[key] = "failed"
            self.results[key] = TaskResult(status="failed", error=error)
        self.journal.append("task_failed", task_key=key, detail={
            "rank": self.combination.rank,
            "error": {"code": error[0], "message": error[1]},
        })
        self._cascade_failure(key)

    def _cascade_failure(self, origin: str) -> None:
        dependents = self.graph.dependents()
        doomed: list[str] = []
        frontier = [origin]
        while frontier:
            current = frontier.pop()
            for child in dependents.get(current, []):
                if self.statuses.get(child) == "pending" and child not in doomed:
                    doomed.append(child)
                    frontier.append(child)
        for key in sorted(doomed, key=lambda k: (self.stage_of[k], k)):
            error = ("UpstreamFailed",
                     f"task '{key}' skipped: upstream task failed")
            with self.state_lock:
                self.statuses[key] = "failed"
                self.results[key] = TaskResult(status="failed", error=error)
            self.journal.append("task_failed", task_key=key, detail={
                "rank": self.combination.rank,
                "error": {"code": error[0], "message": error[1]},
            })

    # -- record ---------------------------------------------------------------------

    def _build_record(self) -> ExecutionRecord:
        latencies = {key: self.results[key].simulated_latency_ms
                     for key in self.nodes}
        utils = {key: (self.cards[key].resource_utilization
                       if self.results[key].status == "ok" else 0.0)
                 for key in self.nodes}
        all_ok = all(r.status == "ok" for r in self.results.values())
        record = ExecutionRecord(
            run_id=self.run_id,
            rank=self.combination.rank,
            results=tuple(sorted(self.results.items())),
            observed_critical_path_ms=critical_path_value(self.graph, latencies),
            observed_peak_utilization=peak_stage_value(self.graph, utils),
            wall_status="complete" if all_ok else "aborted",
        )
        self.journal.append("record", detail={"record": record.to_document()})
        return record
