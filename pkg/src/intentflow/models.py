"""Model-card registry and combination selection.

A card records a model's name, the task type it can serve, two static
network-performance metrics (latency, resource utilization), and the
modality tags it consumes and produces.  Selection assigns one card to every
graph node such that adjacent cards are pairwise IO-compatible and the
aggregated metrics fit the intent's budgets, then ranks the feasible
assignments ascending by (critical-path latency, peak utilization,
lexicographic assignment).
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    CyclicGraph,
    DuplicateModelName,
    InvalidCard,
    NoFeasibleCombination,
)
from .gateway import Intent
from .taskgraph import TaskGraph, TaskNode, execution_stages


@dataclass(frozen=True)
class ModelCard:
    model_name: str
    task_type: str
    latency_ms: float
    resource_utilization: float
    consumes: frozenset[str] = frozenset()
    produces: frozenset[str] = frozenset()
    library_name: str | None = None

    def to_document(self) -> dict:
        doc = {
            "model_name": self.model_name,
            "task_type": self.task_type,
            "latency_ms": self.latency_ms,
            "resource_utilization": self.resource_utilization,
            "consumes": sorted(self.consumes),
            "produces": sorted(self.produces),
        }
        if self.library_name is not None:
            doc["library_name"] = self.library_name
        return doc

    @staticmethod
    def from_document(raw: dict) -> "ModelCard":
        if not isinstance(raw, dict):
            raise InvalidCard("model card must be a JSON object")
        missing = {"model_name", "task_type", "latency_ms",
                   "resource_utilization", "consumes", "produces"} - set(raw)
        if missing:
            raise InvalidCard(f"model card missing fields: {sorted(missing)}")
        try:
            card = ModelCard(
                model_name=str(raw["model_name"]),
                task_type=str(raw["task_type"]),
                latency_ms=float(raw["latency_ms"]),
                resource_utilization=float(raw["resource_utilization"]),
                consumes=frozenset(str(t) for t in raw["consumes"]),
                produces=frozenset(str(t) for t in raw["produces"]),
                library_name=(str(raw["library_name"])
                              if raw.get("library_name") is not None else None),
            )
        except (TypeError, ValueError) as exc:
            raise InvalidCard(f"model card has ill-typed fields: {exc}") from exc
        validate_card(card)
        return card


def validate_card(card: ModelCard) -> None:
    if not card.model_name:
        raise InvalidCard("model_name must be non-empty")
    if not card.task_type:
        raise InvalidCard(f"card '{card.model_name}': task_type must be non-empty")
    if not card.latency_ms >= 0:
        raise InvalidCard(f"card '{card.model_name}': latency_ms must be >= 0")
    if not 0.0 <= card.resource_utilization <= 1.0:
        raise InvalidCard(
            f"card '{card.model_name}': resource_utilization must be in [0, 1]")


@dataclass(frozen=True)
class AggregateMetrics:
    critical_path_latency_ms: float
    peak_utilization: float


@dataclass(frozen=True)
class ModelCombination:
    """A total task -> model assignment with its aggregated metrics."""

    assignment: tuple[tuple[str, str], ...]  # (task_key, model_name), key-sorted
    critical_path_latency_ms: float
    peak_utilization: float
    rank: int

    @property
    def assignment_map(self) -> dict[str, str]:
        return dict(self.assignment)

    def to_document(self) -> dict:
        return {
            "rank": self.rank,
            "assignment": {k: v for k, v in self.assignment},
            "critical_path_latency_ms": self.critical_path_latency_ms,
            "peak_utilization": self.peak_utilization,
        }

    @staticmethod
    def from_document(raw: dict) -> "ModelCombination":
        return ModelCombination(
            assignment=tuple(sorted(raw["assignment"].items())),
            critical_path_latency_ms=float(raw["critical_path_latency_ms"]),
            peak_utilization=float(raw["peak_utilization"]),
            rank=int(raw["rank"]),
        )


def pairwise_compatible(producer: ModelCard, consumer: ModelCard) -> bool:
    """True iff the producer emits at least one modality the consumer accepts."""
    return bool(producer.produces & consumer.consumes)


def aggregate_metrics(graph: TaskGraph, assignment: dict[str, str],
                      cards: dict[str, ModelCard]) -> AggregateMetrics:
    """Critical-path latency (max root-to-sink path sum) and peak stage
    utilization for a total assignment.  ``cards`` maps model_name -> card."""
    latencies = {n.task_key: cards[assignment[n.task_key]].latency_ms
                 for n in graph.nodes}
    utils = {n.task_key: cards[assignment[n.task_key]].resource_utilization
             for n in graph.nodes}
    return AggregateMetrics(
        critical_path_latency_ms=critical_path_value(graph, latencies),
        peak_utilization=peak_stage_value(graph, utils),
    )


def critical_path_value(graph: TaskGraph, weights: dict[str, float]) -> float:
    """Longest root-to-sink path under per-node weights (raises CyclicGraph)."""
    keys = {n.task_key for n in graph.nodes}
    deps = {n.task_key: [d for d in n.depends_on if d in keys]
            for n in graph.nodes}
    memo: dict[str, float] = {}
    visiting: set[str] = set()

    def longest_to(key: str) -> float:
        if key in memo:
            return memo[key]
        if key in visiting:
            raise CyclicGraph(f"dependency cycle through task '{key}'")
        visiting.add(key)
        base = max((longest_to(d) for d in deps[key]), default=0.0)
        visiting.discard(key)
        memo[key] = base + weights[key]
        return memo[key]

    return max((longest_to(k) for k in sorted(deps)), default=0.0)


def peak_stage_value(graph: TaskGraph, weights: dict[str, float]) -> float:
    """Max over execution stages of the summed weights of co-staged tasks."""
    stages = execution_stages(graph)
    return max((sum(weights[k] for k in stage) for stage in stages), default=0.0)


class ModelLibrary:
    """Registry of model cards; reads are lock-free snapshots, writes
    serialized."""

    def __init__(self):
        self._cards: dict[str, ModelCard] = {}
        self._lock = threading.Lock()

    def register_model(self, card: ModelCard) -> None:
        validate_card(card)
        with self._lock:
            if card.model_name in self._cards:
                raise DuplicateModelName(
                    f"model '{card.model_name}' is already registered")
            self._cards[card.model_name] = card

    def get(self, model_name: str) -> ModelCard:
        card = self._cards.get(model_name)
        if card is None:
            raise InvalidCard(f"no model named '{model_name}' in the registry")
        return card

    def list_models(self, task_type: str | None = None) -> list[ModelCard]:
        cards = [c for c in self._cards.values()
                 if task_type is None or c.task_type == task_type]
        return sorted(cards, key=lambda c: (c.latency_ms, c.model_name))

    def task_types(self) -> set[str]:
        return {c.task_type for c in self._cards.values()}

    def candidates_for_task(self, node: TaskNode) -> list[ModelCard]:
        return self.list_models(task_type=node.task_type)

    def load_directory(self, path: Path | str) -> int:
        """Register every *.json card under ``path``; returns the count."""
        count = 0
        for card_file in sorted(Path(path).glob("*.json")):
            with card_file.open(encoding="utf-8") as fh:
                self.register_model(ModelCard.from_document(json.load(fh)))
            count += 1
        return count

    def select_combinations(self, graph: TaskGraph, intent: Intent,
                            k: int | None = None) -> list[ModelCombination]:
        """Up to k feasible combinations, rank-ordered.

        Feasible means: every task gets a type-matching card, every edge is
        pairwise compatible, and the aggregates fit the intent's budgets.
        The output equals brute-force enumeration in set and order; the DFS
        below only prunes branches no completion could rescue.
        """
        if k is None:
            k = intent.combination_count
        keys = sorted(n.task_key for n in graph.nodes)
        nodes = {n.task_key: n for n in graph.nodes}
        candidates = {key: self.candidates_for_task(nodes[key]) for key in keys}
        if not keys or any(not candidates[key] for key in keys):
            raise NoFeasibleCombination(
                "no model combination satisfies the intent requirements")

        edges: list[tuple[str, str]] = []
        for node in graph.nodes:
            for dep in node.depends_on:
                if dep in nodes:
                    edges.append((dep, node.task_key))

        feasible: list[tuple[float, float, tuple[str, ...], dict[str, str]]] = []
        assignment: dict[str, str] = {}

        def compatible_so_far(key: str, card: ModelCard) -> bool:
            for producer, consumer in edges:
                if consumer == key and producer in assignment:
                    if not pairwise_compatible(self._cards[assignment[producer]], card):
                        return False
                if producer == key and consumer in assignment:
                    if not pairwise_compatible(card, self._cards[assignment[consumer]]):
                        return False
            return True

        def search(index: int) -> None:
            if index == len(keys):
                metrics = aggregate_metrics(graph, assignment, self._cards)
                if (metrics.critical_path_latency_ms <= intent.latency_budget_ms
                        and metrics.peak_utilization <= intent.utilization_budget):
                    feasible.append((
                        metrics.critical_path_latency_ms,
                        metrics.peak_utilization,
                        tuple(assignment[key] for key in keys),
                        dict(assignment),
                    ))
                return
            key = keys[index]
            for card in candidates[key]:
                if not compatible_so_far(key, card):
                    continue
                assignment[key] = card.model_name
                search(index + 1)
                del assignment[key]

        search(0)
        if not feasible:
            raise NoFeasibleCombination(
                "no model combination satisfies the intent requirements")
        feasible.sort(key=lambda item: (item[0], item[1], item[2]))
        return [
            ModelCombination(
                assignment=tuple(sorted(entry[3].items())),
                critical_path_latency_ms=entry[0],
                peak_utilization=entry[1],
                rank=position,
            )
            for position, entry in enumerate(feasible[:k], start=1)
        ]
