"""Task graphs: typed nodes plus dependency edges.

Shapes are derived, never asserted: a one-node graph is ``single``, a single
dependency path is ``chain``, at most one dependency per node is ``tree``,
anything else is ``dag``.  Execution stages follow longest-path layering, so
stage *i* holds exactly the nodes whose dependencies all finished in stages
below *i*; nodes inside one stage are mutually independent and run in
parallel.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .errors import CyclicGraph, SchemaViolation

SHAPES = ("single", "chain", "tree", "dag")


@dataclass(frozen=True)
class TaskNode:
    task_key: str
    task_type: str
    depends_on: tuple[str, ...] = ()
    input_data: tuple[str, ...] = ()
    params: tuple[tuple[str, str], ...] = ()

    @property
    def params_dict(self) -> dict[str, str]:
        return dict(self.params)


@dataclass(frozen=True)
class TaskGraph:
    graph_id: str
    nodes: tuple[TaskNode, ...]
    shape: str

    def node(self, task_key: str) -> TaskNode:
        for node in self.nodes:
            if node.task_key == task_key:
                return node
        raise KeyError(task_key)

    @property
    def task_keys(self) -> tuple[str, ...]:
        return tuple(n.task_key for n in self.nodes)

    def dependents(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {n.task_key: [] for n in self.nodes}
        for node in self.nodes:
            for dep in node.depends_on:
                if dep in out:
                    out[dep].append(node.task_key)
        return out


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    task_key: str | None = None

    def to_dict(self) -> dict:
        return {"code": self.code, "task_key": self.task_key,
                "message": self.message}


@dataclass
class ValidationReport:
    shape: str
    findings: list[Finding] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.findings

    def to_dict(self) -> dict:
        return {"shape": self.shape,
                "findings": [f.to_dict() for f in self.findings]}


def make_node(task_key: str, task_type: str, depends_on=(), input_data=(),
              params: dict[str, str] | None = None) -> TaskNode:
    """Node constructor that canonicalizes dependency order and params."""
    return TaskNode(
        task_key=task_key,
        task_type=task_type,
        depends_on=tuple(sorted(set(depends_on))),
        input_data=tuple(input_data),
        params=tuple(sorted((params or {}).items())),
    )


def build_graph(nodes) -> TaskGraph:
    """Assemble a graph from nodes; graph_id is a content hash so identical
    plans serialize byte-identically."""
    nodes = tuple(sorted(nodes, key=lambda n: n.task_key))
    shape = derive_shape(nodes)
    digest = hashlib.sha256(
        _nodes_payload(nodes).encode("utf-8")).hexdigest()
    return TaskGraph(graph_id="g-" + digest[:16], nodes=nodes, shape=shape)


def _nodes_payload(nodes) -> str:
    return json.dumps([_node_doc(n) for n in nodes], separators=(",", ":"))


def _node_doc(node: TaskNode) -> dict:
    return {
        "task_key": node.task_key,
        "task_type": node.task_type,
        "depends_on": list(node.depends_on),
        "input_data": list(node.input_data),
        "params": {k: v for k, v in node.params},
    }


def derive_shape(nodes) -> str:
    """Classify per the derivation rule; precedence single > chain > tree."""
    nodes = list(nodes)
    if len(nodes) == 1:
        return "single"
    keys = {n.task_key for n in nodes}
    indegree = {n.task_key: len([d for d in n.depends_on if d in keys])
                for n in nodes}
    outdegree = {k: 0 for k in keys}
    for n in nodes:
        for dep in n.depends_on:
            if dep in outdegree:
                outdegree[dep] += 1
    if (all(v <= 1 for v in indegree.values())
            and all(v <= 1 for v in outdegree.values())
            and _is_single_path(nodes, indegree)):
        return "chain"
    if all(v <= 1 for v in indegree.values()):
        return "tree"
    return "dag"


def _is_single_path(nodes, indegree) -> bool:
    """True when the nodes form one unbroken dependency path."""
    keys = {n.task_key for n in nodes}
    by_key = {n.task_key: n for n in nodes}
    roots = [k for k, deg in indegree.items() if deg == 0]
    if len(roots) != 1:
        return False
    dependents: dict[str, list[str]] = {k: [] for k in keys}
    for n in nodes:
        for dep in n.depends_on:
            if dep in dependents:
                dependents[dep].append(n.task_key)
    current, seen = roots[0], {roots[0]}
    while True:
        nxt = dependents[by_key[current].task_key]
        if not nxt:
            break
        if len(nxt) != 1 or nxt[0] in seen:
            return False
        current = nxt[0]
        seen.add(current)
    return len(seen) == len(keys)


def validate_graph(graph: TaskGraph,
                   registered_types: set[str] | None = None) -> ValidationReport:
    """Report acyclicity, dangling references, duplicate keys, and unknown
    task types; never raises — failures ride in the report."""
    findings: list[Finding] = []
    seen: set[str] = set()
    for node in graph.nodes:
        if node.task_key in seen:
            findings.append(Finding(
                code="DuplicateTaskKey", task_key=node.task_key,
                message=f"task '{node.task_key}' appears more than once"))
        seen.add(node.task_key)
    keys = {n.task_key for n in graph.nodes}
    for node in graph.nodes:
        for dep in node.depends_on:
            if dep not in keys:
                findings.append(Finding(
                    code="DanglingDependency", task_key=node.task_key,
                    message=(f"task '{node.task_key}' depends on unknown "
                             f"task '{dep}'")))
    try:
        execution_stages(graph)
    except CyclicGraph as exc:
        findings.append(Finding(
            code="CyclicGraph", message=exc.message))
    if registered_types is not None:
        for node in graph.nodes:
            if node.task_type not in registered_types:
                findings.append(Finding(
                    code="UnknownTaskType", task_key=node.task_key,
                    message=unknown_type_message(node.task_key, node.task_type)))
    return ValidationReport(shape=graph.shape, findings=findings)


def unknown_type_message(task_key: str, task_type: str) -> str:
    # Frozen format: the keyword adapter's fallback logic parses it.
    return f"task '{task_key}': task_type '{task_type}' has no registered handler"


def execution_stages(graph: TaskGraph) -> list[list[str]]:
    """Longest-path layering; task_keys inside each stage sorted
    lexicographically.  Raises CyclicGraph when no layering exists."""
    keys = {n.task_key for n in graph.nodes}
    deps = {n.task_key: [d for d in n.depends_on if d in keys]
            for n in graph.nodes}
    layer: dict[str, int] = {}
    visiting: set[str] = set()

    def assign(key: str) -> int:
        if key in layer:
            return layer[key]
        if key in visiting:
            raise CyclicGraph(f"dependency cycle through task '{key}'")
        visiting.add(key)
        depth = 0 if not deps[key] else 1 + max(assign(d) for d in deps[key])
        visiting.discard(key)
        layer[key] = depth
        return depth

    for key in sorted(deps):
        assign(key)
    if not layer:
        return []
    stages: list[list[str]] = [[] for _ in range(max(layer.values()) + 1)]
    for key in sorted(layer):
        stages[layer[key]].append(key)
    return stages


# -- serialization -------------------------------------------------------------

def serialize_graph(graph: TaskGraph) -> str:
    """Canonical JSON: fixed key order, nodes sorted by task_key, sorted
    depends_on and params (the documented schema)."""
    doc = {
        "graph_id": graph.graph_id,
        "shape": graph.shape,
        "nodes": [_node_doc(n) for n in graph.nodes],
    }
    return json.dumps(doc, separators=(", ", ": "))


def parse_graph(text: str) -> TaskGraph:
    """Inverse of serialize_graph; shape and graph_id are re-derived."""
    try:
        raw = json.loads(text)
    except (json.JSONDecodeError, ValueError) as exc:
        raise SchemaViolation(f"graph not parseable: {exc}") from exc
    if not isinstance(raw, dict) or not isinstance(raw.get("nodes"), list):
        raise SchemaViolation("graph document must carry a 'nodes' list",
                              field_path="nodes")
    nodes = []
    for i, item in enumerate(raw["nodes"]):
        if not isinstance(item, dict):
            raise SchemaViolation("node must be an object",
                                  field_path=f"nodes[{i}]")
        for required in ("task_key", "task_type"):
            if not isinstance(item.get(required), str) or not item[required]:
                raise SchemaViolation(
                    f"node needs a non-empty '{required}'",
                    field_path=f"nodes[{i}].{required}")
        params = item.get("params", {})
        if not isinstance(params, dict):
            raise SchemaViolation("params must be an object",
                                  field_path=f"nodes[{i}].params")
        nodes.append(make_node(
            task_key=item["task_key"],
            task_type=item["task_type"],
            depends_on=item.get("depends_on", []),
            input_data=item.get("input_data", []),
            params={str(k): str(v) for k, v in params.items()},
        ))
    return build_graph(nodes)
