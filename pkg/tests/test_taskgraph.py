"""Graph validation, shape derivation, and stage layering properties."""

from __future__ import annotations

import itertools
import random

import pytest

from intentflow import (
    CyclicGraph,
    build_graph,
    execution_stages,
    make_node,
    parse_graph,
    serialize_graph,
    validate_graph,
)
from intentflow.taskgraph import TaskGraph, derive_shape


def graph_of(edges: dict[str, list[str]], types=None) -> TaskGraph:
    types = types or {}
    nodes = [make_node(k, types.get(k, "probe"), depends_on=deps)
             for k, deps in edges.items()]
    return build_graph(nodes)


def oracle_has_cycle(edges: dict[str, list[str]]) -> bool:
    """Brute-force cycle search: follow every dependency path."""
    def walk(start: str, current: str, seen: frozenset) -> bool:
        for dep in edges.get(current, []):
            if dep == start:
                return True
            if dep in seen or dep not in edges:
                continue
            if walk(start, dep, seen | {dep}):
                return True
        return False

    return any(walk(k, k, frozenset([k])) for k in edges)


class TestShapes:
    def test_single(self):
        assert graph_of({"a": []}).shape == "single"

    def test_chain(self):
        assert graph_of({"a": [], "b": ["a"], "c": ["b"]}).shape == "chain"

    def test_star_is_tree(self):
        graph = graph_of({"a": [], "b": ["a"], "c": ["a"]})
        assert graph.shape == "tree"
        report = validate_graph(graph)
        assert report.valid

    def test_diamond_is_dag(self):
        graph = graph_of({"a": [], "b": ["a"], "c": ["a"], "d": ["b", "c"]})
        assert graph.shape == "dag"

    def test_disconnected_pair_is_tree_not_chain(self):
        assert graph_of({"a": [], "b": []}).shape == "tree"

    def test_two_chains_not_one_path(self):
        graph = graph_of({"a": [], "b": ["a"], "x": [], "y": ["x"]})
        assert graph.shape == "tree"

    def test_shape_precedence_single_node_with_self_loop(self):
        nodes = (make_node("a", "probe"),)
        assert derive_shape(nodes) == "single"


class TestValidation:
    def test_self_dependency_is_cyclic(self):
        nodes = [make_node("a", "probe", depends_on=["a"])]
        report = validate_graph(build_graph(nodes))
        assert any(f.code == "CyclicGraph" for f in report.findings)

    def test_dangling_reference(self):
        report = validate_graph(graph_of({"a": ["ghost"]}))
        assert any(f.code == "DanglingDependency" for f in report.findings)

    def test_unknown_task_type(self):
        report = validate_graph(graph_of({"a": []}), registered_types={"report"})
        findings = [f for f in report.findings if f.code == "UnknownTaskType"]
        assert findings and findings[0].task_key == "a"

    def test_valid_graph_with_vocabulary(self):
        report = validate_graph(graph_of({"a": [], "b": ["a"]}),
                                registered_types={"probe"})
        assert report.valid and report.shape == "chain"

    def test_random_graphs_match_cycle_oracle(self):
        rng = random.Random(7)
        for _ in range(300):
            n = rng.randint(1, 8)
            keys = [f"n{i}" for i in range(n)]
            edges = {k: [] for k in keys}
            for _ in range(rng.randint(0, n * 2)):
                a, b = rng.choice(keys), rng.choice(keys)
                if a != b or rng.random() < 0.2:
                    edges[a] = sorted(set(edges[a]) | {b})
            graph = graph_of(edges)
            report = validate_graph(graph)
            found_cycle = any(f.code == "CyclicGraph" for f in report.findings)
            assert found_cycle == oracle_has_cycle(edges), edges


class TestStages:
    def test_single_node(self):
        assert execution_stages(graph_of({"a": []})) == [["a"]]

    def test_chain(self):
        graph = graph_of({"a": [], "b": ["a"], "c": ["b"]})
        assert execution_stages(graph) == [["a"], ["b"], ["c"]]

    def test_tree_siblings_co_staged(self):
        graph = graph_of({"a": [], "b": ["a"], "c": ["a"]})
        assert execution_stages(graph) == [["a"], ["b", "c"]]

    def test_cycle_raises(self):
        with pytest.raises(CyclicGraph):
            execution_stages(graph_of({"a": ["b"], "b": ["a"]}))

    def test_stage_properties_on_random_dags(self):
        rng = random.Random(21)
        for _ in range(200):
            n = rng.randint(1, 9)
            keys = [f"n{i}" for i in range(n)]
            edges = {}
            for i, key in enumerate(keys):
                edges[key] = rng.sample(keys[:i], rng.randint(0, i)) if i else []
            graph = graph_of(edges)
            stages = execution_stages(graph)
            position = {k: i for i, stage in enumerate(stages) for k in stage}
            # union is the node set, stages disjoint
            assert sorted(position) == sorted(keys)
            assert sum(len(s) for s in stages) == len(keys)
            # every edge crosses strictly forward
            for key, deps in edges.items():
                for dep in deps:
                    assert position[dep] < position[key]
            # longest-path layering: stage i nodes have a dependency in i-1
            for i, stage in enumerate(stages):
                for key in stage:
                    if i == 0:
                        assert not edges[key]
                    else:
                        assert max(position[d] for d in edges[key]) == i - 1
            # within-stage independence
            for stage in stages:
                for a, b in itertools.combinations(stage, 2):
                    assert a not in edges[b] and b not in edges[a]
            # deterministic lexicographic order inside stages
            for stage in stages:
                assert stage == sorted(stage)


class TestSerialization:
    def test_round_trip(self):
        graph = graph_of({"a": [], "b": ["a"], "c": ["a"]})
        again = parse_graph(serialize_graph(graph))
        assert again == graph

    def test_byte_identical_for_identical_content(self):
        one = build_graph([make_node("x", "probe", params={"b": "2", "a": "1"})])
        two = build_graph([make_node("x", "probe", params={"a": "1", "b": "2"})])
        assert serialize_graph(one) == serialize_graph(two)

    def test_matches_schema_file(self):
        jsonschema = pytest.importorskip("jsonschema")
        import json
        from pathlib import Path
        schema = json.loads(
            (Path(__file__).resolve().parents[1]
             / "src/intentflow/schemas/task_graph.schema.json").read_text())
        graph = graph_of({"a": [], "b": ["a"]})
        jsonschema.validate(json.loads(serialize_graph(graph)), schema)
