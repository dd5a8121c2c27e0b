"""Planner behavior: structured identity, keyword rules, replanning."""

from __future__ import annotations

import json

import pytest
from fastapi import FastAPI, Request
from fastapi.testclient import TestClient

from intentflow import (
    KeywordPlannerAdapter,
    KeywordTable,
    PlanContext,
    Planner,
    PlanningFailed,
    UnknownTaskType,
    parse_intent,
    serialize_graph,
)
from intentflow.feedback import FeedbackReport, Reason, StageScores
from intentflow.taskgraph import unknown_type_message

TYPES = {"probe", "allocate", "report"}

TABLE = KeywordTable.from_dict({
    "keywords": {
        "measure": {"task_type": "probe", "params": {"metric": "latency"}},
        "allocate": {"task_type": "allocate"},
        "report": {"task_type": "report"},
        "translate": {"task_type": "nlp_translate"},
    },
    "fallbacks": {"nlp_translate": "report"},
})


def make_planner(types=TYPES, max_replans=2) -> Planner:
    return Planner(adapter=KeywordPlannerAdapter(TABLE),
                   registered_types=set(types), max_replans=max_replans)


def intent_doc(requests, k=1) -> str:
    return json.dumps({
        "schema_version": "1",
        "task_requests": requests,
        "latency_budget_ms": 100,
        "utilization_budget": 1,
        "combination_count": k,
    })


def clean_report(run_id="r-1") -> FeedbackReport:
    return FeedbackReport(run_id=run_id, formatted_summary="",
                          scores=StageScores(1.0, 1.0, 1.0, ()))


def unknown_type_report(task_key: str, task_type: str,
                        run_id="r-1") -> FeedbackReport:
    reason = Reason("planning", "UnknownTaskType",
                    unknown_type_message(task_key, task_type))
    return FeedbackReport(run_id=run_id, formatted_summary="",
                          scores=StageScores(0.0, 0.0, 0.0, (reason,)))


class TestStructuredPath:
    def test_single_request_gives_single_shape(self):
        planner = make_planner()
        intent = parse_intent(intent_doc(
            [{"task_key": "a", "task_type": "probe"}]))
        graph = planner.plan(intent)
        assert graph.shape == "single"

    def test_chain_request_gives_chain_shape(self):
        planner = make_planner()
        intent = parse_intent(intent_doc([
            {"task_key": "a", "task_type": "probe"},
            {"task_key": "b", "task_type": "allocate", "depends_on": ["a"]},
            {"task_key": "c", "task_type": "report", "depends_on": ["b"]},
        ]))
        graph = planner.plan(intent)
        assert graph.shape == "chain"

    def test_plan_mirrors_task_requests_exactly(self):
        planner = make_planner()
        intent = parse_intent(intent_doc([
            {"task_key": "root", "task_type": "probe", "input_data": ["d1"]},
            {"task_key": "left", "task_type": "allocate", "depends_on": ["root"]},
            {"task_key": "right", "task_type": "report", "depends_on": ["root"]},
        ]))
        graph = planner.plan(intent)
        by_key = {n.task_key: n for n in graph.nodes}
        assert set(by_key) == {"root", "left", "right"}
        for request in intent.task_requests:
            node = by_key[request.task_key]
            assert node.task_type == request.task_type
            assert node.depends_on == request.depends_on
            assert node.input_data == request.input_data

    def test_unknown_type_raises(self):
        planner = make_planner()
        intent = parse_intent(intent_doc(
            [{"task_key": "a", "task_type": "mystery"}]))
        with pytest.raises(UnknownTaskType) as excinfo:
            planner.plan(intent)
        assert excinfo.value.task_key == "a"
        assert excinfo.value.task_type == "mystery"

    def test_cyclic_intent_fails_planning(self):
        planner = make_planner()
        intent = parse_intent(intent_doc([
            {"task_key": "a", "task_type": "probe", "depends_on": ["b"]},
            {"task_key": "b", "task_type": "probe", "depends_on": ["a"]},
        ]))
        with pytest.raises(PlanningFailed):
            planner.plan(intent)


class TestKeywordAdapter:
    def test_documented_fixture_sentence(self):
        # Hand-run: "measure" at 0 -> probe; "allocate" at 26 -> allocate;
        # hits chain in textual order.
        planner = make_planner()
        graph = planner.plan("measure link latency then allocate bandwidth")
        assert graph.shape == "chain"
        keys = [n.task_key for n in graph.nodes]
        assert keys == sorted(keys)
        types_in_order = [graph.node(k).task_type
                          for k in ("t1_probe", "t2_allocate")]
        assert types_in_order == ["probe", "allocate"]
        assert graph.node("t2_allocate").depends_on == ("t1_probe",)
        assert graph.node("t1_probe").params_dict == {"metric": "latency"}

    def test_case_insensitive_word_boundaries(self):
        planner = make_planner()
        graph = planner.plan("Measure! then REPORT.")
        assert [n.task_type for n in graph.nodes] == ["probe", "report"]
        # substring hits do not count: "measurements" has no bare "measure"
        with pytest.raises(PlanningFailed):
            planner.plan("measurements only")

    def test_no_keyword_hit_fails(self):
        with pytest.raises(PlanningFailed):
            make_planner().plan("do something nice")

    def test_previous_result_attaches_last_output(self):
        adapter = KeywordPlannerAdapter(TABLE)
        context = PlanContext(
            utterance="allocate using the previous result",
            session_id="s-1", run_id="r-1",
            last_output_name="r-0.r1/t1_probe")
        graph = adapter.plan(context)
        assert graph.node("t1_allocate").input_data == ("r-0.r1/t1_probe",)

    def test_previous_result_without_history_is_ignored(self):
        adapter = KeywordPlannerAdapter(TABLE)
        graph = adapter.plan(PlanContext(
            utterance="allocate using the previous result"))
        assert graph.node("t1_allocate").input_data == ()

    def test_determinism_byte_identical(self):
        utterance = "measure then allocate then report"
        one = make_planner().plan(utterance)
        two = make_planner().plan(utterance)
        assert serialize_graph(one) == serialize_graph(two)


class TestReplan:
    def test_clean_feedback_returns_graph_unchanged(self):
        planner = make_planner()
        graph = planner.plan("measure the cell")
        assert planner.replan(graph, clean_report()) is graph

    def test_fallback_retypes_named_node(self):
        planner = make_planner()
        adapter: KeywordPlannerAdapter = planner.adapter
        graph = adapter.plan(PlanContext(utterance="translate the alarms"))
        assert graph.node("t1_nlp_translate").task_type == "nlp_translate"
        report = unknown_type_report("t1_nlp_translate", "nlp_translate")
        revised = planner.replan(graph, report)
        keys = [n.task_key for n in revised.nodes]
        assert len(keys) == 1
        assert revised.nodes[0].task_type == "report"

    def test_replan_limit_exhaustion(self):
        planner = make_planner(max_replans=2)
        graph = planner.plan("measure the link")
        # Reports that force a re-plan but leave the graph valid.
        selection_only = FeedbackReport(
            run_id="r-1", formatted_summary="",
            scores=StageScores(1.0, 0.0, 0.0, (
                Reason("selection", "NoFeasibleCombination", "none"),
                Reason("execution", "NoExecutions", "none"),
            )))
        first = planner.replan(graph, selection_only)
        second = planner.replan(first, selection_only)
        with pytest.raises(PlanningFailed):
            planner.replan(second, selection_only)

    def test_session_fallback_applies_on_next_plan(self):
        planner = make_planner()
        adapter: KeywordPlannerAdapter = planner.adapter
        context = PlanContext(utterance="translate the fault log",
                              run_id="r-9", session_id="s-9")
        with pytest.raises(UnknownTaskType):
            planner.plan(context.utterance, run_id="r-9", session_id="s-9")
        adapter.accept_feedback(
            unknown_type_report("t1_nlp_translate", "nlp_translate", run_id="r-9"))
        assert len(adapter.feedback_log) == 1
        # next plan for the same session applies the fallback table
        graph = planner.plan("translate the fault log",
                             run_id="r-10", session_id="s-9")
        assert [n.task_type for n in graph.nodes] == ["report"]
        # other sessions are unaffected
        with pytest.raises(UnknownTaskType):
            planner.plan("translate the fault log",
                         run_id="r-11", session_id="s-other")


class TestHttpAdapterContract:
    def test_stub_endpoint_round_trip(self):
        # Hermetic: in-process test client, no network, no hosted model.
        from intentflow import HttpPlannerAdapter

        stub = FastAPI()
        seen: dict = {}

        @stub.post("/complete")
        async def complete(request: Request):
            body = await request.json()
            seen.update(body)
            return {"graph": {"nodes": [
                {"task_key": "a", "task_type": "probe",
                 "depends_on": [], "input_data": [], "params": {}},
            ]}}

        adapter = HttpPlannerAdapter("/complete", task_types=["probe"])
        adapter._client = TestClient(stub)
        graph = adapter.plan(PlanContext(utterance="check the uplink"))
        assert [n.task_type for n in graph.nodes] == ["probe"]
        assert seen["utterance"] == "check the uplink"
        assert "task_types" in seen and seen["task_types"] == ["probe"]

    def test_bad_endpoint_reply_is_planning_failure(self):
        from intentflow import HttpPlannerAdapter

        stub = FastAPI()

        @stub.post("/complete")
        async def complete():
            return {"no_graph": True}

        adapter = HttpPlannerAdapter("/complete")
        adapter._client = TestClient(stub)
        with pytest.raises(PlanningFailed):
            adapter.plan(PlanContext(utterance="check"))
