"""Regenerate the console's test fixtures from the real service.

Run from the repo root:  python3 frontend/scripts/make_fixtures.py
Writes frontend/fixtures/*.json with live API payloads and gateway error
triples, so the TypeScript tests pin against the actual wire formats.
"""

import json
import tempfile
from pathlib import Path

from intentflow import DataCard, OrchestratorService, parse_intent
from intentflow.errors import IntentFlowError

REPO = Path(__file__).resolve().parents[2]
FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"

CARDS = [
    {"model_name": "probe-fast", "task_type": "probe", "latency_ms": 5,
     "resource_utilization": 0.2, "consumes": ["metrics"], "produces": ["metrics"]},
    {"model_name": "probe-slow", "task_type": "probe", "latency_ms": 9,
     "resource_utilization": 0.1, "consumes": ["metrics"], "produces": ["metrics"]},
    {"model_name": "probe-heavy", "task_type": "probe", "latency_ms": 3,
     "resource_utilization": 0.8, "consumes": ["metrics"], "produces": ["metrics"]},
    {"model_name": "alloc-a", "task_type": "allocate", "latency_ms": 4,
     "resource_utilization": 0.3, "consumes": ["metrics"], "produces": ["plan"]},
    {"model_name": "alloc-b", "task_type": "allocate", "latency_ms": 6,
     "resource_utilization": 0.2, "consumes": ["metrics"], "produces": ["plan"]},
    {"model_name": "alloc-text", "task_type": "allocate", "latency_ms": 2,
     "resource_utilization": 0.4, "consumes": ["text"], "produces": ["plan"]},
    {"model_name": "report-a", "task_type": "report", "latency_ms": 2,
     "resource_utilization": 0.1, "consumes": ["plan"], "produces": ["text"]},
    {"model_name": "report-b", "task_type": "report", "latency_ms": 1,
     "resource_utilization": 0.3, "consumes": ["plan"], "produces": ["text"]},
]


def build_service(root: Path) -> OrchestratorService:
    from intentflow import Config
    cards_dir = root / "cards"
    cards_dir.mkdir()
    for card in CARDS:
        (cards_dir / f"{card['model_name']}.json").write_text(json.dumps(card))
    (root / "keywords.json").write_text(json.dumps({
        "keywords": {"measure": {"task_type": "probe"},
                     "allocate": {"task_type": "allocate"},
                     "report": {"task_type": "report"}},
        "fallbacks": {},
    }))
    config = Config(model_cards_dir=cards_dir,
                    keyword_table=root / "keywords.json",
                    data_dir=root / "data", journal_dir=root / "journal")
    config.validate()
    return OrchestratorService(config)


def valid_doc() -> dict:
    return {
        "schema_version": "1",
        "intent_id": "console-k3",
        "goal": "chain with three combinations",
        "task_requests": [
            {"task_key": "measure", "task_type": "probe",
             "input_data": ["seed/metrics"]},
            {"task_key": "assign", "task_type": "allocate",
             "depends_on": ["measure"]},
            {"task_key": "digest", "task_type": "report",
             "depends_on": ["assign"]},
        ],
        "latency_budget_ms": 100,
        "utilization_budget": 0.9,
        "combination_count": 3,
    }


def gateway_error_cases() -> list[dict]:
    def mutate(**changes):
        doc = valid_doc()
        doc.update(changes)
        return doc

    missing = valid_doc()
    missing.pop("latency_budget_ms")
    no_tasks = mutate(task_requests=[])
    bad_item = mutate(task_requests=[
        {"task_key": "a", "task_type": "probe", "priority": 9}])
    dup = mutate(task_requests=[
        {"task_key": "a", "task_type": "probe"},
        {"task_key": "a", "task_type": "report"}])
    self_dep = mutate(task_requests=[
        {"task_key": "a", "task_type": "probe", "depends_on": ["a"]}])
    dangling = mutate(task_requests=[
        {"task_key": "a", "task_type": "probe", "depends_on": ["ghost"]}])
    cases = [
        ("utilization_above_one", mutate(utilization_budget=1.5)),
        ("negative_latency", mutate(latency_budget_ms=-2)),
        ("zero_combinations", mutate(combination_count=0)),
        ("float_combinations", mutate(combination_count=1.5)),
        ("bad_schema_version", mutate(schema_version="2")),
        ("unknown_top_field", mutate(surprise=True)),
        ("missing_latency", missing),
        ("empty_task_requests", no_tasks),
        ("unknown_item_field", bad_item),
        ("duplicate_task_key", dup),
        ("self_dependency", self_dep),
        ("dangling_dependency", dangling),
        ("goal_not_string", mutate(goal=42)),
        ("latency_boolean", mutate(latency_budget_ms=True)),
    ]
    out = []
    for name, doc in cases:
        try:
            parse_intent(json.dumps(doc))
            raise AssertionError(f"case {name} unexpectedly parsed")
        except IntentFlowError as exc:
            out.append({"name": name, "document": doc,
                        "error": exc.to_dict()})
    return out


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    root = Path(tempfile.mkdtemp(prefix="console-fixtures-"))
    service = build_service(root)
    service.register_data(
        DataCard.make("seed/metrics", {"modality": "metrics"}), b"telemetry")

    run_id = service.submit_intent(json.dumps(valid_doc()))
    state = service.wait(run_id, timeout=30)
    assert state.phase == "done", state.error
    (FIXTURES / "run_k3.json").write_text(
        json.dumps(state.to_api_dict(), indent=2))

    failing = {
        "schema_version": "1",
        "intent_id": "console-failed",
        "goal": "single task that fails at runtime",
        "task_requests": [
            {"task_key": "assign", "task_type": "allocate",
             "input_data": ["seed/metrics"]},
        ],
        "latency_budget_ms": 100,
        "utilization_budget": 0.9,
        "combination_count": 1,
    }
    run_id = service.submit_intent(json.dumps(failing))
    state = service.wait(run_id, timeout=30)
    record = state.records[0]
    assert record.results_map["assign"].status == "failed"
    (FIXTURES / "run_failed_task.json").write_text(
        json.dumps(state.to_api_dict(), indent=2))

    session_id = service.gateway.open_session()
    first = service.submit_utterance(session_id, "measure the uplink")
    service.wait(first, timeout=30)
    second = service.submit_utterance(
        session_id, "allocate bandwidth using the previous result")
    service.wait(second, timeout=30)
    session = service.gateway.get_session(session_id)
    (FIXTURES / "session_two_turns.json").write_text(json.dumps({
        "session_id": session.session_id,
        "last_run_id": session.last_run_id,
        "chat_log": [{"role": e.role, "text": e.text,
                      "timestamp": e.timestamp} for e in session.chat_log],
    }, indent=2))

    (FIXTURES / "gateway_errors.json").write_text(
        json.dumps(gateway_error_cases(), indent=2))
    (FIXTURES / "intent_valid.json").write_text(
        json.dumps(valid_doc(), indent=2))
    service.close()
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
