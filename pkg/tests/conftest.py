"""Shared fixtures: seeded registries, keyword tables, and service builders."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from intentflow import Config, DataCard, ModelCard, ModelLibrary, OrchestratorService

SEED_CARDS = [
    dict(model_name="probe-fast", task_type="probe", latency_ms=5.0,
         resource_utilization=0.2, consumes=["metrics"], produces=["metrics"]),
    dict(model_name="probe-slow", task_type="probe", latency_ms=9.0,
         resource_utilization=0.1, consumes=["metrics"], produces=["metrics"]),
    dict(model_name="probe-heavy", task_type="probe", latency_ms=3.0,
         resource_utilization=0.8, consumes=["metrics"], produces=["metrics"]),
    dict(model_name="alloc-a", task_type="allocate", latency_ms=4.0,
         resource_utilization=0.3, consumes=["metrics"], produces=["plan"]),
    dict(model_name="alloc-b", task_type="allocate", latency_ms=6.0,
         resource_utilization=0.2, consumes=["metrics"], produces=["plan"]),
    dict(model_name="alloc-text", task_type="allocate", latency_ms=2.0,
         resource_utilization=0.4, consumes=["text"], produces=["plan"]),
    dict(model_name="report-a", task_type="report", latency_ms=2.0,
         resource_utilization=0.1, consumes=["plan"], produces=["text"]),
    dict(model_name="report-b", task_type="report", latency_ms=1.0,
         resource_utilization=0.3, consumes=["plan"], produces=["text"]),
]

KEYWORD_TABLE = {
    "keywords": {
        "measure": {"task_type": "probe"},
        "allocate": {"task_type": "allocate"},
        "report": {"task_type": "report"},
        "translate": {"task_type": "nlp_translate"},
    },
    "fallbacks": {"nlp_translate": "report"},
}


def make_registry(cards=None) -> ModelLibrary:
    registry = ModelLibrary()
    for doc in cards or SEED_CARDS:
        registry.register_model(ModelCard.from_document(doc))
    return registry


@pytest.fixture
def registry() -> ModelLibrary:
    return make_registry()


def write_environment(root: Path, cards=None, keyword_table=None) -> Config:
    cards_dir = root / "cards"
    cards_dir.mkdir(parents=True, exist_ok=True)
    for doc in cards or SEED_CARDS:
        (cards_dir / f"{doc['model_name']}.json").write_text(json.dumps(doc))
    table_path = root / "keywords.json"
    table_path.write_text(json.dumps(keyword_table or KEYWORD_TABLE))
    return Config(
        model_cards_dir=cards_dir,
        keyword_table=table_path,
        data_dir=root / "data",
        journal_dir=root / "journal",
        pool_size=4,
        max_concurrent_runs=4,
    )


@pytest.fixture
def service(tmp_path) -> OrchestratorService:
    config = write_environment(tmp_path)
    config.validate()
    svc = OrchestratorService(config)
    svc.register_data(DataCard.make("seed/metrics", {"modality": "metrics"}),
                      b"telemetry-bytes")
    yield svc
    svc.close()


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, after the test summary."""
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for name, ok in VERDICTS:
            terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}")


def chain_intent_doc(*, intent_id="chain-1", k=2, latency=100.0,
                     utilization=0.9) -> str:
    return json.dumps({
        "schema_version": "1",
        "intent_id": intent_id,
        "goal": "measure, allocate, report",
        "task_requests": [
            {"task_key": "measure", "task_type": "probe",
             "input_data": ["seed/metrics"]},
            {"task_key": "assign", "task_type": "allocate",
             "depends_on": ["measure"]},
            {"task_key": "digest", "task_type": "report",
             "depends_on": ["assign"]},
        ],
        "latency_budget_ms": latency,
        "utilization_budget": utilization,
        "combination_count": k,
    })
