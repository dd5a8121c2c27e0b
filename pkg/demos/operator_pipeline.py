"""End-to-end walk of the operator path: JSON intent in, scored report out.

Builds a throwaway environment (8 model cards over 3 task types, one seed
data card), submits a 3-task chain intent asking for 2 model combinations,
and prints what each stage produced.
"""

import json
import tempfile
from pathlib import Path

from intentflow import Config, DataCard, OrchestratorService

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
    {"model_name": "alloc-lean", "task_type": "allocate", "latency_ms": 2,
     "resource_utilization": 0.4, "consumes": ["metrics"], "produces": ["plan"]},
    {"model_name": "report-a", "task_type": "report", "latency_ms": 2,
     "resource_utilization": 0.1, "consumes": ["plan"], "produces": ["text"]},
    {"model_name": "report-b", "task_type": "report", "latency_ms": 1,
     "resource_utilization": 0.3, "consumes": ["plan"], "produces": ["text"]},
]

INTENT = {
    "schema_version": "1",
    "intent_id": "demo-balance-1",
    "goal": "measure the cell, rebalance, summarize",
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
    "combination_count": 2,
}


def build_service(root: Path) -> OrchestratorService:
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
                    data_dir=root / "data",
                    journal_dir=root / "journal")
    config.validate()
    return OrchestratorService(config)


def main():
    root = Path(tempfile.mkdtemp(prefix="intentflow-demo-"))
    service = build_service(root)
    service.register_data(
        DataCard.make("seed/metrics", {"modality": "metrics",
                                       "origin": "demo"}),
        b"cell telemetry snapshot")

    print(f"environment under {root}\n")
    print("submitting intent:")
    print(json.dumps(INTENT, indent=2), "\n")

    run_id = service.submit_intent(json.dumps(INTENT))
    state = service.wait(run_id, timeout=30)

    print(f"run {run_id} finished in phase: {state.phase}\n")
    print("planned stages:", json.dumps(state.to_api_dict()["stages"]))
    print("\nselected combinations:")
    for combo in state.combinations:
        print(f"  rank {combo.rank}: {combo.assignment_map} "
              f"(critical path {combo.critical_path_latency_ms} ms, "
              f"peak utilization {combo.peak_utilization})")

    print("\nscores:", json.dumps(state.scores.to_document(), indent=2))
    print("\nfinal report:", json.dumps(state.final_report_doc, indent=2))
    print("\nformatted summary:\n")
    print(state.summary)
    print(f"journal: {service.config.journal_dir / (run_id + '.jsonl')}")
    service.close()


if __name__ == "__main__":
    main()
