"""Two-turn natural-language session.

Turn 1 plans and runs "measure the uplink".  Turn 2 says "allocate bandwidth
using the previous result": the planner resolves the phrase to the newest
output stored by turn 1 and feeds it to the new run's root task.
"""

import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from operator_pipeline import build_service

from intentflow import DataCard


def main():
    root = Path(tempfile.mkdtemp(prefix="intentflow-chat-"))
    service = build_service(root)
    service.register_data(
        DataCard.make("seed/metrics", {"modality": "metrics"}),
        b"uplink telemetry")

    session_id = service.gateway.open_session()
    print(f"session {session_id}\n")

    print('turn 1: "measure the uplink"')
    first = service.submit_utterance(session_id, "measure the uplink")
    first_state = service.wait(first, timeout=30)
    stored = first_state.last_output_name
    print(f"  run {first}: {first_state.phase}; stored output: {stored}\n")

    print('turn 2: "allocate bandwidth using the previous result"')
    second = service.submit_utterance(
        session_id, "allocate bandwidth using the previous result")
    second_state = service.wait(second, timeout=30)
    root_node = second_state.graph.node("t1_allocate")
    print(f"  run {second}: {second_state.phase}")
    print(f"  root task input_data: {list(root_node.input_data)}")
    assert root_node.input_data == (stored,)

    print("\ntranscript:")
    for entry in service.gateway.get_session(session_id).chat_log:
        first_line = entry.text.splitlines()[0]
        print(f"  [{entry.role}] {first_line}")

    print("\nsecond run summary:\n")
    print(second_state.summary)
    service.close()


if __name__ == "__main__":
    main()
