#!/usr/bin/env python3
"""Demonstrate the human-gate surface without a console.

Runs one session with blocking interactive gates while a resolver thread
plays the operator: approve everything except the pocket gate, which gets a
reference-ligand correction. Prints each decision as it happens and the
winner at the end.
"""

import json
import sys
import threading
import time

from dualplane.cli import default_reasoner
from dualplane.engine import GatePolicy, resolve_gate
from dualplane.session import SessionConfig, create_session
from dualplane.supervisor import run_supervisor

PLAYBOOK = {
    "pocket-confirm": {"decision": "correct",
                       "patch": {"pocket": {"center": [161.2, 205.8, 151.3],
                                            "box": [17.5, 24.7, 28.0],
                                            "confidence": 1.0,
                                            "source": "reference_ligand"}}},
}


def main() -> int:
    query = "Design a drug for Crohn's disease"
    config = SessionConfig(seed=7, gate_policy=GatePolicy.interactive(block=True))
    stores = create_session(query, config, reasoner=default_reasoner())

    done = threading.Event()

    def operator() -> None:
        while not done.is_set():
            for ticket in stores.gatebook.pending():
                decision = PLAYBOOK.get(ticket.gate_id, {"decision": "approve"})
                print(f"[gate] {ticket.gate_id:<18} -> {decision['decision']}")
                resolve_gate(ticket.ticket_id, decision, stores.gatebook,
                             decided_by="playground")
            time.sleep(0.02)

    thread = threading.Thread(target=operator, daemon=True)
    thread.start()
    outcome = run_supervisor(query, stores)
    done.set()
    thread.join(timeout=1)

    print(json.dumps({
        "status": outcome.status,
        "pocket_source": outcome.report["metrics"]["hi"]["pocket_source"],
        "winner": outcome.report.get("winner", {}).get("smiles"),
        "winner_dock": outcome.report.get("winner", {}).get("final_dock"),
    }, indent=2))
    return 0 if outcome.status == "completed" else 1


if __name__ == "__main__":
    sys.exit(main())
