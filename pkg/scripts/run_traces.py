#!/usr/bin/env python3
"""Run the three shipped discovery scenarios end to end and print the
execution-metric summary table (targets, structure, pockets, pool, reps,
dock failures, wall time), then verify each trajectory replays to match."""

import sys
import time

from dualplane.cli import default_reasoner
from dualplane.engine import GatePolicy
from dualplane.replay import replay
from dualplane.session import SessionConfig, create_session
from dualplane.supervisor import run_supervisor

QUERIES = [
    ("crohns", "Design a drug for Crohn's disease"),
    ("parkinsons", "Design a novel drug for Parkinson's disease"),
    ("sepsis", "Develop a therapeutic candidate for sepsis"),
]

HEADER = (f"{'scenario':<12} {'top target':<10} {'pdb':<5} {'pockets':>8} "
          f"{'pool':>12} {'reps':>5} {'dock fails':>10} {'winner dock':>12} "
          f"{'time':>7}  replay")


def main() -> int:
    print(HEADER)
    print("-" * len(HEADER))
    for name, query in QUERIES:
        started = time.perf_counter()
        stores = create_session(query, SessionConfig(seed=7, gate_policy=GatePolicy.auto()),
                                reasoner=default_reasoner())
        outcome = run_supervisor(query, stores)
        elapsed = time.perf_counter() - started
        m = outcome.report["metrics"]
        hi = m["hi"]
        pool = (f"de novo ({hi['generated']})" if hi["generated"]
                else f"HTVS ({hi['screened']:,})")
        pockets = hi["pockets"] if hi["pocket_source"] == "predicted" else "ref lig"
        verdict = replay(stores.recorder.trajectory)
        print(f"{name:<12} {m['ti']['top_targets'][0]:<10} {m['ti']['structure']:<5} "
              f"{pockets!s:>8} {pool:>12} {hi['representatives']:>5} "
              f"{hi['dock_failures']:>10} {m['lo']['winner_dock']:>12} "
              f"{elapsed:>6.2f}s  {'match' if verdict.match else 'DIVERGED'}")
        if not verdict.match or outcome.status != "completed":
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
