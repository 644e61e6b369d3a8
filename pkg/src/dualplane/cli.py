"""Operator command line: run sessions, replay, audit lineage, score suites, serve.

Exit codes for ``run``: 0 completed with a clean compliance record, 2 gate
rejection, 3 suspended awaiting a gate (interactive mode without a console),
4 completed but with compliance violations, 1 any other failure (a
machine-readable error object goes to stdout).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import load_suite, score_suite
from .engine import GatePolicy
from .errors import DualPlaneError
from .ledger import ArtifactLedger
from .reasoner import ScriptedReasoner
from .replay import load_trajectory, replay
from .scenarios import load_scenarios
from .session import SessionConfig, create_session
from .supervisor import run_supervisor
from .types import PermissionPolicy

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REJECTED = 2
EXIT_SUSPENDED = 3
EXIT_VIOLATIONS = 4


def _gate_policy(spec: str) -> GatePolicy:
    if spec == "auto-approve":
        return GatePolicy.auto()
    if spec == "interactive":
        return GatePolicy.interactive(block=False)
    if spec.startswith("scripted="):
        path = Path(spec[len("scripted="):])
        decisions = json.loads(path.read_text(encoding="utf-8"))
        return GatePolicy.scripted(decisions)
    raise ValueError(f"unknown gate mode {spec!r}")


def default_reasoner(scenario_dir: Path | None = None) -> ScriptedReasoner:
    store = load_scenarios(scenario_dir)
    patterns = [p for sc in store.scenarios for p in sc.query_patterns]
    return ScriptedReasoner.from_file(scenario_patterns=patterns)


def cmd_run(args: argparse.Namespace) -> int:
    if args.task:
        task = json.loads(Path(args.task).read_text(encoding="utf-8"))
        query = task["query"]
    else:
        if not args.query:
            print(json.dumps({"error": {"class": "usage", "detail": "query required"}}))
            return EXIT_ERROR
        query = args.query

    config = SessionConfig(
        seed=args.seed,
        policy=PermissionPolicy.make(args.mode),
        gate_policy=_gate_policy(args.gate_mode),
        budget_k=args.budget_k,
        replan_max=args.replan_max,
        manifest_dir=Path(args.manifests) if args.manifests else None,
        out_dir=Path(args.out) if args.out else None,
    )
    reasoner = default_reasoner()
    try:
        stores = create_session(query, config, reasoner=reasoner)
        outcome = run_supervisor(query, stores)
    except DualPlaneError as exc:
        print(json.dumps({"error": {"class": exc.code, "detail": str(exc)}}))
        return EXIT_ERROR
    saved = stores.save()
    summary = {
        "session_id": stores.session_id,
        "status": outcome.status,
        "mode": outcome.mode,
        "worker_episodes": outcome.worker_episodes,
        "compliance_violations": len(outcome.report["compliance_violations"]),
        "output_dir": str(saved) if saved else None,
    }
    if outcome.report.get("winner"):
        summary["winner"] = {
            "smiles": outcome.report["winner"].get("smiles"),
            "dock_kcal_mol": outcome.report["winner"].get("final_dock"),
        }
    print(json.dumps(summary, indent=2, sort_keys=True))
    if outcome.status == "rejected":
        return EXIT_REJECTED
    if outcome.status == "suspended_awaiting_gate":
        return EXIT_SUSPENDED
    if outcome.status != "completed":
        return EXIT_ERROR
    if outcome.report["compliance_violations"]:
        return EXIT_VIOLATIONS
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    trajectory = load_trajectory(args.trajectory)
    verdict = replay(trajectory,
                     manifest_dir=Path(args.manifests) if args.manifests else None)
    print(json.dumps(verdict.to_json(), indent=2, sort_keys=True))
    return EXIT_OK if verdict.match else EXIT_ERROR


def cmd_audit(args: argparse.Namespace) -> int:
    bundle = Path(args.bundle)
    ledger = ArtifactLedger.load(session="audit", directory=bundle)
    try:
        chain = ledger.lineage(args.artifact_id)
    except DualPlaneError as exc:
        print(json.dumps({"error": {"class": exc.code, "detail": str(exc)}}))
        return EXIT_ERROR
    for record in chain:
        parents = ",".join(p[:10] for p in record.parent_ids) or "-"
        flag = " superseded" if record.superseded else ""
        print(f"{record.created_at:4d}  {record.artifact_id[:12]}  "
              f"<- {parents:<44} {record.producer}{flag}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    tasks = load_suite(args.suite)
    if args.responses:
        responses = json.loads(Path(args.responses).read_text(encoding="utf-8"))
    else:
        reasoner = default_reasoner()
        responses = {t.task_id: reasoner.synthesize(t.prompt, []) for t in tasks}
    try:
        report = score_suite(tasks, responses)
    except DualPlaneError as exc:
        print(json.dumps({"error": {"class": exc.code, "detail": str(exc)}}))
        return EXIT_ERROR
    print(report.render_text())
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps(report.to_json(), indent=2, sort_keys=True), encoding="utf-8")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import SessionService
    host, _, port = args.bind.partition(":")
    service = SessionService(host=host or "127.0.0.1", port=int(port or 8350),
                             token=args.token, seed=args.seed,
                             mode=args.mode,
                             out_dir=Path(args.out) if args.out else None)
    if args.run:
        service.start_session(args.run, gate_mode="interactive")
    print(json.dumps({"serving": f"{service.host}:{service.port}"}), flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        service.shutdown()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dualplane",
                                     description="governed dual-plane orchestration engine")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a session end to end")
    run.add_argument("query", nargs="?", help="query text (or use --task)")
    run.add_argument("--task", help="JSON task file with a query field")
    run.add_argument("--mode", choices=["strict", "permissive"], default="strict")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--budget-K", dest="budget_k", type=int, default=8)
    run.add_argument("--replan-max", dest="replan_max", type=int, default=3)
    run.add_argument("--gate-mode", default="auto-approve",
                     help="auto-approve | interactive | scripted=FILE")
    run.add_argument("--out", help="output directory for trajectory/report/audit bundle")
    run.add_argument("--manifests", help="server manifest directory override")
    run.set_defaults(fn=cmd_run)

    rp = sub.add_parser("replay", help="re-execute a trajectory and compare digests")
    rp.add_argument("trajectory")
    rp.add_argument("--manifests")
    rp.set_defaults(fn=cmd_replay)

    audit = sub.add_parser("audit", help="render an artifact's lineage")
    audit.add_argument("artifact_id")
    audit.add_argument("--bundle", required=True, help="audit bundle directory")
    audit.set_defaults(fn=cmd_audit)

    bench = sub.add_parser("bench", help="score a task suite")
    bench.add_argument("suite")
    bench.add_argument("--responses", help="JSON file of task_id -> response")
    bench.add_argument("--json-out", dest="json_out")
    bench.set_defaults(fn=cmd_bench)

    serve = sub.add_parser("serve", help="expose sessions/gates/events over HTTP")
    serve.add_argument("--bind", default="127.0.0.1:8350")
    serve.add_argument("--token", default="local-dev-token")
    serve.add_argument("--seed", type=int, default=0)
    serve.add_argument("--mode", choices=["strict", "permissive"], default="strict")
    serve.add_argument("--out")
    serve.add_argument("--run", help="start one interactive session on startup")
    serve.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
