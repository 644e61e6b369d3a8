/**
 * Read-only pipeline progress derived purely from the event stream: node
 * states (pending/running/done/failed/suspended), contained failures,
 * checkpoints and stage transitions. The view is an observer — it never
 * recomputes scores or mutates anything.
 */

import type { EngineEvent, NodeState } from "./types.js";

export interface NodeProgress {
  nodeId: string;
  graph: string;
  state: NodeState;
  digest?: string;
}

export class ProgressModel {
  readonly nodes = new Map<string, NodeProgress>();
  readonly containedFailures: Array<Record<string, unknown>> = [];
  readonly checkpoints: Array<{ id: string; label: string; nodeId: string }> = [];
  readonly stages: Array<{ step: string; status: string }> = [];
  sessionStatus = "running";
  lastSeq = 0;

  apply(event: EngineEvent): void {
    this.lastSeq = Math.max(this.lastSeq, event.seq);
    const data = event.data;
    switch (event.kind) {
      case "node_started":
        this.setNode(data, "running");
        break;
      case "node_finished":
        this.setNode(data, "done", data["digest"] as string | undefined);
        break;
      case "node_failed":
        this.setNode(data, "failed");
        break;
      case "ticket_raised":
        this.setNode({ node_id: data["node_id"], graph: "" }, "suspended");
        break;
      case "failure_contained":
        this.containedFailures.push(data);
        break;
      case "checkpoint_created":
        this.checkpoints.push({
          id: String(data["checkpoint_id"]),
          label: String(data["label"]),
          nodeId: String(data["node_id"]),
        });
        break;
      case "rollback": {
        // rewind: everything after the checkpoint's node shows pending again
        const label = String(data["label"]);
        const checkpoint = [...this.checkpoints].reverse()
          .find((cp) => cp.label === label);
        if (checkpoint) {
          for (const node of this.nodes.values()) {
            if (node.state !== "done" || node.nodeId !== checkpoint.nodeId) {
              node.state = "pending";
            }
          }
        }
        break;
      }
      case "episode_started":
        this.stages.push({ step: String(data["step"]), status: "running" });
        break;
      case "episode_finished": {
        const stage = this.stages.find(
          (s) => s.step === String(data["step"]) && s.status === "running");
        if (stage) stage.status = String(data["status"]);
        break;
      }
      case "session_status":
        if (data["status"]) this.sessionStatus = String(data["status"]);
        break;
      default:
        break;
    }
  }

  applyAll(events: EngineEvent[]): void {
    for (const event of events) this.apply(event);
  }

  private setNode(
    data: Record<string, unknown>,
    state: NodeState,
    digest?: string,
  ): void {
    const nodeId = String(data["node_id"] ?? "");
    if (!nodeId) return;
    const graph = String(data["graph"] ?? this.nodes.get(nodeId)?.graph ?? "");
    const existing = this.nodes.get(nodeId);
    if (existing) {
      existing.state = state;
      existing.graph = graph || existing.graph;
      if (digest) existing.digest = digest;
    } else {
      this.nodes.set(nodeId, { nodeId, graph, state, digest });
    }
  }

  byGraph(graph: string): NodeProgress[] {
    return [...this.nodes.values()].filter((n) => n.graph === graph);
  }
}
