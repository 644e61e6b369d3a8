/**
 * Wire types mirroring the session service's JSON bodies. Field names are
 * frozen for console compatibility; every value shown in the console comes
 * from one of these responses — nothing is recomputed client-side.
 */

export type TicketStatus =
  | "pending"
  | "approved"
  | "rejected"
  | "corrected"
  | "rolled_back";

export interface GateTicket {
  ticket_id: string;
  session: string;
  gate_id: string;
  node_id: string;
  rationale: string;
  proposed: Record<string, unknown>;
  editable: string[];
  checkpoint_id: string;
  status: TicketStatus;
  decision: Record<string, unknown>;
  decided_by: string;
  decided_at: number;
}

export interface SessionDescriptor {
  session_id: string;
  query: string;
  mode: string;
  status: string;
  pending_tickets: GateTicket[];
  report?: Record<string, unknown>;
}

export interface EngineEvent {
  seq: number;
  kind: string;
  data: Record<string, unknown>;
}

export interface ProvenanceRecord {
  artifact_id: string;
  parent_ids: string[];
  producer: string;
  params_digest: string;
  session: string;
  created_at: number;
  superseded: boolean;
}

export interface Pocket {
  center: [number, number, number];
  box: [number, number, number];
  confidence: number;
  source: "predicted" | "reference_ligand";
}

export type Decision =
  | { decision: "approve" }
  | { decision: "reject"; reason: string }
  | { decision: "correct"; patch: Record<string, unknown> }
  | { decision: "rollback"; checkpoint_id?: string; checkpoint_label?: string };

export type NodeState = "pending" | "running" | "done" | "failed" | "suspended";
