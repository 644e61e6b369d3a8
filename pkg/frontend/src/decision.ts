/**
 * Decision builder: turns form state into exactly one decision payload,
 * refusing to build anything client-side validation rejects. Server
 * rejections surface as ApiError without losing the form state.
 */

import type { Decision, GateTicket } from "./types.js";
import { ValidationIssue, validatePatch } from "./validate.js";

export type FormState =
  | { kind: "approve" }
  | { kind: "reject"; reason: string }
  | { kind: "correct"; patch: Record<string, unknown> }
  | { kind: "rollback"; checkpointId?: string; checkpointLabel?: string };

export interface BuildResult {
  decision?: Decision;
  issues: ValidationIssue[];
}

export function buildDecision(ticket: GateTicket, form: FormState): BuildResult {
  switch (form.kind) {
    case "approve":
      return { decision: { decision: "approve" }, issues: [] };
    case "reject": {
      if (!form.reason.trim()) {
        return { issues: [{ field: "reason", message: "a rejection needs a reason" }] };
      }
      return { decision: { decision: "reject", reason: form.reason.trim() }, issues: [] };
    }
    case "correct": {
      const issues = validatePatch(ticket, form.patch);
      if (issues.length > 0) {
        return { issues };
      }
      return { decision: { decision: "correct", patch: form.patch }, issues: [] };
    }
    case "rollback": {
      if (!form.checkpointId && !form.checkpointLabel) {
        return { issues: [{ field: "checkpoint", message: "choose a checkpoint" }] };
      }
      return {
        decision: {
          decision: "rollback",
          ...(form.checkpointId
            ? { checkpoint_id: form.checkpointId }
            : { checkpoint_label: form.checkpointLabel }),
        },
        issues: [],
      };
    }
  }
}
