/**
 * Client-side validation mirroring the engine's format adapters, so obviously
 * malformed edits never produce a request. The server remains authoritative;
 * these rules only gate the submit button.
 */

import type { GateTicket, Pocket } from "./types.js";

export interface ValidationIssue {
  field: string;
  message: string;
}

export function validateCoordinates(value: unknown, field: string): ValidationIssue[] {
  if (!Array.isArray(value) || value.length !== 3) {
    return [{ field, message: "expected three numbers" }];
  }
  const issues: ValidationIssue[] = [];
  value.forEach((component, index) => {
    if (typeof component !== "number" || !Number.isFinite(component)) {
      issues.push({ field: `${field}[${index}]`, message: "not a finite number" });
    }
  });
  return issues;
}

export function validateStructureId(value: unknown, field: string): ValidationIssue[] {
  if (typeof value !== "string" || value.trim().length !== 4
      || !/^[0-9a-z]{4}$/i.test(value.trim())) {
    return [{ field, message: "expected a 4-character structure id" }];
  }
  return [];
}

export function validatePocket(value: unknown, field: string): ValidationIssue[] {
  if (typeof value !== "object" || value === null) {
    return [{ field, message: "expected a pocket record" }];
  }
  const pocket = value as Partial<Pocket>;
  const issues = [
    ...validateCoordinates(pocket.center, `${field}.center`),
    ...validateCoordinates(pocket.box, `${field}.box`),
  ];
  if (Array.isArray(pocket.box)) {
    pocket.box.forEach((dim, index) => {
      if (typeof dim === "number" && dim <= 0) {
        issues.push({ field: `${field}.box[${index}]`, message: "must be positive" });
      }
    });
  }
  if (typeof pocket.confidence !== "number"
      || pocket.confidence < 0 || pocket.confidence > 1) {
    issues.push({ field: `${field}.confidence`, message: "must be within [0, 1]" });
  }
  if (pocket.source !== "predicted" && pocket.source !== "reference_ligand") {
    issues.push({ field: `${field}.source`, message: "unknown pocket source" });
  }
  return issues;
}

/** Parse a "x, y, z" text field into a 3-vector, or report why not. */
export function parseCoordinateText(
  text: string,
  field: string,
): { value?: [number, number, number]; issues: ValidationIssue[] } {
  const parts = text.split(",").map((part) => part.trim()).filter((p) => p !== "");
  if (parts.length !== 3) {
    return { issues: [{ field, message: "expected three comma-separated numbers" }] };
  }
  const numbers = parts.map(Number);
  if (numbers.some((n) => !Number.isFinite(n))) {
    return { issues: [{ field, message: "contains a non-numeric value" }] };
  }
  return { value: numbers as [number, number, number], issues: [] };
}

/**
 * A patch may only touch the ticket's editable keys, and known value shapes
 * are checked against the adapter rules before anything is sent.
 */
export function validatePatch(
  ticket: GateTicket,
  patch: Record<string, unknown>,
): ValidationIssue[] {
  const issues: ValidationIssue[] = [];
  for (const key of Object.keys(patch)) {
    if (!ticket.editable.includes(key)) {
      issues.push({ field: key, message: "not an editable key on this gate" });
      continue;
    }
    const value = patch[key];
    if (key === "pocket") {
      issues.push(...validatePocket(value, key));
    } else if (key === "selected_structure") {
      issues.push(...validateStructureId(value, key));
    } else if (key === "confirm_top_n") {
      if (typeof value !== "number" || !Number.isInteger(value) || value <= 0) {
        issues.push({ field: key, message: "must be a positive integer" });
      }
    }
  }
  if (Object.keys(patch).length === 0) {
    issues.push({ field: "patch", message: "a correction must change something" });
  }
  return issues;
}
