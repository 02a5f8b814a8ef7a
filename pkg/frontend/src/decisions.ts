// Client-side legality checks and the truncation clamp preview.  The server
// remains authoritative; these mirror its rules so the UI can refuse to send
// obviously illegal decisions and can show what a dragged truncation will
// actually do under the minimum-travel guarantee.

import type { DecisionRequest, StagedDecision } from "./types.js";

export interface LegalityResult {
  ok: boolean;
  reasons: string[];
}

export function checkLegality(
  decision: StagedDecision,
  request: DecisionRequest,
  sequential: boolean,
): LegalityResult {
  const reasons: string[] = [];
  if (decision.requestId !== request.requestId) {
    reasons.push(`stale decision (request ${decision.requestId} vs ${request.requestId})`);
  }
  if (decision.activate.length === 0) {
    reasons.push("activation set must be non-empty");
  }
  if (sequential && decision.activate.length !== 1) {
    reasons.push("sequential scheduler activates exactly one robot");
  }
  for (const id of decision.activate) {
    if (!request.alive.includes(id)) {
      reasons.push(`robot ${id} cannot be activated`);
    }
  }
  for (const id of request.mustActivate ?? []) {
    if (!decision.activate.includes(id)) {
      reasons.push(`fairness: robot ${id} must be activated this round`);
    }
  }
  for (const [id, f] of Object.entries(decision.truncation)) {
    if (f < 0 || f > 1) reasons.push(`truncation for robot ${id} must be in [0,1]`);
  }
  for (const [id, frame] of Object.entries(decision.frames)) {
    if (!(frame.scale > 0)) reasons.push(`frame scale for robot ${id} must be positive`);
  }
  return { ok: reasons.length === 0, reasons };
}

/**
 * Distance actually travelled for a requested move length under the
 * minimum-travel rule: short moves always complete, interrupted long moves
 * still cover at least delta.
 */
export function clampPreview(
  requested: number,
  fraction: number,
  delta: number | null,
): number {
  if (delta === null || requested <= delta) return requested;
  return Math.min(requested, Math.max(delta, fraction * requested));
}
