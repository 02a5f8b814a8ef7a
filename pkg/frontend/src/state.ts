// ViewState: a read-only mirror of the server's latest stateUpdate plus the
// user's staged decision.  The client never simulates; every rendered frame
// comes verbatim from a server payload, and the raw stateJson string is kept
// so renders can be hash-verified against the server's stateHash.

import { sha256Hex } from "./hash.js";
import type {
  AlertView,
  DecisionRequest,
  ServerMessage,
  StatePayload,
  StagedDecision,
} from "./types.js";

export interface TimelineEntry {
  seq: number;
  stateJson: string;
  stateHash: string;
}

export class ViewState {
  session = "";
  protocol = "";
  scheduler = "";
  palette: string[] = [];
  state: StatePayload | null = null;
  stateJson = "";
  stateHash = "";
  pending: DecisionRequest | null = null;
  selection = new Set<number>();
  truncation: Record<string, number> = {};
  frames: Record<string, { rotation: number; reflect: boolean; scale: number }> = {};
  alerts: AlertView[] = [];
  timeline: TimelineEntry[] = [];
  cursor = -1; // timeline scrub position; -1 = live
  finished: unknown = null;
  lastError: { code: string; message: string } | null = null;
  realized: Record<string, number> = {};
  awaitingResult = false;
  nonRigidDelta: number | null = null;

  apply(msg: ServerMessage): void {
    switch (msg.type) {
      case "hello":
        this.session = msg.session;
        this.protocol = msg.protocol;
        this.scheduler = msg.scheduler;
        this.palette = msg.palette;
        break;
      case "stateUpdate": {
        const computed = sha256Hex(msg.stateJson);
        if (computed !== msg.stateHash) {
          throw new Error(
            `stateUpdate hash mismatch: computed ${computed}, server says ${msg.stateHash}`,
          );
        }
        this.state = JSON.parse(msg.stateJson) as StatePayload;
        this.stateJson = msg.stateJson;
        this.stateHash = msg.stateHash;
        this.timeline.push({ seq: msg.seq, stateJson: msg.stateJson, stateHash: msg.stateHash });
        this.cursor = -1;
        break;
      }
      case "decisionRequest":
        this.pending = msg;
        this.nonRigidDelta = msg.nonRigidDelta ?? null;
        this.selection = new Set(msg.mustActivate ?? []);
        this.truncation = {};
        this.frames = {};
        this.awaitingResult = false;
        break;
      case "stepResult":
        this.realized = msg.realizedFraction ?? {};
        this.awaitingResult = false;
        if (msg.final) this.finished = msg.verdict ?? null;
        break;
      case "violation":
        this.alerts.push(msg.violation);
        break;
      case "error":
        this.lastError = { code: msg.code, message: msg.message };
        this.awaitingResult = false;
        break;
      case "traceExport":
        break;
    }
  }

  /** State shown on screen: the live mirror, or a timeline scrub position. */
  viewed(): { state: StatePayload; stateJson: string; stateHash: string } | null {
    if (this.cursor >= 0 && this.cursor < this.timeline.length) {
      const entry = this.timeline[this.cursor];
      return {
        state: JSON.parse(entry.stateJson) as StatePayload,
        stateJson: entry.stateJson,
        stateHash: entry.stateHash,
      };
    }
    if (this.state === null) return null;
    return { state: this.state, stateJson: this.stateJson, stateHash: this.stateHash };
  }

  scrub(index: number): void {
    this.cursor = index >= this.timeline.length - 1 ? -1 : Math.max(-1, index);
  }

  toggleRobot(id: number): void {
    if (!this.pending) return;
    if (this.pending.mustActivate?.includes(id)) return; // fairness keeps it in
    if (this.selection.has(id)) this.selection.delete(id);
    else if (this.pending.alive.includes(id)) this.selection.add(id);
  }

  staged(): StagedDecision | null {
    if (!this.pending) return null;
    return {
      requestId: this.pending.requestId,
      activate: [...this.selection].sort((a, b) => a - b),
      frames: this.frames,
      truncation: this.truncation,
    };
  }
}
