import { describe, expect, it } from "vitest";
import { sha256Hex } from "../src/hash.js";
import { ViewState } from "../src/state.js";
import type { ServerMessage, StatePayload } from "../src/types.js";

function statePayload(time: number): { json: string; hash: string; state: StatePayload } {
  const state: StatePayload = {
    time,
    robots: [
      { id: 0, pos: [0, 0], light: "Off", terminated: false },
      { id: 1, pos: [4, 0], light: "External", terminated: false },
      { id: 2, pos: [0, 4], light: "Off", terminated: false },
    ],
    hull: {
      boundary: [[0, 0], [4, 0], [0, 4]],
      vertexFlags: [true, true, true],
      isSegment: false,
    },
    visible: [[0, 1], [0, 2], [1, 2]],
    blocked: [],
    pendingRequest: null,
    alerts: [],
  };
  const json = JSON.stringify(state);
  return { json, hash: sha256Hex(json), state };
}

function update(seq: number, time: number): ServerMessage {
  const { json, hash } = statePayload(time);
  return { type: "stateUpdate", seq, session: "s", stateJson: json, stateHash: hash };
}

describe("ViewState", () => {
  it("mirrors hello and state updates", () => {
    const vs = new ViewState();
    vs.apply({ type: "hello", seq: 1, session: "abc", protocol: "contain",
               scheduler: "ssynch", n: 3, palette: ["Off", "External", "Adjusting"] });
    vs.apply(update(2, 0));
    expect(vs.session).toBe("abc");
    expect(vs.state?.robots).toHaveLength(3);
    expect(vs.viewed()?.stateHash).toBe(vs.stateHash);
  });

  it("rejects a corrupted state update", () => {
    const vs = new ViewState();
    const msg = update(2, 0) as Extract<ServerMessage, { type: "stateUpdate" }>;
    const tampered = { ...msg, stateJson: msg.stateJson.replace("4", "5") };
    expect(() => vs.apply(tampered)).toThrow(/hash mismatch/);
  });

  it("keeps a scrubbable read-only timeline", () => {
    const vs = new ViewState();
    vs.apply(update(1, 0));
    vs.apply(update(2, 1));
    vs.apply(update(3, 2));
    expect(vs.timeline).toHaveLength(3);
    vs.scrub(0);
    expect(vs.viewed()?.state.time).toBe(0);
    // scrubbing never mutates the live mirror
    expect(vs.state?.time).toBe(2);
    vs.scrub(2);
    expect(vs.cursor).toBe(-1); // back to live
  });

  it("stages selections subject to the pending request", () => {
    const vs = new ViewState();
    vs.apply(update(1, 0));
    vs.apply({ type: "decisionRequest", seq: 2, session: "s", requestId: 7,
               mode: "round", round: 0, alive: [0, 1, 2], mustActivate: [1],
               fairnessWindow: 6, nonRigidDelta: 0.3 });
    expect([...vs.selection]).toEqual([1]); // fairness pre-selected
    vs.toggleRobot(0);
    vs.toggleRobot(1); // required: cannot deselect
    vs.toggleRobot(9); // not alive: ignored
    const staged = vs.staged();
    expect(staged?.requestId).toBe(7);
    expect(staged?.activate).toEqual([0, 1]);
  });

  it("collects violations and errors", () => {
    const vs = new ViewState();
    vs.apply({ type: "violation", seq: 3, session: "s",
               violation: { kind: "Collision", time: 4, robots: [1, 2] } });
    vs.apply({ type: "error", seq: 4, session: "s", code: "StaleDecision",
               message: "expected decision for request 3" });
    expect(vs.alerts[0].kind).toBe("Collision");
    expect(vs.lastError?.code).toBe("StaleDecision");
  });
});
