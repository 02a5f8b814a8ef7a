import { describe, expect, it } from "vitest";
import { checkLegality, clampPreview } from "../src/decisions.js";
import type { DecisionRequest } from "../src/types.js";

const request: DecisionRequest = {
  requestId: 3,
  mode: "round",
  round: 5,
  alive: [0, 1, 2, 3],
  mustActivate: [2],
  fairnessWindow: 8,
  nonRigidDelta: 0.3,
};

describe("checkLegality", () => {
  it("accepts a well-formed decision", () => {
    const res = checkLegality(
      { requestId: 3, activate: [0, 2], frames: {}, truncation: { "0": 0.5 } },
      request, false);
    expect(res.ok).toBe(true);
  });

  it("rejects empty activation", () => {
    const res = checkLegality(
      { requestId: 3, activate: [], frames: {}, truncation: {} }, request, false);
    expect(res.ok).toBe(false);
    expect(res.reasons.join(" ")).toMatch(/non-empty/);
  });

  it("rejects dead robots, stale requests and fairness violations", () => {
    const res = checkLegality(
      { requestId: 2, activate: [9], frames: {}, truncation: {} }, request, false);
    expect(res.reasons.join(" ")).toMatch(/stale/);
    expect(res.reasons.join(" ")).toMatch(/robot 9/);
    expect(res.reasons.join(" ")).toMatch(/fairness: robot 2/);
  });

  it("enforces singleton activation for sequential runs", () => {
    const res = checkLegality(
      { requestId: 3, activate: [0, 2], frames: {}, truncation: {} }, request, true);
    expect(res.reasons.join(" ")).toMatch(/exactly one/);
  });

  it("rejects out-of-range truncation and bad frames", () => {
    const res = checkLegality(
      { requestId: 3, activate: [2], frames: { "2": { rotation: 0, reflect: false, scale: 0 } },
        truncation: { "2": 1.5 } },
      request, false);
    expect(res.reasons.join(" ")).toMatch(/truncation/);
    expect(res.reasons.join(" ")).toMatch(/scale/);
  });
});

describe("clampPreview", () => {
  it("lets short moves complete", () => {
    expect(clampPreview(0.2, 0.0, 0.3)).toBe(0.2);
  });
  it("clamps interrupted long moves to the guaranteed minimum", () => {
    expect(clampPreview(1.0, 0.1, 0.3)).toBeCloseTo(0.3);
  });
  it("passes through the requested fraction when above the minimum", () => {
    expect(clampPreview(1.0, 0.4, 0.3)).toBeCloseTo(0.4);
  });
  it("ignores the clamp for rigid runs", () => {
    expect(clampPreview(1.0, 0.1, null)).toBe(1.0);
  });
});
