// Rendering splits into a pure draw-model builder (unit-testable) and a thin
// canvas adapter.  The model is derived only from the mirrored server state;
// renderState returns the hash of the exact stateJson it drew, which lets
// tests pin every rendered frame to a server stateUpdate.

import type { StatePayload } from "./types.js";
import type { ViewState } from "./state.js";

export const LIGHT_COLORS: Record<string, string> = {
  Off: "#9e9e9e",
  Vertex: "#d81b60",
  External: "#1e88e5",
  Adjusting: "#fb8c00",
  Done: "#43a047",
  None: "#6d4c41",
  Moved: "#8e24aa",
};

export interface Transform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export interface DrawShape {
  kind: "robot" | "hull" | "sightline" | "blocked" | "region" | "label";
  points: [number, number][];
  color: string;
  filled?: boolean;
  dashed?: boolean;
  selected?: boolean;
  text?: string;
}

export interface DrawModel {
  shapes: DrawShape[];
  transform: Transform;
  stateHash: string;
}

/** World-to-screen fit preserving aspect ratio, with a margin. */
export function fitTransform(
  state: StatePayload,
  width: number,
  height: number,
  margin = 30,
): Transform {
  const xs = state.robots.map((r) => r.pos[0]);
  const ys = state.robots.map((r) => r.pos[1]);
  const minX = Math.min(...xs), maxX = Math.max(...xs);
  const minY = Math.min(...ys), maxY = Math.max(...ys);
  const spanX = Math.max(maxX - minX, 1e-9);
  const spanY = Math.max(maxY - minY, 1e-9);
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  return {
    scale,
    offsetX: margin - minX * scale + (width - 2 * margin - spanX * scale) / 2,
    offsetY: margin - minY * scale + (height - 2 * margin - spanY * scale) / 2,
  };
}

export function toScreen(t: Transform, p: [number, number], height: number): [number, number] {
  // world y axis points up; canvas y points down
  return [p[0] * t.scale + t.offsetX, height - (p[1] * t.scale + t.offsetY)];
}

function hullNeighborsOf(
  state: StatePayload,
  pos: [number, number],
): [[number, number], [number, number]] | null {
  const hull = state.hull;
  if (!hull || hull.boundary.length < 3 || hull.isSegment) return null;
  const i = hull.boundary.findIndex((q) => q[0] === pos[0] && q[1] === pos[1]);
  if (i < 0) return null;
  const n = hull.boundary.length;
  return [hull.boundary[(i + 1) % n], hull.boundary[(i - 1 + n) % n]];
}

/**
 * One-move reachable triangle of a selected corner robot: from its position
 * halfway toward each hull neighbor.  Shown as a preview so a human
 * adversary can judge what activating the robot can do.
 */
export function movementRegion(
  state: StatePayload,
  robotId: number,
): [number, number][] | null {
  const robot = state.robots.find((r) => r.id === robotId);
  if (!robot || !state.hull) return null;
  const i = state.hull.boundary.findIndex(
    (q) => q[0] === robot.pos[0] && q[1] === robot.pos[1],
  );
  if (i < 0 || !state.hull.vertexFlags[i]) return null;
  const nb = hullNeighborsOf(state, robot.pos);
  if (!nb) return null;
  const [a, b] = nb;
  const p = robot.pos;
  return [
    p,
    [(p[0] + a[0]) / 2, (p[1] + a[1]) / 2],
    [(p[0] + b[0]) / 2, (p[1] + b[1]) / 2],
  ];
}

export function buildDrawModel(view: ViewState, width: number, height: number): DrawModel | null {
  const current = view.viewed();
  if (!current) return null;
  const state = current.state;
  const t = fitTransform(state, width, height);
  const shapes: DrawShape[] = [];

  if (state.hull) {
    const cycle = [...state.hull.boundary];
    if (!state.hull.isSegment && cycle.length > 2) cycle.push(cycle[0]);
    shapes.push({ kind: "hull", points: cycle, color: "#bbbbbb" });
  }
  const byId = new Map(state.robots.map((r) => [r.id, r] as const));
  for (const [i, j] of state.visible) {
    const a = byId.get(i), b = byId.get(j);
    if (a && b) shapes.push({ kind: "sightline", points: [a.pos, b.pos], color: "#e8f0e8" });
  }
  for (const [i, j] of state.blocked) {
    const a = byId.get(i), b = byId.get(j);
    if (a && b) {
      shapes.push({ kind: "blocked", points: [a.pos, b.pos], color: "#cc4444", dashed: true });
    }
  }
  for (const id of view.selection) {
    const region = movementRegion(state, id);
    if (region) shapes.push({ kind: "region", points: region, color: "#dddddd", filled: true });
  }
  const flashing = new Set(view.alerts.flatMap((a) => a.robots));
  for (const r of state.robots) {
    shapes.push({
      kind: "robot",
      points: [r.pos],
      color: flashing.has(r.id) ? "#ff0000" : (LIGHT_COLORS[r.light] ?? "#000000"),
      selected: view.selection.has(r.id),
      filled: true,
      text: `${r.id}${r.terminated ? "✓" : ""}`,
    });
  }
  return { shapes, transform: t, stateHash: current.stateHash };
}

/** Draw to a canvas 2D context; returns the hash of the state it rendered. */
export function renderState(
  view: ViewState,
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
): string | null {
  const model = buildDrawModel(view, width, height);
  if (!model) return null;
  ctx.clearRect(0, 0, width, height);
  for (const shape of model.shapes) {
    const pts = shape.points.map((p) => toScreen(model.transform, p, height));
    ctx.setLineDash(shape.dashed ? [4, 4] : []);
    if (shape.kind === "robot") {
      const [x, y] = pts[0];
      ctx.beginPath();
      ctx.arc(x, y, shape.selected ? 9 : 6, 0, 2 * Math.PI);
      ctx.fillStyle = shape.color;
      ctx.fill();
      if (shape.selected) {
        ctx.strokeStyle = "#000";
        ctx.lineWidth = 2;
        ctx.stroke();
      }
      if (shape.text) {
        ctx.fillStyle = "#333";
        ctx.font = "10px sans-serif";
        ctx.fillText(shape.text, x + 8, y - 8);
      }
    } else {
      ctx.beginPath();
      ctx.moveTo(pts[0][0], pts[0][1]);
      for (const [x, y] of pts.slice(1)) ctx.lineTo(x, y);
      if (shape.filled) {
        ctx.closePath();
        ctx.fillStyle = shape.color + "88";
        ctx.fill();
      } else {
        ctx.strokeStyle = shape.color;
        ctx.lineWidth = 1;
        ctx.stroke();
      }
    }
  }
  ctx.setLineDash([]);
  return model.stateHash;
}
