// Playground entry point: connect, render, let the human be the scheduler.

import { clampPreview } from "./decisions.js";
import { fitTransform, renderState, toScreen, LIGHT_COLORS } from "./render.js";
import { SessionSocket } from "./socket.js";
import { ViewState } from "./state.js";

const DEFAULT_CONFIG = {
  protocol: "contain",
  scheduler: "ssynch",
  rigidity: { kind: "nonRigid", delta: 0.3 },
  initial: { generator: "uniform", n: 7 },
  caps: { maxRounds: 5000 },
  seed: 1,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function start(): void {
  const canvas = el<HTMLCanvasElement>("arena");
  const ctx = canvas.getContext("2d")!;
  const view = new ViewState();
  const configBox = el<HTMLTextAreaElement>("config");
  configBox.value = JSON.stringify(DEFAULT_CONFIG, null, 2);

  let socket: SessionSocket | null = null;

  const redraw = () => {
    renderState(view, ctx, canvas.width, canvas.height);
    el("status").textContent = view.finished
      ? `finished: ${JSON.stringify(view.finished)}`
      : view.pending
        ? `round ${view.pending.round ?? "?"} — pick robots, then Step`
        : view.awaitingResult
          ? "stepping…"
          : "connect to begin";
    el("alerts").textContent = view.alerts
      .map((a) => `${a.kind} @t=${a.time} robots=${a.robots.join(",")}`)
      .join("\n");
    el("error").textContent = view.lastError
      ? `${view.lastError.code}: ${view.lastError.message}`
      : "";
    const legend = el("legend");
    legend.innerHTML = "";
    for (const light of view.palette) {
      const chip = document.createElement("span");
      chip.className = "chip";
      chip.style.background = LIGHT_COLORS[light] ?? "#000";
      chip.textContent = light;
      legend.appendChild(chip);
    }
    const scrub = el<HTMLInputElement>("scrub");
    scrub.max = String(Math.max(view.timeline.length - 1, 0));
    if (view.cursor === -1) scrub.value = scrub.max;
    const trunc = el<HTMLInputElement>("truncation");
    const preview = clampPreview(1.0, Number(trunc.value) / 100, view.nonRigidDelta);
    el("truncLabel").textContent = view.nonRigidDelta === null
      ? "rigid moves (no truncation)"
      : `truncation ${trunc.value}% of each move (clamped to >=${view.nonRigidDelta}; a unit move travels ${preview.toFixed(2)})`;
  };

  el<HTMLButtonElement>("connect").onclick = () => {
    const config = JSON.parse(configBox.value);
    const url = (el<HTMLInputElement>("server").value || "ws://127.0.0.1:7341") + "/session";
    socket = new SessionSocket(view, url, config);
    socket.onUpdate = redraw;
  };

  canvas.onclick = (ev) => {
    const current = view.viewed();
    if (!current || !view.pending) return;
    const rect = canvas.getBoundingClientRect();
    const mx = ev.clientX - rect.left;
    const my = ev.clientY - rect.top;
    // hit-test robots in screen space
    const t = fitTransform(current.state, canvas.width, canvas.height);
    let best: number | null = null;
    let bestDist = 12;
    for (const r of current.state.robots) {
      const [x, y] = toScreen(t, r.pos, canvas.height);
      const d = Math.hypot(x - mx, y - my);
      if (d < bestDist) {
        best = r.id;
        bestDist = d;
      }
    }
    if (best !== null) {
      view.toggleRobot(best);
      redraw();
    }
  };

  el<HTMLButtonElement>("step").onclick = () => {
    if (!socket || !view.pending) return;
    const trunc = el<HTMLInputElement>("truncation");
    const fraction = Number(trunc.value) / 100;
    view.truncation = Object.fromEntries(
      [...view.selection].map((id) => [String(id), fraction]),
    );
    const rot = Number(el<HTMLInputElement>("rotation").value || "0");
    const reflect = el<HTMLInputElement>("reflect").checked;
    const scale = Number(el<HTMLInputElement>("scale").value || "1");
    view.frames = Object.fromEntries(
      [...view.selection].map((id) => [String(id), { rotation: rot, reflect, scale }]),
    );
    const reasons = socket.stageAndSubmit();
    if (reasons.length) el("error").textContent = reasons.join("; ");
    redraw();
  };

  el<HTMLButtonElement>("export").onclick = () => socket?.requestExport();
  el<HTMLInputElement>("scrub").oninput = (ev) => {
    view.scrub(Number((ev.target as HTMLInputElement).value));
    redraw();
  };
  el<HTMLInputElement>("truncation").oninput = redraw;
  redraw();
}

window.addEventListener("DOMContentLoaded", start);
