// Strict request/response socket wrapper: input stays disabled between a
// submitted decision and its stepResult, and decisions always answer the
// server's pending request.

import { checkLegality } from "./decisions.js";
import type { ViewState } from "./state.js";
import type { ServerMessage, StagedDecision } from "./types.js";

export class SessionSocket {
  private ws: WebSocket;
  onUpdate: () => void = () => undefined;

  constructor(
    private view: ViewState,
    url: string,
    config: unknown,
    private makeSocket: (url: string) => WebSocket = (u) => new WebSocket(u),
  ) {
    this.ws = this.makeSocket(url);
    this.ws.onopen = () => {
      this.ws.send(JSON.stringify({ type: "open", config }));
    };
    this.ws.onmessage = (ev: MessageEvent) => {
      const msg = JSON.parse(String(ev.data)) as ServerMessage;
      this.view.apply(msg);
      this.onUpdate();
    };
  }

  /** Validate the staged decision and submit it; returns blocking reasons. */
  stageAndSubmit(): string[] {
    const view = this.view;
    if (view.awaitingResult) return ["waiting for the previous step result"];
    const request = view.pending;
    const staged: StagedDecision | null = view.staged();
    if (!request || !staged) return ["no pending decision request"];
    const legality = checkLegality(staged, request, view.scheduler === "sequential");
    if (!legality.ok) return legality.reasons;
    view.awaitingResult = true;
    view.pending = null;
    this.ws.send(JSON.stringify({ type: "decision", ...staged }));
    return [];
  }

  requestExport(): void {
    this.ws.send(JSON.stringify({ type: "export" }));
  }
}
