// Wire protocol and view-state types, mirroring the session server schema.

export interface RobotView {
  id: number;
  pos: [number, number];
  light: string;
  terminated: boolean;
}

export interface HullView {
  boundary: [number, number][];
  vertexFlags: boolean[];
  isSegment: boolean;
}

export interface StatePayload {
  time: number;
  robots: RobotView[];
  hull: HullView | null;
  visible: [number, number][];
  blocked: [number, number][];
  pendingRequest: DecisionRequest | null;
  alerts: AlertView[];
}

export interface AlertView {
  kind: string;
  time: number;
  robots: number[];
}

export interface DecisionRequest {
  requestId: number;
  mode: "round" | "cycle";
  round?: number;
  robot?: number;
  alive: number[];
  mustActivate?: number[];
  fairnessWindow?: number;
  nonRigidDelta?: number | null;
}

export interface FrameSpec {
  rotation: number;
  reflect: boolean;
  scale: number;
}

export interface StagedDecision {
  requestId: number;
  activate: number[];
  frames: Record<string, FrameSpec>;
  truncation: Record<string, number>;
}

export type ServerMessage =
  | { type: "hello"; seq: number; session: string; protocol: string; scheduler: string; n: number; palette: string[] }
  | { type: "stateUpdate"; seq: number; session: string; stateJson: string; stateHash: string }
  | ({ type: "decisionRequest"; seq: number; session: string } & DecisionRequest)
  | { type: "stepResult"; seq: number; session: string; requestId: number | null; round?: number; activated?: number[]; realizedFraction?: Record<string, number>; terminated?: number[]; final?: boolean; verdict?: unknown }
  | { type: "violation"; seq: number; session: string; violation: AlertView }
  | { type: "traceExport"; seq: number; session: string; lines: string[] }
  | { type: "error"; seq: number; session: string; code: string; message: string };
