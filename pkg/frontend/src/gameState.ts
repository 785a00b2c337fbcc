// Pure view-state reducer: the canvas is a projection of the latest
// server messages and nothing else (no client-side game rules), so a
// reload that replays the last full state message restores the view.

import type {
  BoardDoc,
  ProbsMsg,
  ServerMessage,
  SessionConfigDoc,
} from "./protocol.js";

export interface Toast {
  text: string;
  t: number; // session clock when raised
  kind: "info" | "mismatch" | "success" | "error";
}

export interface GripperAnimation {
  startT: number;
  resolveT: number;
  kind: string;
  target: number;
}

export interface SnapBack {
  from: number; // cell id the mismatch bounced off
  raisedT: number;
}

export interface ViewState {
  sessionId: string | null;
  board: BoardDoc | null;
  config: SessionConfigDoc | null;
  probs: ProbsMsg | null;
  tip: { x: number; y: number; phase: string } | null;
  gripper: GripperAnimation | null;
  snapBack: SnapBack | null;
  toast: Toast | null;
  summary: Record<string, number | string> | null;
  clock: number;
  connected: boolean;
}

export function initialViewState(): ViewState {
  return {
    sessionId: null,
    board: null,
    config: null,
    probs: null,
    tip: null,
    gripper: null,
    snapBack: null,
    toast: null,
    summary: null,
    clock: 0,
    connected: false,
  };
}

export function applyServerMessage(
  state: ViewState,
  msg: ServerMessage
): ViewState {
  const next = { ...state, clock: Math.max(state.clock, msg.t) };
  switch (msg.tag) {
    case "state":
      next.sessionId = msg.session;
      next.board = msg.board;
      next.config = msg.config;
      return next;
    case "probs":
      next.probs = msg;
      return next;
    case "tip":
      next.tip = { x: msg.x, y: msg.y, phase: msg.phase };
      return next;
    case "outcome":
      if (msg.event === "gripper_started") {
        next.gripper = {
          startT: msg.t,
          resolveT: msg.resolve_t ?? msg.t,
          kind: msg.kind ?? "",
          target: msg.target,
        };
      } else if (msg.event === "picked") {
        next.gripper = null;
        next.toast = { text: "piece picked", t: msg.t, kind: "success" };
      } else if (msg.event === "placed") {
        next.gripper = null;
        if (msg.result === "mismatch_returned_to_stock") {
          next.snapBack = { from: msg.target, raisedT: msg.t };
          next.toast = {
            text: "mismatch: piece returned to stock",
            t: msg.t,
            kind: "mismatch",
          };
        } else {
          next.snapBack = null;
          next.toast = { text: "piece placed", t: msg.t, kind: "success" };
        }
      }
      return next;
    case "summary":
      next.summary = msg.stats;
      next.toast = { text: "pattern complete", t: msg.t, kind: "success" };
      return next;
    case "error":
      next.toast = {
        text: `${msg.code}: ${msg.detail}`,
        t: Math.max(state.clock, msg.t),
        kind: "error",
      };
      return next;
  }
}

// 0..1 progress of the gripper countdown at session clock `t`
export function gripperProgress(g: GripperAnimation, t: number): number {
  const span = g.resolveT - g.startT;
  if (span <= 0) return 1;
  return Math.min(1, Math.max(0, (t - g.startT) / span));
}

// the candidate id whose halo is currently the largest on screen
export function largestHalo(probs: ProbsMsg | null): number | null {
  if (!probs) return null;
  let best: number | null = null;
  let bestP = -1;
  for (const [id, p] of Object.entries(probs.probs)) {
    const i = Number(id);
    if (p > bestP || (p === bestP && best !== null && i < best)) {
      best = i;
      bestP = p;
    }
  }
  return best;
}

export function blocksPerMinute(
  summary: Record<string, number | string> | null
): number | null {
  if (!summary) return null;
  const v = summary["blocks_per_min"];
  return typeof v === "number" ? v : null;
}
