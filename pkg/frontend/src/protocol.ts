// Wire protocol: the exact JSON messages the session service speaks.
// The client never sends a tag the server does not define.

export interface BoardCell {
  cell_id: number;
  type: number;
  orient: number;
  completed: boolean;
}

export interface BoardDoc {
  version: number;
  seed: number;
  cells: BoardCell[];
  stock: number[];
  held: [number, number] | null;
}

export interface SessionConfigDoc {
  mode: string;
  threshold: number;
  gripper_latency: number;
  px_per_mm: number;
  cell_size: number;
  stock_slots: [number, number][];
  pattern_cells: [number, number][];
}

export interface StateMsg {
  tag: "state";
  t: number;
  session: string;
  board: BoardDoc;
  config: SessionConfigDoc;
  changed: unknown;
}

export interface ProbsMsg {
  tag: "probs";
  t: number;
  kind: "pick" | "place";
  probs: Record<string, number>;
  chosen: number;
  decided: boolean;
}

export interface TipMsg {
  tag: "tip";
  t: number;
  x: number;
  y: number;
  phase: string;
}

export interface OutcomeMsg {
  tag: "outcome";
  t: number;
  event: "gripper_started" | "picked" | "placed";
  target: number;
  kind?: string;
  resolve_t?: number;
  result?: string | null;
}

export interface SummaryMsg {
  tag: "summary";
  t: number;
  stats: Record<string, number | string>;
}

export interface ErrorMsg {
  tag: "error";
  t: number;
  code: string;
  detail: string;
}

export type ServerMessage =
  | StateMsg
  | ProbsMsg
  | TipMsg
  | OutcomeMsg
  | SummaryMsg
  | ErrorMsg;

const SERVER_TAGS = new Set([
  "state",
  "probs",
  "tip",
  "outcome",
  "summary",
  "error",
]);

export function parseServerMessage(raw: string): ServerMessage | null {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const tag = (doc as { tag?: unknown }).tag;
  if (typeof tag !== "string" || !SERVER_TAGS.has(tag)) return null;
  return doc as ServerMessage;
}

// client -> server builders; t is the session clock in seconds

export function startMsg(seed: number, mode: string, resume?: string) {
  return resume === undefined
    ? { tag: "start", t: 0, seed, mode }
    : { tag: "start", t: 0, seed, mode, resume };
}

export function gazeMsg(t: number, x: number, y: number, valid = true) {
  return { tag: "gaze", t, x, y, valid };
}

export function triggerMsg(t: number) {
  return { tag: "trigger", t };
}

export function rotateMsg(t: number) {
  return { tag: "rotate", t };
}

export function setModeMsg(t: number, mode: string) {
  return { tag: "set_mode", t, mode };
}
