// Canvas projection of the view state: board, halos, tip, gripper
// countdown, mismatch snap-back, toasts. Pure drawing; no game logic.

import { BoardMapping, haloRadiusMm, mmToPx } from "./mapping.js";
import { gripperProgress, ViewState } from "./gameState.js";

const TIP_COLORS: Record<string, string> = {
  crouched: "#9aa0a6",
  deciding: "#e6b800",
  committed: "#d62728",
  gripping: "#ff7f0e",
};

const SNAP_BACK_MS = 350;
const TOAST_MS = 2500;

export class Renderer {
  private snapSeenWall: number | null = null;
  private snapSeenT: number | null = null;
  private toastSeenWall: number | null = null;
  private toastSeenT: number | null = null;

  constructor(
    private readonly ctx: CanvasRenderingContext2D,
    private readonly now: () => number = () => performance.now()
  ) {}

  draw(
    state: ViewState,
    mapping: BoardMapping,
    pointerPx: [number, number] | null,
    hideProbs: boolean
  ): void {
    const { ctx } = this;
    ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
    if (!state.board || !state.config) {
      ctx.fillStyle = "#666";
      ctx.font = "16px sans-serif";
      ctx.fillText("waiting for session state...", 20, 40);
      return;
    }
    const cfg = state.config;
    const cellPx = cfg.cell_size * mapping.pxPerMm;

    if (!hideProbs) this.drawHalos(state, mapping);

    for (const cell of state.board.cells) {
      const [x, y] = mmToPx(mapping, cfg.pattern_cells[cell.cell_id]);
      this.drawPiece(x, y, cellPx, cell.type, cell.orient,
                     cell.completed ? 1.0 : 0.3);
      ctx.strokeStyle = cell.completed ? "#2a7" : "#bbb";
      ctx.lineWidth = cell.completed ? 2 : 1;
      ctx.strokeRect(x - cellPx / 2, y - cellPx / 2, cellPx, cellPx);
    }
    state.board.stock.forEach((pieceType, slot) => {
      const [x, y] = mmToPx(mapping, cfg.stock_slots[slot]);
      this.drawPiece(x, y, cellPx, pieceType, 0, 1.0);
      ctx.strokeStyle = "#d08080";
      ctx.lineWidth = 2;
      ctx.strokeRect(x - cellPx / 2, y - cellPx / 2, cellPx, cellPx);
    });

    this.drawSnapBack(state, mapping, cellPx);
    if (state.board.held && pointerPx) {
      const [ht, ho] = state.board.held;
      this.drawPiece(pointerPx[0], pointerPx[1], cellPx * 0.8, ht, ho, 0.9);
    }
    this.drawGripper(state, mapping);
    this.drawTip(state, mapping);
    if (pointerPx) {
      ctx.strokeStyle = "#444";
      ctx.lineWidth = 1;
      ctx.beginPath();
      ctx.moveTo(pointerPx[0] - 8, pointerPx[1]);
      ctx.lineTo(pointerPx[0] + 8, pointerPx[1]);
      ctx.moveTo(pointerPx[0], pointerPx[1] - 8);
      ctx.lineTo(pointerPx[0], pointerPx[1] + 8);
      ctx.stroke();
    }
    this.drawToast(state);
  }

  // the four monochrome block patterns, rotated by quarter turns
  private drawPiece(
    cx: number,
    cy: number,
    size: number,
    pieceType: number,
    orient: number,
    alpha: number
  ): void {
    const { ctx } = this;
    const h = size / 2;
    ctx.save();
    ctx.translate(cx, cy);
    ctx.rotate((orient * Math.PI) / 2);
    ctx.globalAlpha = alpha;
    ctx.fillStyle = "#fff";
    ctx.fillRect(-h, -h, size, size);
    ctx.fillStyle = "#111";
    ctx.beginPath();
    switch (pieceType) {
      case 1: // diagonal half
        ctx.moveTo(-h, -h);
        ctx.lineTo(h, -h);
        ctx.lineTo(-h, h);
        ctx.closePath();
        break;
      case 2: // left half
        ctx.rect(-h, -h, h, size);
        break;
      case 3: // L: everything except one quadrant
        ctx.rect(-h, -h, size, h);
        ctx.rect(-h, 0, h, h);
        break;
      default: // corner square
        ctx.rect(-h, -h, h, h);
        break;
    }
    ctx.fill();
    ctx.restore();
    ctx.globalAlpha = 1;
  }

  private drawHalos(state: ViewState, mapping: BoardMapping): void {
    const probs = state.probs;
    const cfg = state.config;
    if (!probs || !cfg) return;
    const positions =
      probs.kind === "pick" ? cfg.stock_slots : cfg.pattern_cells;
    const { ctx } = this;
    for (const [id, p] of Object.entries(probs.probs)) {
      const pos = positions[Number(id)];
      if (!pos) continue;
      const [x, y] = mmToPx(mapping, pos);
      const r = haloRadiusMm(p, cfg.cell_size) * mapping.pxPerMm;
      const chosen = Number(id) === probs.chosen;
      ctx.beginPath();
      ctx.arc(x, y, r, 0, 2 * Math.PI);
      ctx.fillStyle = chosen && probs.decided
        ? "rgba(214, 39, 40, 0.18)"
        : "rgba(31, 119, 180, 0.15)";
      ctx.fill();
      ctx.strokeStyle = chosen ? "#d62728" : "#1f77b4";
      ctx.lineWidth = chosen ? 2.5 : 1.5;
      ctx.stroke();
    }
  }

  private drawTip(state: ViewState, mapping: BoardMapping): void {
    if (!state.tip) return;
    const [x, y] = mmToPx(mapping, [state.tip.x, state.tip.y]);
    const { ctx } = this;
    ctx.beginPath();
    ctx.arc(x, y, 10, 0, 2 * Math.PI);
    ctx.fillStyle = TIP_COLORS[state.tip.phase] ?? "#555";
    ctx.fill();
    ctx.strokeStyle = "#333";
    ctx.lineWidth = 2;
    ctx.stroke();
  }

  private drawGripper(state: ViewState, mapping: BoardMapping): void {
    const g = state.gripper;
    const cfg = state.config;
    if (!g || !cfg) return;
    const pos =
      g.kind === "pick" ? cfg.stock_slots[g.target] : cfg.pattern_cells[g.target];
    if (!pos) return;
    const [x, y] = mmToPx(mapping, pos);
    const progress = gripperProgress(g, state.clock);
    const { ctx } = this;
    ctx.beginPath();
    ctx.arc(x, y, 0.75 * cfg.cell_size * mapping.pxPerMm, -Math.PI / 2,
            -Math.PI / 2 + 2 * Math.PI * progress);
    ctx.strokeStyle = "#ff7f0e";
    ctx.lineWidth = 5;
    ctx.stroke();
    const remaining = Math.max(0, g.resolveT - state.clock);
    ctx.fillStyle = "#ff7f0e";
    ctx.font = "bold 13px sans-serif";
    ctx.fillText(`${remaining.toFixed(1)}s`, x + 12, y - 12);
  }

  private drawSnapBack(
    state: ViewState,
    mapping: BoardMapping,
    cellPx: number
  ): void {
    const snap = state.snapBack;
    const cfg = state.config;
    const board = state.board;
    if (!snap || !cfg || !board) {
      this.snapSeenWall = null;
      return;
    }
    if (this.snapSeenT !== snap.raisedT) {
      this.snapSeenT = snap.raisedT;
      this.snapSeenWall = this.now();
    }
    const elapsed = this.now() - (this.snapSeenWall ?? 0);
    const k = Math.min(1, elapsed / SNAP_BACK_MS);
    const cell = board.cells[snap.from];
    if (!cell) return;
    const slot = board.stock.indexOf(cell.type);
    const from = mmToPx(mapping, cfg.pattern_cells[snap.from]);
    const to = mmToPx(mapping, cfg.stock_slots[slot < 0 ? 0 : slot]);
    const x = from[0] + (to[0] - from[0]) * k;
    const y = from[1] + (to[1] - from[1]) * k;
    this.drawPiece(x, y, cellPx * 0.8, cell.type, 0, 0.7 * (1 - k) + 0.2);
  }

  private drawToast(state: ViewState): void {
    const toast = state.toast;
    if (!toast) return;
    if (this.toastSeenT !== toast.t) {
      this.toastSeenT = toast.t;
      this.toastSeenWall = this.now();
    }
    const elapsed = this.now() - (this.toastSeenWall ?? 0);
    if (elapsed > TOAST_MS) return;
    const { ctx } = this;
    const colors: Record<string, string> = {
      mismatch: "#b3261e",
      success: "#1e7b34",
      info: "#444",
      error: "#b3261e",
    };
    ctx.font = "bold 15px sans-serif";
    const width = ctx.measureText(toast.text).width + 24;
    const x = (ctx.canvas.width - width) / 2;
    ctx.globalAlpha = Math.min(1, 2 - (2 * elapsed) / TOAST_MS);
    ctx.fillStyle = "#fff";
    ctx.fillRect(x, 10, width, 28);
    ctx.strokeStyle = colors[toast.kind] ?? "#444";
    ctx.strokeRect(x, 10, width, 28);
    ctx.fillStyle = colors[toast.kind] ?? "#444";
    ctx.fillText(toast.text, x + 12, 29);
    ctx.globalAlpha = 1;
  }
}
