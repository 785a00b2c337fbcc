// Console wiring: pointer sampling, socket, controls, render loop.

import { applyServerMessage, initialViewState, ViewState } from "./gameState.js";
import { canvasSize, makeMapping, pxToMm, BoardMapping } from "./mapping.js";
import { ConsoleConnection } from "./net.js";
import { rotateMsg, setModeMsg, triggerMsg, gazeMsg } from "./protocol.js";
import { Renderer } from "./render.js";
import { browserHooks, GazeSampler } from "./sampler.js";

const TICK_KEY = "gazeintent.tick";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("board");
const ctx = canvas.getContext("2d")!;
const renderer = new Renderer(ctx);

let state: ViewState = initialViewState();
let mapping: BoardMapping | null = null;
let pointerPx: [number, number] | null = null;
let connection: ConsoleConnection | null = null;
let sampler: GazeSampler | null = null;

const statusEl = el<HTMLSpanElement>("status");
const hzEl = el<HTMLSpanElement>("hz");
const summaryEl = el<HTMLDivElement>("summary");
const banner = el<HTMLDivElement>("reconnect-banner");
const modeSelect = el<HTMLSelectElement>("mode");
const jitterToggle = el<HTMLInputElement>("jitter");
const probsToggle = el<HTMLInputElement>("hide-probs");

function applyMessage(msg: Parameters<typeof applyServerMessage>[1]): void {
  state = applyServerMessage(state, msg);
  if (msg.tag === "state" && mapping === null) {
    mapping = makeMapping(msg.config.px_per_mm);
    const [w, h] = canvasSize(
      mapping,
      msg.config.pattern_cells,
      msg.config.stock_slots,
      msg.config.cell_size
    );
    canvas.width = w;
    canvas.height = h;
  }
}

function pointerMm(): [number, number] | null {
  if (pointerPx === null || mapping === null) return null;
  return pxToMm(mapping, pointerPx);
}

function connect(): void {
  connection?.close();
  sampler?.stop();
  state = initialViewState();
  mapping = null;

  const url = el<HTMLInputElement>("server-url").value;
  const seed = Number(el<HTMLInputElement>("seed").value) || 0;
  const mode = modeSelect.value;
  const startTick = Number(sessionStorage.getItem(TICK_KEY) ?? "0");

  connection = new ConsoleConnection({
    url,
    seed,
    mode,
    storage: sessionStorage,
    onMessage: applyMessage,
    onStatus: (connected, attempt) => {
      state = { ...state, connected };
      statusEl.textContent = connected ? "connected" : "disconnected";
      statusEl.className = connected ? "ok" : "bad";
      banner.style.display = connected ? "none" : "block";
      banner.textContent = connected
        ? ""
        : `connection lost, retrying (attempt ${attempt})... the session ` +
          "is preserved on the server";
    },
  });
  connection.connect();

  sampler = new GazeSampler(
    browserHooks,
    pointerMm,
    (sample) => {
      connection?.send(gazeMsg(sample.t, sample.x, sample.y, sample.valid));
      sessionStorage.setItem(TICK_KEY, String(sampler?.currentTick ?? 0));
    },
    startTick
  );
  sampler.jitterEnabled = jitterToggle.checked;
  sampler.start();
}

canvas.addEventListener("mousemove", (event) => {
  const rect = canvas.getBoundingClientRect();
  pointerPx = [event.clientX - rect.left, event.clientY - rect.top];
});
canvas.addEventListener("mouseleave", () => {
  pointerPx = null;
});
canvas.addEventListener("click", () => {
  if (connection && sampler) connection.send(triggerMsg(sampler.lastEmittedT()));
});
canvas.addEventListener("contextmenu", (event) => {
  event.preventDefault();
  if (connection && sampler) connection.send(rotateMsg(sampler.lastEmittedT()));
});
window.addEventListener("keydown", (event) => {
  if (event.key === "r" && connection && sampler) {
    connection.send(rotateMsg(sampler.lastEmittedT()));
  }
});

modeSelect.addEventListener("change", () => {
  if (connection && sampler) {
    connection.send(setModeMsg(sampler.lastEmittedT(), modeSelect.value));
  }
});
jitterToggle.addEventListener("change", () => {
  if (sampler) sampler.jitterEnabled = jitterToggle.checked;
});
el<HTMLButtonElement>("connect").addEventListener("click", () => {
  sessionStorage.removeItem("gazeintent.session");
  sessionStorage.removeItem(TICK_KEY);
  connect();
});

function renderSummary(): void {
  const s = state.summary;
  const parts: string[] = [];
  if (state.board) {
    const done = state.board.cells.filter((c) => c.completed).length;
    parts.push(`completed ${done}/24`);
  }
  if (s) {
    parts.push(`blocks/min ${Number(s["blocks_per_min"]).toFixed(2)}`);
    parts.push(`corrective moves ${s["corrective_moves"]}`);
    parts.push(`mismatches ${s["mismatches"]}`);
  }
  summaryEl.textContent = parts.join(" | ");
}

function frame(): void {
  if (mapping) {
    renderer.draw(state, mapping, pointerPx, probsToggle.checked);
  }
  if (sampler) hzEl.textContent = `${sampler.measuredHz().toFixed(1)} Hz`;
  renderSummary();
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

// auto-resume after a reload if a session is stored
if (sessionStorage.getItem("gazeintent.session")) {
  connect();
}
