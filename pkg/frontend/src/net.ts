// WebSocket client with reconnect. The session survives on the server;
// on reconnect we send start{resume} with the stored session id, and a
// reload resumes via sessionStorage. Outbound messages are dropped
// while disconnected (the gaze stream is transient by nature).

import { parseServerMessage, ServerMessage, startMsg } from "./protocol.js";

export interface ConsoleConnectionOptions {
  url: string;
  seed: number;
  mode: string;
  onMessage: (msg: ServerMessage) => void;
  onStatus: (connected: boolean, attempt: number) => void;
  storage?: Pick<Storage, "getItem" | "setItem" | "removeItem">;
  makeSocket?: (url: string) => WebSocket;
}

const RESUME_KEY = "gazeintent.session";
const BACKOFF_MS = [500, 1000, 2000, 4000, 5000];

export class ConsoleConnection {
  private socket: WebSocket | null = null;
  private attempt = 0;
  private closed = false;

  constructor(private readonly opts: ConsoleConnectionOptions) {}

  get sessionId(): string | null {
    return this.opts.storage?.getItem(RESUME_KEY) ?? null;
  }

  connect(): void {
    const make =
      this.opts.makeSocket ?? ((url: string) => new WebSocket(url));
    const socket = make(this.opts.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempt = 0;
      this.opts.onStatus(true, 0);
      const resume = this.sessionId;
      socket.send(
        JSON.stringify(
          resume
            ? startMsg(this.opts.seed, this.opts.mode, resume)
            : startMsg(this.opts.seed, this.opts.mode)
        )
      );
    };
    socket.onmessage = (event) => {
      const msg = parseServerMessage(String(event.data));
      if (msg === null) return;
      if (msg.tag === "state") {
        this.opts.storage?.setItem(RESUME_KEY, msg.session);
      }
      if (msg.tag === "error" && /no session/.test(msg.detail)) {
        // stale resume token: the server restarted; start fresh
        this.opts.storage?.removeItem(RESUME_KEY);
        socket.send(JSON.stringify(startMsg(this.opts.seed, this.opts.mode)));
        return;
      }
      this.opts.onMessage(msg);
    };
    socket.onclose = () => {
      this.opts.onStatus(false, this.attempt + 1);
      if (this.closed) return;
      const delay = BACKOFF_MS[Math.min(this.attempt, BACKOFF_MS.length - 1)];
      this.attempt += 1;
      setTimeout(() => this.connect(), delay);
    };
  }

  send(msg: object): boolean {
    if (this.socket && this.socket.readyState === WebSocket.OPEN) {
      this.socket.send(JSON.stringify(msg));
      return true;
    }
    return false;
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
