"""Live session orchestration over a JSON message protocol.

One session owns a board, a gaze trace, and a controller. Client
messages (start / gaze / trigger / rotate / set_mode) advance the
session clock; gaze messages trigger a prediction and a controller step
every frame. Picks and places resolve after the 1.3 s gripper latency,
anchored at the last valid pointer sample when the trigger was pulled
(the pointer stands in for where the user holds the tip). Every message
both directions is appended to an in-memory log that can be written out
and replayed deterministically.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .attention import AttentionConfig, GazeSample, GazeTrace
from .controller import (
    Mode,
    corrective_move_count,
    initial_state,
    move_tip,
    reset_cycle,
    step,
)
from .predictor import (
    Models,
    NoCandidatesError,
    predict,
)
from .svm import model_from_json, model_hash
from .world import (
    PlaceOutcome,
    apply_pick,
    apply_place,
    board_to_json,
    is_complete,
    legal_pick_candidates,
    legal_place_candidates,
    new_board,
    rotate_held,
)

LOG_VERSION = 1
MODE_OFF = "off"  # familiarization: predictions stream, effector stays home

CLIENT_TAGS = {"start", "gaze", "trigger", "rotate", "set_mode"}
_MODE_SEED = {"follow": 1, "rebel": 2, "random": 3, MODE_OFF: 4}


class SessionError(Exception):
    pass


class ProtocolError(SessionError):
    """Malformed or unknown client message."""


class OutOfOrderError(SessionError):
    """Message timestamp ran backwards."""


class ModelLoadError(SessionError):
    pass


class VersionError(SessionError):
    pass


class CorruptLogError(SessionError):
    pass


class RefusedError(SessionError):
    """Replay refused: the loaded models differ from the recorded ones."""


@dataclass(frozen=True)
class SessionConfig:
    attention: AttentionConfig = AttentionConfig()
    threshold: float = 0.55
    decision_cap: float = 1.3
    tip_speed: float = 300.0
    gripper_latency: float = 1.3
    trigger_radius: Optional[float] = None  # None -> cell_size / 2
    px_per_mm: float = 1.2
    trace_capacity: int = 1200


@dataclass
class _PendingAction:
    kind: str
    target: int
    resolve_t: float


class Session:
    def __init__(self, seed: int, mode: str, models: Models,
                 models_hash: str, config: SessionConfig = SessionConfig()):
        if mode != MODE_OFF:
            Mode(mode)  # validate
        self.id = f"{seed}-{mode}"
        self.seed = seed
        self.mode = mode
        self.models = models
        self.models_hash = models_hash
        self.config = config
        self.board = new_board(seed)
        self.trace = GazeTrace(capacity=config.trace_capacity)
        home = (self.board.layout.slot_position(0)[0], 420.0)
        self.controller = initial_state(
            home_pos=home,
            threshold=config.threshold,
            decision_cap=config.decision_cap,
            tip_speed=config.tip_speed,
        )
        self._rng = np.random.default_rng([seed, _MODE_SEED[mode], 777])
        self.clock = 0.0
        self.started = False
        self.complete = False
        self.pending: Optional[_PendingAction] = None
        self.pending_mode: Optional[str] = None
        self.last_valid_gaze: Optional[tuple[float, float]] = None
        self._last_gaze_t: Optional[float] = None
        self.log: list[dict] = []  # {"dir": "c"|"s", "msg": {...}}
        self.events: list[dict] = []  # commit / action events
        self.placed_total = 0
        self.mismatches = 0
        self.commits = 0
        self._summary_sent = False

    # -- helpers ------------------------------------------------------------

    @property
    def trigger_radius(self) -> float:
        if self.config.trigger_radius is not None:
            return self.config.trigger_radius
        return self.board.layout.cell_size / 2.0

    def _board_msg(self, changed=None) -> dict:
        layout = self.board.layout
        return {
            "tag": "state",
            "t": self.clock,
            "session": self.id,
            "board": json.loads(board_to_json(self.board)),
            "changed": changed,
            "config": {
                "mode": self.mode,
                "threshold": self.config.threshold,
                "gripper_latency": self.config.gripper_latency,
                "px_per_mm": self.config.px_per_mm,
                "cell_size": layout.cell_size,
                "stock_slots": [list(p) for p in layout.stock_slots],
                "pattern_cells": [list(p) for p in layout.pattern_cells],
            },
        }

    def _tip_msg(self, phase: Optional[str] = None) -> dict:
        if phase is None:
            phase = "gripping" if self.pending else self.controller.phase
        return {
            "tag": "tip",
            "t": self.clock,
            "x": self.controller.tip_pos[0],
            "y": self.controller.tip_pos[1],
            "phase": phase,
        }

    def _error_msg(self, code: str, detail: str = "") -> dict:
        return {"tag": "error", "t": self.clock, "code": code, "detail": detail}

    def summary_stats(self) -> dict:
        corrective = corrective_move_count(self.events)
        active = None
        matches = 0
        for ev in self.events:
            if ev["type"] == "commit":
                active = ev["target"]
            elif ev["type"] == "action":
                if active is not None and active == ev["target"]:
                    matches += 1
                active = None
        minutes = self.clock / 60.0
        return {
            "session": self.id,
            "mode": self.mode,
            "completed": self.board.completed_count,
            "placed_total": self.placed_total,
            "mismatches": self.mismatches,
            "elapsed_s": self.clock,
            "blocks_per_min": (self.placed_total / minutes) if minutes > 0 else 0.0,
            "commits": self.commits,
            "matches": matches,
            "corrective_moves": corrective,
        }

    def _summary_msg(self) -> dict:
        return {"tag": "summary", "t": self.clock, "stats": self.summary_stats()}

    # -- message handling ---------------------------------------------------

    def _validate(self, msg: dict) -> None:
        """Reject bad messages before any state mutation or logging, so a
        recorded log always replays without raising."""
        if not isinstance(msg, dict) or "tag" not in msg:
            raise ProtocolError("message must be an object with a 'tag'")
        tag = msg["tag"]
        if tag not in CLIENT_TAGS:
            raise ProtocolError(f"unknown tag: {tag!r}")
        try:
            t = float(msg["t"])
        except (KeyError, TypeError, ValueError):
            raise ProtocolError("message must carry a numeric 't'")
        if t < self.clock - 1e-9:
            raise OutOfOrderError(f"t={t} after clock={self.clock}")
        if tag == "start":
            if self.started:
                raise ProtocolError("session already started")
            try:
                int(msg["seed"])
            except (KeyError, TypeError, ValueError):
                raise ProtocolError("start needs an integer seed")
        elif tag == "gaze":
            try:
                float(msg["x"]), float(msg["y"]), bool(msg["valid"])
            except (KeyError, TypeError, ValueError):
                raise ProtocolError("gaze message needs x, y, valid")
        elif tag == "set_mode":
            mode = msg.get("mode")
            if mode != MODE_OFF:
                try:
                    Mode(mode)
                except ValueError:
                    raise ProtocolError(f"unknown mode: {mode!r}")

    def ingest(self, msg: dict) -> list[dict]:
        """Process one client message; returns the server responses."""
        self._validate(msg)
        self.log.append({"dir": "c", "msg": msg})
        self.clock = max(self.clock, float(msg["t"]))

        responses = self._resolve_pending_if_due()
        handler = getattr(self, f"_on_{msg['tag']}")
        responses.extend(handler(msg))
        if self.complete and not self._summary_sent:
            responses.append(self._summary_msg())
            self._summary_sent = True
        for r in responses:
            self.log.append({"dir": "s", "msg": r})
        return responses

    def _on_start(self, msg: dict) -> list[dict]:
        self.started = True
        return [self._board_msg()]

    def _on_gaze(self, msg: dict) -> list[dict]:
        x, y = float(msg["x"]), float(msg["y"])
        valid = bool(msg["valid"])
        self.trace.append(GazeSample(self.clock, x, y, valid))
        if valid:
            self.last_valid_gaze = (x, y)
        dt = self.config.attention.frame
        if self._last_gaze_t is not None and self.clock > self._last_gaze_t:
            dt = self.clock - self._last_gaze_t
        self._last_gaze_t = self.clock

        responses: list[dict] = []
        if not self.complete:
            kind = "place" if self.board.held is not None else "pick"
            try:
                pred = predict(
                    self.models, self.trace, self.board, kind, self.clock,
                    self.config.attention, self.config.threshold,
                )
            except NoCandidatesError:
                pred = None
            if pred is not None:
                responses.append({
                    "tag": "probs",
                    "t": self.clock,
                    "kind": pred.kind,
                    "probs": {str(k): v for k, v in sorted(
                        pred.per_candidate.items())},
                    "chosen": pred.chosen,
                    "decided": pred.decided,
                })
                if self.mode != MODE_OFF:
                    layout = self.board.layout
                    positions = {
                        c: (
                            layout.slot_position(c)
                            if kind == "pick"
                            else layout.cell_position(c)
                        )
                        for c in pred.per_candidate
                    }
                    was = self.controller.committed_target
                    self.controller, _ = step(
                        self.controller, pred, Mode(self.mode), dt,
                        self._rng, positions,
                    )
                    now = self.controller.committed_target
                    # board (and so the candidate set) only changes at
                    # resolutions, so a commit always starts from None here
                    if now is not None and was is None:
                        self.commits += 1
                        self.events.append({
                            "type": "commit", "t": self.clock, "target": now,
                        })
        self.controller = move_tip(self.controller, dt)
        responses.append(self._tip_msg())
        return responses

    def _on_trigger(self, msg: dict) -> list[dict]:
        if self.complete:
            return [self._error_msg("session_complete")]
        if self.pending is not None:
            return [self._error_msg("gripper_busy")]
        if self.last_valid_gaze is None:
            return [self._error_msg("no_pointer", "no valid gaze sample yet")]
        px, py = self.last_valid_gaze
        kind = "place" if self.board.held is not None else "pick"
        layout = self.board.layout
        if kind == "pick":
            cands = legal_pick_candidates(self.board)
            pos = {c: layout.slot_position(c) for c in cands}
        else:
            cands = legal_place_candidates(self.board)
            pos = {c: layout.cell_position(c) for c in cands}
        best, best_d = None, float("inf")
        for c in sorted(cands):
            d = ((pos[c][0] - px) ** 2 + (pos[c][1] - py) ** 2) ** 0.5
            if d < best_d:
                best, best_d = c, d
        if best is None or best_d > self.trigger_radius:
            return [self._error_msg("no_target",
                                    f"nothing within {self.trigger_radius} mm")]
        self.pending = _PendingAction(
            kind=kind, target=best,
            resolve_t=self.clock + self.config.gripper_latency,
        )
        return [
            {
                "tag": "outcome",
                "t": self.clock,
                "event": "gripper_started",
                "kind": kind,
                "target": best,
                "resolve_t": self.pending.resolve_t,
            },
            self._tip_msg(phase="gripping"),
        ]

    def _on_rotate(self, msg: dict) -> list[dict]:
        if self.board.held is None:
            return [self._error_msg("no_held_piece")]
        self.board = rotate_held(self.board)
        return [self._board_msg(changed={"held": list(self.board.held)})]

    def _on_set_mode(self, msg: dict) -> list[dict]:
        self.pending_mode = msg["mode"]
        return [self._board_msg()]

    def _resolve_pending_if_due(self) -> list[dict]:
        if self.pending is None or self.clock < self.pending.resolve_t - 1e-9:
            return []
        action = self.pending
        self.pending = None
        responses: list[dict] = []
        if action.kind == "pick":
            self.board = apply_pick(self.board, action.target)
            responses.append({
                "tag": "outcome",
                "t": self.clock,
                "event": "picked",
                "target": action.target,
                "result": None,
            })
        else:
            self.board, outcome = apply_place(self.board, action.target)
            self.placed_total += 1
            if outcome is PlaceOutcome.MISMATCH_RETURNED_TO_STOCK:
                self.mismatches += 1
            responses.append({
                "tag": "outcome",
                "t": self.clock,
                "event": "placed",
                "target": action.target,
                "result": outcome.value,
            })
        self.events.append({
            "type": "action",
            "t": self.clock,
            "kind": action.kind,
            "target": action.target,
        })
        responses.append(self._board_msg(changed={"action": action.kind,
                                                  "target": action.target}))
        self.controller = reset_cycle(self.controller)
        if self.pending_mode is not None:
            self.mode = self.pending_mode
            self.pending_mode = None
        if is_complete(self.board):
            self.complete = True
        return responses


def open_session(
    seed: int,
    mode: str,
    models: Models,
    models_hash: Optional[str] = None,
    config: SessionConfig = SessionConfig(),
) -> Session:
    if models_hash is None:
        models_hash = model_hash(models.pick, models.place)
    return Session(seed, mode, models, models_hash, config)


def load_models(models_dir) -> tuple[Models, str]:
    """Read pick.json / place.json from a directory; returns (models, hash)."""
    models_dir = Path(models_dir)
    try:
        pick = model_from_json((models_dir / "pick.json").read_text())
        place = model_from_json((models_dir / "place.json").read_text())
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ModelLoadError(f"cannot load models from {models_dir}: {exc}")
    models = Models(pick=pick, place=place)
    return models, model_hash(pick, place)


def save_models(models: Models, models_dir) -> str:
    from .svm import model_to_json

    models_dir = Path(models_dir)
    models_dir.mkdir(parents=True, exist_ok=True)
    (models_dir / "pick.json").write_text(model_to_json(models.pick))
    (models_dir / "place.json").write_text(model_to_json(models.place))
    return model_hash(models.pick, models.place)


# -- record / replay ---------------------------------------------------------


def canonical(msg: dict) -> str:
    return json.dumps(msg, sort_keys=True, separators=(",", ":"))


def telemetry_hash(server_msgs: list[dict]) -> str:
    h = hashlib.sha256()
    for msg in server_msgs:
        h.update(canonical(msg).encode())
        h.update(b"\n")
    return h.hexdigest()


def write_session_log(session: Session, path) -> None:
    header = {
        "version": LOG_VERSION,
        "seed": session.seed,
        "mode": session.mode,
        "model_hash": session.models_hash,
        "session": session.id,
    }
    with open(path, "w") as fh:
        fh.write(canonical(header) + "\n")
        for entry in session.log:
            fh.write(canonical(entry) + "\n")


@dataclass
class ReplayResult:
    session_id: str
    identical: bool
    recorded_hash: str
    replayed_hash: str
    summary: dict = field(default_factory=dict)


def replay(log_path, models: Models, models_hash: Optional[str] = None,
           config: SessionConfig = SessionConfig()) -> ReplayResult:
    """Re-drive a recorded session and verify the response stream matches."""
    if models_hash is None:
        models_hash = model_hash(models.pick, models.place)
    try:
        lines = Path(log_path).read_text().splitlines()
    except OSError as exc:
        raise CorruptLogError(str(exc))
    if not lines:
        raise CorruptLogError("empty log file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CorruptLogError(f"bad header: {exc}")
    if header.get("version") != LOG_VERSION:
        raise VersionError(f"unsupported log version: {header.get('version')!r}")
    for key in ("seed", "mode", "model_hash"):
        if key not in header:
            raise CorruptLogError(f"header missing {key!r}")
    if header["model_hash"] != models_hash:
        raise RefusedError(
            "model hash mismatch: log recorded "
            f"{header['model_hash'][:12]}, loaded {models_hash[:12]}"
        )
    entries = []
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
            if entry.get("dir") not in ("c", "s") or "msg" not in entry:
                raise ValueError("entry needs dir and msg")
        except (json.JSONDecodeError, ValueError) as exc:
            raise CorruptLogError(f"line {i}: {exc}")
        entries.append(entry)

    # note: the recorded mode is the session's starting mode
    session = open_session(header["seed"], header["mode"], models,
                           models_hash, config)
    recorded = [e["msg"] for e in entries if e["dir"] == "s"]
    replayed: list[dict] = []
    for entry in entries:
        if entry["dir"] != "c":
            continue
        replayed.extend(session.ingest(entry["msg"]))
    rec_hash = telemetry_hash(recorded)
    rep_hash = telemetry_hash(replayed)
    return ReplayResult(
        session_id=session.id,
        identical=rec_hash == rep_hash,
        recorded_hash=rec_hash,
        replayed_hash=rep_hash,
        summary=session.summary_stats(),
    )
