"""Synthetic gaze behavior for the block-copy task.

Generates labeled pick/place decision episodes at desk scale: fixation
schedules that realize the observed gaze patterns (one dominant target,
alternation between a stock piece and its matching pattern cell, slow
trending choice, distractor glances, tracking dropouts), rendered to a
75 Hz sample stream with Gaussian positional jitter. Every schedule ends
with a fixation on the true target that starts at least 0.4 s before the
action, which is what makes anticipation sweeps meaningful.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .attention import FRAME_75HZ, GazeSample, GazeTrace
from .world import (
    BoardState,
    apply_pick,
    apply_place,
    board_from_json,
    board_to_json,
    is_complete,
    legal_pick_candidates,
    legal_place_candidates,
    new_board,
    rotate_held,
    PlaceOutcome,
)

CORPUS_VERSION = 1
SACCADE_FRAMES = 3  # 0.04 s at 75 Hz
TRACE_KEEP_S = 12.0  # per-episode history retained before the action
LEAD_IN_S = 4.2


class IllegalTargetError(Exception):
    """Requested episode target is not a legal candidate on the board."""


class Scenario(str, Enum):
    ONE_DOMINANT = "OneDominant"
    ALTERNATING = "Alternating"
    TRENDING_CHOICE = "TrendingChoice"
    DISTRACTOR = "Distractor"
    FAULTY_TRACKING = "FaultyTracking"


DEFAULT_MIXTURE: dict[Scenario, float] = {
    Scenario.ONE_DOMINANT: 0.55,
    Scenario.ALTERNATING: 0.20,
    Scenario.TRENDING_CHOICE: 0.15,
    Scenario.DISTRACTOR: 0.07,
    Scenario.FAULTY_TRACKING: 0.03,
}


@dataclass(frozen=True)
class GazeProfileParams:
    fixation_duration: tuple[float, float] = (0.2, 0.6)
    jitter_sigma: float = 12.0
    saccade_duration: float = 0.04
    alternation_count: tuple[int, int] = (1, 3)
    distractor_prob: float = 0.25
    dropout_prob: float = 0.05  # invalid fraction of a FaultyTracking episode
    pick_duration: tuple[float, float] = (3.61, 1.36)  # mean, sd seconds
    place_duration: tuple[float, float] = (4.65, 1.34)
    min_episode_duration: float = 1.0

    def __post_init__(self) -> None:
        for p in (self.distractor_prob, self.dropout_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        for lo, hi in (self.fixation_duration,):
            if lo <= 0 or hi < lo:
                raise ValueError("fixation_duration range invalid")
        for mean, sd in (self.pick_duration, self.place_duration):
            if mean <= 0 or sd <= 0:
                raise ValueError("durations must be positive")
        if self.min_episode_duration <= 0:
            raise ValueError("min_episode_duration must be positive")


@dataclass
class Episode:
    """One labeled pick or place decision."""

    kind: str  # "pick" | "place"
    board: BoardState  # snapshot at decision time
    candidates: frozenset[int]
    true_target: int
    trace: GazeTrace
    action_time: float
    scenario: Scenario
    duration: float  # seconds from decision start to the action

    def __post_init__(self) -> None:
        if self.true_target not in self.candidates:
            raise IllegalTargetError(
                f"target {self.true_target} not in candidates"
            )


@dataclass
class Corpus:
    episodes: list[Episode]
    seed: int
    params: GazeProfileParams
    mixture: dict[Scenario, float] = field(default_factory=lambda: dict(DEFAULT_MIXTURE))


# --- fixation schedules ----------------------------------------------------

# one schedule entry: (n_frames, position, tag)
Block = tuple[int, tuple[float, float], str]


def _frames(seconds: float) -> int:
    return max(1, round(seconds / FRAME_75HZ))


def _clipped_jitter(rng, sigma: float, n: int) -> np.ndarray:
    jit = rng.normal(0.0, sigma, size=(n, 2))
    norms = np.linalg.norm(jit, axis=1)
    cap = 2.5 * sigma
    over = norms > cap
    if over.any():
        jit[over] *= (cap / norms[over])[:, None]
    return jit


def _draw_block_frames(params: GazeProfileParams, rng) -> int:
    lo, hi = params.fixation_duration
    return _frames(rng.uniform(lo, hi))


def _filler_pos(ctx: "_ScheduleCtx", rng) -> tuple[tuple[float, float], str]:
    if ctx.competitors and rng.uniform() < ctx.params.distractor_prob:
        return ctx.competitors[rng.integers(len(ctx.competitors))], "competitor"
    pool = ctx.others if ctx.others else ctx.competitors
    return pool[rng.integers(len(pool))], "other"


@dataclass
class _ScheduleCtx:
    duration_frames: int
    target: tuple[float, float]
    partner: Optional[tuple[float, float]]
    competitors: list[tuple[float, float]]
    others: list[tuple[float, float]]
    params: GazeProfileParams


def _final_block(ctx: _ScheduleCtx, rng) -> Block:
    n = min(ctx.duration_frames, _frames(rng.uniform(0.5, 1.0)))
    return (n, ctx.target, "target")


def _schedule_one_dominant(ctx: _ScheduleCtx, rng, p_target=0.75) -> list[Block]:
    final = _final_block(ctx, rng)
    remaining = ctx.duration_frames - final[0]
    blocks: list[Block] = []
    while remaining > 0:
        n = min(remaining, _draw_block_frames(ctx.params, rng))
        if rng.uniform() < p_target:
            blocks.append((n, ctx.target, "target"))
        else:
            pos, tag = _filler_pos(ctx, rng)
            blocks.append((n, pos, tag))
        remaining -= n
    blocks.append(final)
    _enforce_target_share(blocks, ctx, minimum=0.62)
    return blocks


def _enforce_target_share(blocks: list[Block], ctx: _ScheduleCtx, minimum) -> None:
    """Flip late non-target blocks to the target until the trailing-window
    share reaches the floor; keeps the dominant-target label sound."""
    window = min(ctx.duration_frames, 300)
    start = ctx.duration_frames - window

    def share() -> float:
        t, pos = 0, 0
        for n, _, tag in blocks:
            lo, hi = pos, pos + n
            pos = hi
            overlap = max(0, min(hi, ctx.duration_frames) - max(lo, start))
            if tag == "target":
                t += overlap
        return t / window

    for i in range(len(blocks) - 1, -1, -1):
        if share() >= minimum:
            return
        n, _, tag = blocks[i]
        if tag != "target":
            blocks[i] = (n, ctx.target, "target")


def _schedule_alternating(ctx: _ScheduleCtx, rng) -> list[Block]:
    """Planning-then-confirmation: the related object (partner) dominates
    the early window, then gaze alternates partner -> target, ending on
    the target. Early windows therefore carry partner evidence only,
    which is what the cross-object feature exists to pick up."""
    if ctx.partner is None:
        return _schedule_one_dominant(ctx, rng)
    lo, hi = ctx.params.alternation_count
    n_alt = int(rng.integers(lo, hi + 1))
    seq: list[Block] = []
    for k in range(n_alt):
        seq.append((_frames(rng.uniform(0.4, 0.8)), ctx.partner, "partner"))
        if k < n_alt - 1:
            seq.append((_frames(rng.uniform(0.4, 0.7)), ctx.target, "target"))
    seq.append(_final_block(ctx, rng))
    total = sum(n for n, _, _ in seq)
    while total > ctx.duration_frames and len(seq) > 1:
        n, _, _ = seq.pop(0)
        total -= n
    if total > ctx.duration_frames:  # single block still too long
        n, pos, tag = seq[0]
        seq[0] = (ctx.duration_frames, pos, tag)
        total = ctx.duration_frames
    blocks: list[Block] = []
    remaining = ctx.duration_frames - total
    while remaining > 0:  # planning phase: mostly the partner object
        n = min(remaining, _draw_block_frames(ctx.params, rng))
        if rng.uniform() < 0.75:
            blocks.append((n, ctx.partner, "partner"))
        else:
            pos, tag = _filler_pos(ctx, rng)
            blocks.append((n, pos, tag))
        remaining -= n
    return blocks + seq


def _schedule_trending(ctx: _ScheduleCtx, rng) -> list[Block]:
    final = _final_block(ctx, rng)
    remaining = ctx.duration_frames - final[0]
    blocks: list[Block] = []
    used = 0
    while used < remaining:
        n = min(remaining - used, _draw_block_frames(ctx.params, rng))
        progress = used / max(remaining, 1)
        if rng.uniform() < 0.2 + 0.6 * progress:
            blocks.append((n, ctx.target, "target"))
        elif ctx.competitors:
            pos = ctx.competitors[rng.integers(len(ctx.competitors))]
            blocks.append((n, pos, "competitor"))
        else:
            pos, tag = _filler_pos(ctx, rng)
            blocks.append((n, pos, tag))
        used += n
    blocks.append(final)
    return blocks


def _schedule_distractor(ctx: _ScheduleCtx, rng) -> list[Block]:
    final = _final_block(ctx, rng)
    if ctx.competitors:
        dists = [np.hypot(c[0] - ctx.target[0], c[1] - ctx.target[1])
                 for c in ctx.competitors]
        neighbor = ctx.competitors[int(np.argmin(dists))]
    else:
        neighbor = ctx.others[rng.integers(len(ctx.others))]
    distractor = (
        max(1, round(final[0] * rng.uniform(0.8, 1.2))),
        neighbor,
        "distractor",
    )
    pre = (_frames(rng.uniform(0.3, 0.6)), ctx.target, "target")
    tail = [distractor, pre, final]
    total = sum(n for n, _, _ in tail)
    while total > ctx.duration_frames and len(tail) > 1:
        n, _, _ = tail.pop(0)
        total -= n
    blocks: list[Block] = []
    remaining = ctx.duration_frames - total
    while remaining > 0:
        n = min(remaining, _draw_block_frames(ctx.params, rng))
        if rng.uniform() < 0.6:
            blocks.append((n, ctx.target, "target"))
        else:
            pos, tag = _filler_pos(ctx, rng)
            blocks.append((n, pos, tag))
        remaining -= n
    return blocks + tail


_SCHEDULERS = {
    Scenario.ONE_DOMINANT: _schedule_one_dominant,
    Scenario.ALTERNATING: _schedule_alternating,
    Scenario.TRENDING_CHOICE: _schedule_trending,
    Scenario.DISTRACTOR: _schedule_distractor,
    Scenario.FAULTY_TRACKING: _schedule_one_dominant,
}


def _dropout_mask(n_frames: int, params: GazeProfileParams, rng) -> np.ndarray:
    """Invalid-frame mask covering ~dropout_prob of the episode in bursts."""
    mask = np.zeros(n_frames, dtype=bool)
    total = round(params.dropout_prob * n_frames)
    if total <= 0:
        return mask
    n_bursts = int(rng.integers(1, 4))
    per = max(1, total // n_bursts)
    for _ in range(n_bursts):
        start = int(rng.integers(0, max(1, n_frames - per + 1)))
        mask[start : start + per] = True
    return mask


class _StreamWriter:
    """Accumulates the continuous 75 Hz sample stream of one playthrough."""

    def __init__(self, params: GazeProfileParams, rng):
        self.params = params
        self.rng = rng
        self.xs: list[np.ndarray] = []
        self.ys: list[np.ndarray] = []
        self.valid: list[np.ndarray] = []
        self.n_frames = 0
        self._prev: Optional[tuple[float, float]] = None

    def emit_blocks(self, blocks: list[Block], invalid: Optional[np.ndarray] = None):
        offset0 = self.n_frames
        for n, pos, _tag in blocks:
            x = np.full(n, pos[0])
            y = np.full(n, pos[1])
            if self._prev is not None:
                s = min(SACCADE_FRAMES, n)
                w = np.arange(1, s + 1) / (s + 1)
                x[:s] = self._prev[0] + (pos[0] - self._prev[0]) * w
                y[:s] = self._prev[1] + (pos[1] - self._prev[1]) * w
            jit = _clipped_jitter(self.rng, self.params.jitter_sigma, n)
            self.xs.append(x + jit[:, 0])
            self.ys.append(y + jit[:, 1])
            self.valid.append(np.ones(n, dtype=bool))
            self.n_frames += n
            self._prev = pos
        if invalid is not None:
            flat_v = np.concatenate(self.valid[-len(blocks):])
            flat_v[invalid] = False
            # re-split is unnecessary; store as one chunk
            del self.valid[-len(blocks):]
            self.valid.append(flat_v)
        return offset0

    def arrays(self):
        t = np.arange(self.n_frames) * FRAME_75HZ
        return (
            t,
            np.concatenate(self.xs) if self.xs else np.zeros(0),
            np.concatenate(self.ys) if self.ys else np.zeros(0),
            np.concatenate(self.valid) if self.valid else np.zeros(0, dtype=bool),
        )


def _object_positions(board: BoardState):
    slots = [board.layout.slot_position(s) for s in range(4)]
    cells = [board.layout.cell_position(c) for c in range(24)]
    return slots, cells


def _wander_blocks(board: BoardState, n_frames: int, params, rng) -> list[Block]:
    slots, cells = _object_positions(board)
    pool = slots + cells
    blocks: list[Block] = []
    remaining = n_frames
    while remaining > 0:
        n = min(remaining, _draw_block_frames(params, rng))
        pos = pool[rng.integers(len(pool))]
        blocks.append((n, pos, "other"))
        remaining -= n
    return blocks


def _episode_duration_frames(kind: str, params: GazeProfileParams, rng) -> int:
    mean, sd = params.pick_duration if kind == "pick" else params.place_duration
    seconds = max(params.min_episode_duration, rng.normal(mean, sd))
    return _frames(seconds)


def _build_ctx(
    board: BoardState,
    kind: str,
    target: int,
    partner_cell: Optional[int],
    duration_frames: int,
    params: GazeProfileParams,
) -> _ScheduleCtx:
    slots, cells = _object_positions(board)
    if kind == "pick":
        cands = legal_pick_candidates(board)
        target_pos = slots[target]
        competitors = [slots[s] for s in sorted(cands) if s != target]
        partner = cells[partner_cell] if partner_cell is not None else None
    else:
        cands = legal_place_candidates(board)
        target_pos = cells[target]
        competitors = [cells[c] for c in sorted(cands) if c != target]
        held_type = board.held[0]
        slot = board.stock.index(held_type)
        partner = slots[slot]
    others = [
        p
        for p in slots + cells
        if p != target_pos and p not in competitors and p != partner
    ]
    return _ScheduleCtx(
        duration_frames=duration_frames,
        target=target_pos,
        partner=partner,
        competitors=competitors,
        others=others,
        params=params,
    )


def _draw_scenario(mixture: dict[Scenario, float], rng) -> Scenario:
    names = sorted(mixture, key=lambda s: s.value)
    weights = np.array([mixture[s] for s in names], dtype=float)
    weights /= weights.sum()
    return names[rng.choice(len(names), p=weights)]


@dataclass
class ActionEvent:
    """One executed pick or place in a playthrough."""

    t: float
    kind: str
    target: int
    candidates: frozenset[int]
    board_before: BoardState
    scenario: Scenario
    rotations: int  # rotate presses owed before this action (place only)
    duration: float  # seconds of deliberation before the action


@dataclass
class Playthrough:
    board_seed: int
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    valid: np.ndarray
    actions: list[ActionEvent]
    final_board: BoardState


def play_board(
    board_seed: int,
    params: GazeProfileParams,
    mixture: dict[Scenario, float],
    rng,
    max_blocks: Optional[int] = None,
    action_latency: float = 0.0,
    lead_in: float = LEAD_IN_S,
) -> Playthrough:
    """Simulate one user completing (part of) a board.

    The user always executes their true intent: pick the planned slot,
    rotate to match, place on the planned cell. action_latency inserts a
    gripper-delay linger (gaze held on the acted object) after each
    action, used when driving a live session.
    """
    board = new_board(board_seed)
    writer = _StreamWriter(params, rng)
    writer.emit_blocks(_wander_blocks(board, _frames(lead_in), params, rng))
    actions: list[ActionEvent] = []
    slots, cells = _object_positions(board)
    blocks_done = 0

    while not is_complete(board):
        if max_blocks is not None and blocks_done >= max_blocks:
            break
        types_left = sorted(
            {board.cell_types[i] for i in range(24) if not board.completed[i]}
        )
        piece_type = types_left[rng.integers(len(types_left))]
        slot = board.stock.index(piece_type)
        options = board.incomplete_cells_of_type(piece_type)
        cell = options[rng.integers(len(options))]

        for kind, target, partner_cell in (
            ("pick", slot, cell),
            ("place", cell, None),
        ):
            scenario = _draw_scenario(mixture, rng)
            duration = _episode_duration_frames(kind, params, rng)
            ctx = _build_ctx(board, kind, target, partner_cell, duration, params)
            blocks = _SCHEDULERS[scenario](ctx, rng)
            invalid = (
                _dropout_mask(duration, params, rng)
                if scenario is Scenario.FAULTY_TRACKING
                else None
            )
            cands = (
                legal_pick_candidates(board)
                if kind == "pick"
                else legal_place_candidates(board)
            )
            rotations = board.cell_orients[cell] if kind == "place" else 0
            writer.emit_blocks(blocks, invalid)
            action_t = (writer.n_frames - 1) * FRAME_75HZ
            actions.append(
                ActionEvent(
                    t=action_t,
                    kind=kind,
                    target=target,
                    candidates=frozenset(cands),
                    board_before=board,
                    scenario=scenario,
                    rotations=rotations,
                    duration=duration * FRAME_75HZ,
                )
            )
            if kind == "pick":
                board = apply_pick(board, slot)
            else:
                for _ in range(rotations):
                    board = rotate_held(board)
                board, outcome = apply_place(board, cell)
                assert outcome is PlaceOutcome.COMPLETED
            if action_latency > 0:
                pos = slots[slot] if kind == "pick" else cells[cell]
                writer.emit_blocks(
                    [(_frames(action_latency), pos, "other")]
                )
        blocks_done += 1

    t, x, y, valid = writer.arrays()
    return Playthrough(
        board_seed=board_seed,
        t=t,
        x=x,
        y=y,
        valid=valid,
        actions=actions,
        final_board=board,
    )


def _episode_from_action(play: Playthrough, action: ActionEvent) -> Episode:
    keep_from = max(0.0, action.t - TRACE_KEEP_S)
    lo = int(np.searchsorted(play.t, keep_from - 1e-9))
    hi = int(np.searchsorted(play.t, action.t + 1e-9))
    samples = [
        GazeSample(float(play.t[i]), float(play.x[i]), float(play.y[i]),
                   bool(play.valid[i]))
        for i in range(lo, hi)
    ]
    return Episode(
        kind=action.kind,
        board=action.board_before,
        candidates=action.candidates,
        true_target=action.target,
        trace=GazeTrace.from_samples(samples),
        action_time=action.t,
        scenario=action.scenario,
        duration=action.duration,
    )


def sample_episode(
    board: BoardState,
    kind: str,
    true_target: int,
    scenario: Scenario,
    params: GazeProfileParams,
    rng,
) -> Episode:
    """One standalone labeled episode with its own wander lead-in."""
    if kind == "pick":
        cands = legal_pick_candidates(board)
        partner_options = board.incomplete_cells_of_type(board.stock[true_target]) \
            if true_target in cands else []
        partner_cell = (
            partner_options[rng.integers(len(partner_options))]
            if partner_options
            else None
        )
    elif kind == "place":
        cands = legal_place_candidates(board)
        partner_cell = None
    else:
        raise ValueError(f"unknown episode kind: {kind!r}")
    if true_target not in cands:
        raise IllegalTargetError(f"{kind} target {true_target} is not legal")

    writer = _StreamWriter(params, rng)
    writer.emit_blocks(_wander_blocks(board, _frames(4.5), params, rng))
    duration = _episode_duration_frames(kind, params, rng)
    ctx = _build_ctx(board, kind, true_target, partner_cell, duration, params)
    blocks = _SCHEDULERS[scenario](ctx, rng)
    invalid = (
        _dropout_mask(duration, params, rng)
        if scenario is Scenario.FAULTY_TRACKING
        else None
    )
    writer.emit_blocks(blocks, invalid)
    t, x, y, valid = writer.arrays()
    samples = [
        GazeSample(float(t[i]), float(x[i]), float(y[i]), bool(valid[i]))
        for i in range(len(t))
    ]
    return Episode(
        kind=kind,
        board=board,
        candidates=frozenset(cands),
        true_target=true_target,
        trace=GazeTrace.from_samples(samples),
        action_time=float(t[-1]),
        scenario=scenario,
        duration=duration * FRAME_75HZ,
    )


def generate_corpus(
    params: GazeProfileParams,
    n_episodes: int = 912,
    seed: int = 7,
    mixture: Optional[dict[Scenario, float]] = None,
) -> Corpus:
    """Play randomized boards until n_episodes decisions are recorded."""
    if n_episodes <= 0:
        raise ValueError("n_episodes must be positive")
    mixture = dict(mixture) if mixture else dict(DEFAULT_MIXTURE)
    episodes: list[Episode] = []
    board_idx = 0
    while len(episodes) < n_episodes:
        rng = np.random.default_rng([seed, board_idx])
        play = play_board(
            board_seed=seed * 100003 + board_idx,
            params=params,
            mixture=mixture,
            rng=rng,
        )
        for action in play.actions:
            episodes.append(_episode_from_action(play, action))
            if len(episodes) >= n_episodes:
                break
        board_idx += 1
    return Corpus(episodes=episodes, seed=seed, params=params, mixture=mixture)


# --- corpus serialization ---------------------------------------------------


def _episode_to_doc(ep: Episode) -> dict:
    t, x, y, valid = ep.trace.snapshot()
    return {
        "kind": ep.kind,
        "scenario": ep.scenario.value,
        "true_target": ep.true_target,
        "action_time": ep.action_time,
        "duration": ep.duration,
        "candidates": sorted(ep.candidates),
        "board": json.loads(board_to_json(ep.board)),
        "samples": [
            {"t": float(t[i]), "x": float(x[i]), "y": float(y[i]),
             "valid": bool(valid[i])}
            for i in range(len(t))
        ],
    }


def _episode_from_doc(doc: dict) -> Episode:
    samples = [
        GazeSample(s["t"], s["x"], s["y"], s["valid"]) for s in doc["samples"]
    ]
    return Episode(
        kind=doc["kind"],
        board=board_from_json(json.dumps(doc["board"])),
        candidates=frozenset(doc["candidates"]),
        true_target=doc["true_target"],
        trace=GazeTrace.from_samples(samples),
        action_time=doc["action_time"],
        scenario=Scenario(doc["scenario"]),
        duration=doc["duration"],
    )


def write_corpus(corpus: Corpus, path) -> None:
    header = {
        "version": CORPUS_VERSION,
        "seed": corpus.seed,
        "params": asdict(corpus.params),
        "mixture": {s.value: w for s, w in corpus.mixture.items()},
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for ep in corpus.episodes:
            fh.write(
                json.dumps(_episode_to_doc(ep), sort_keys=True,
                           separators=(",", ":"))
                + "\n"
            )


def read_corpus(path) -> Corpus:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("version") != CORPUS_VERSION:
            raise ValueError(
                f"unsupported corpus version: {header.get('version')!r}"
            )
        raw = header["params"]
        for key in ("fixation_duration", "alternation_count",
                    "pick_duration", "place_duration"):
            raw[key] = tuple(raw[key])
        params = GazeProfileParams(**raw)
        mixture = {Scenario(k): float(v) for k, v in header["mixture"].items()}
        episodes = [_episode_from_doc(json.loads(line)) for line in fh if line.strip()]
    return Corpus(episodes=episodes, seed=header["seed"], params=params,
                  mixture=mixture)
