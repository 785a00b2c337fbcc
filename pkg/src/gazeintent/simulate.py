"""Closed-loop simulation: synthetic user vs. intent-driven controller.

The user is non-adaptive (always executes their planned move), so the
controller's commitment quality is measurable directly: a corrective
move is any action whose target differs from the active commitment at
execution time.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .attention import AttentionConfig, GazeSample, GazeTrace
from .controller import Mode, initial_state, move_tip, reset_cycle, step
from .predictor import Models, predict
from .synthetic import GazeProfileParams, Scenario, play_board

CONTROLLER_HOME = (40.0, 420.0)


@dataclass
class SimulationReport:
    mode: str
    boards: int
    actions: int
    commits: int
    decided_actions: int  # actions executed while a commitment was active
    matches: int
    match_rate: float
    corrective_moves: int
    mean_completion_time: float

    def to_dict(self) -> dict:
        return asdict(self)


def run_closed_loop(
    models: Models,
    mode: Mode,
    board_seeds: list[int],
    params: GazeProfileParams,
    mixture: dict[Scenario, float],
    cfg: AttentionConfig,
    threshold: float = 0.55,
    seed: int = 0,
    max_blocks: Optional[int] = None,
) -> SimulationReport:
    """Play each board live: 75 Hz gaze in, per-frame prediction, one
    controller stepping in the given mode; commitments scored against the
    user's executed actions."""
    total_actions = commits = decided = matches = corrective = 0
    completion_times = []

    for board_seed in board_seeds:
        rng_user = np.random.default_rng([seed, board_seed, 1])
        rng_ctrl = np.random.default_rng([seed, board_seed, 2])
        play = play_board(
            board_seed, params, mixture, rng_user, max_blocks=max_blocks
        )
        trace = GazeTrace(capacity=1200)
        state = initial_state(home_pos=CONTROLLER_HOME, threshold=threshold)
        ptr = 0
        for i in range(len(play.t)):
            trace.append(
                GazeSample(
                    float(play.t[i]),
                    float(play.x[i]),
                    float(play.y[i]),
                    bool(play.valid[i]),
                )
            )
            if ptr >= len(play.actions):
                break
            action = play.actions[ptr]
            board = action.board_before
            layout = board.layout
            positions = {
                c: (
                    layout.slot_position(c)
                    if action.kind == "pick"
                    else layout.cell_position(c)
                )
                for c in action.candidates
            }
            pred = predict(
                models, trace, board, action.kind, float(play.t[i]), cfg,
                threshold,
            )
            was_committed = state.committed_target is not None
            state, _ = step(state, pred, mode, cfg.frame, rng_ctrl, positions)
            if state.committed_target is not None and not was_committed:
                commits += 1
            state = move_tip(state, cfg.frame)

            if play.t[i] >= action.t - 1e-9:
                total_actions += 1
                if state.committed_target is not None:
                    decided += 1
                    if state.committed_target == action.target:
                        matches += 1
                    else:
                        corrective += 1
                state = reset_cycle(state)
                ptr += 1
        completion_times.append(float(play.t[-1]))

    return SimulationReport(
        mode=mode.value,
        boards=len(board_seeds),
        actions=total_actions,
        commits=commits,
        decided_actions=decided,
        matches=matches,
        match_rate=matches / decided if decided else 0.0,
        corrective_moves=corrective,
        mean_completion_time=(
            float(np.mean(completion_times)) if completion_times else 0.0
        ),
    )
