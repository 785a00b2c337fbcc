"""Synthetic client: turns a board playthrough into wire messages.

Used to drive a live session over loopback for integration tests and
replay checks. The script streams gaze at 75 Hz, pulls the trigger on
the final target fixation of each episode, and presses rotate at the
start of each carry phase, with the gripper latency baked into the
timeline so triggers never land while the gripper is busy.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .attention import FRAME_75HZ
from .synthetic import GazeProfileParams, Scenario, play_board

# dropout-free mixture: a trigger anchored at an invalid sample would miss
DRIVER_MIXTURE = {
    Scenario.ONE_DOMINANT: 0.6,
    Scenario.ALTERNATING: 0.25,
    Scenario.TRENDING_CHOICE: 0.15,
}


def build_session_script(
    board_seed: int,
    mode: str,
    params: GazeProfileParams,
    rng,
    mixture: Optional[dict[Scenario, float]] = None,
    max_blocks: Optional[int] = None,
    gripper_latency: float = 1.3,
) -> list[dict]:
    """Client message list for one session, timestamps non-decreasing."""
    play = play_board(
        board_seed,
        params,
        dict(mixture or DRIVER_MIXTURE),
        rng,
        max_blocks=max_blocks,
        action_latency=gripper_latency,
    )
    extras: dict[int, list[dict]] = {}
    for action in play.actions:
        f_action = round(action.t / FRAME_75HZ)
        extras.setdefault(f_action, []).append(
            {"tag": "trigger", "t": action.t}
        )
        if action.kind == "place" and action.rotations:
            duration_frames = round(action.duration / FRAME_75HZ)
            start = f_action - duration_frames + 1
            for j in range(action.rotations):
                f_rot = start + 1 + j
                extras.setdefault(f_rot, []).append(
                    {"tag": "rotate", "t": f_rot * FRAME_75HZ}
                )

    msgs: list[dict] = [
        {"tag": "start", "t": 0.0, "seed": board_seed, "mode": mode}
    ]
    for i in range(len(play.t)):
        msgs.append(
            {
                "tag": "gaze",
                "t": float(play.t[i]),
                "x": float(play.x[i]),
                "y": float(play.y[i]),
                "valid": bool(play.valid[i]),
            }
        )
        for extra in extras.get(i, ()):
            msgs.append(extra)
    return msgs


def drive_session(session, msgs: list[dict]) -> list[dict]:
    """Feed a script straight into a session (no sockets); returns responses."""
    responses: list[dict] = []
    for msg in msgs:
        responses.extend(session.ingest(msg))
    return responses


def script_for_seed(
    seed: int,
    mode: str,
    params: Optional[GazeProfileParams] = None,
    max_blocks: Optional[int] = 2,
) -> list[dict]:
    rng = np.random.default_rng([seed, 424242])
    return build_session_script(
        seed, mode, params or GazeProfileParams(), rng, max_blocks=max_blocks
    )
