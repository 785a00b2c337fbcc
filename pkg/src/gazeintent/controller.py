"""Behavior modes mapping live predictions to effector motion.

The controller idles in a crouch while every candidate probability is
low, commits once per decision cycle when the top probability crosses
the threshold or the 1.3 s decision cap runs out, and reaches for a
target chosen by mode: the argmax (follow), the argmin (rebel), or a
uniform draw made once per cycle (random). A changed candidate set or a
completed user action resets the cycle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Optional

from .predictor import Prediction

Point = tuple[float, float]


class Mode(str, Enum):
    FOLLOW = "follow"
    REBEL = "rebel"
    RANDOM = "random"


PHASE_CROUCHED = "crouched"
PHASE_DECIDING = "deciding"
PHASE_COMMITTED = "committed"


@dataclass(frozen=True)
class ControllerState:
    home_pos: Point
    tip_pos: Point
    phase: str = PHASE_CROUCHED
    elapsed: float = 0.0
    committed_target: Optional[int] = None
    cycle_candidates: Optional[frozenset[int]] = None
    tip_target: Optional[Point] = None
    threshold: float = 0.55
    decision_cap: float = 1.3
    tip_speed: float = 300.0  # mm/s


def initial_state(
    home_pos: Point = (40.0, 400.0),
    threshold: float = 0.55,
    decision_cap: float = 1.3,
    tip_speed: float = 300.0,
) -> ControllerState:
    return ControllerState(
        home_pos=home_pos,
        tip_pos=home_pos,
        threshold=threshold,
        decision_cap=decision_cap,
        tip_speed=tip_speed,
    )


def _select_target(
    per_candidate: dict[int, float], mode: Mode, rng
) -> int:
    cands = sorted(per_candidate)
    if mode is Mode.FOLLOW:
        return max(cands, key=lambda c: per_candidate[c])
    if mode is Mode.REBEL:
        return min(cands, key=lambda c: (per_candidate[c], c))
    return int(cands[rng.integers(len(cands))])


def step(
    state: ControllerState,
    prediction: Prediction,
    mode: Mode,
    dt: float,
    rng,
    positions: dict[int, Point],
) -> tuple[ControllerState, Optional[Point]]:
    """Advance the decision state machine by one tick.

    Returns the new state and the current reach target (None while not
    committed). positions maps candidate ids to board millimeters; the
    random draw happens exactly once, at commit time, so re-invocations
    within a cycle never re-roll.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    cands = frozenset(prediction.per_candidate)

    if state.phase == PHASE_COMMITTED:
        if cands == state.cycle_candidates:
            return state, state.tip_target
        state = reset_cycle(state)  # the world moved on: new cycle

    if state.cycle_candidates is not None and cands != state.cycle_candidates:
        state = replace(state, elapsed=0.0)
    elapsed = state.elapsed + dt

    max_prob = max(prediction.per_candidate.values())
    if max_prob >= state.threshold or elapsed >= state.decision_cap - 1e-12:
        target = _select_target(prediction.per_candidate, mode, rng)
        tip_target = positions[target]
        state = replace(
            state,
            phase=PHASE_COMMITTED,
            elapsed=min(elapsed, state.decision_cap),
            committed_target=target,
            cycle_candidates=cands,
            tip_target=tip_target,
        )
        return state, tip_target

    state = replace(
        state,
        phase=PHASE_DECIDING,
        elapsed=elapsed,
        cycle_candidates=cands,
        tip_target=None,
    )
    return state, None


def reset_cycle(state: ControllerState) -> ControllerState:
    """Return to the crouch; the next step opens a fresh decision cycle."""
    return replace(
        state,
        phase=PHASE_CROUCHED,
        elapsed=0.0,
        committed_target=None,
        cycle_candidates=None,
        tip_target=None,
    )


def move_tip(state: ControllerState, dt: float) -> ControllerState:
    """Advance the tip toward its goal at constant speed, clamped there."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    goal = state.tip_target if state.tip_target is not None else state.home_pos
    dx = goal[0] - state.tip_pos[0]
    dy = goal[1] - state.tip_pos[1]
    dist = math.hypot(dx, dy)
    reach = state.tip_speed * dt
    if dist <= reach or dist == 0.0:
        return replace(state, tip_pos=goal)
    frac = reach / dist
    return replace(
        state,
        tip_pos=(state.tip_pos[0] + dx * frac, state.tip_pos[1] + dy * frac),
    )


def corrective_move_count(log: Iterable[dict]) -> int:
    """Count user actions whose target differs from the active commitment.

    The log carries {"type": "commit", "target": id} and
    {"type": "action", "target": id} events in time order; an action
    closes the cycle either way.
    """
    count = 0
    active: Optional[int] = None
    for event in log:
        kind = event.get("type")
        if kind == "commit":
            active = event["target"]
        elif kind == "action":
            if active is not None and active != event["target"]:
                count += 1
            active = None
    return count
