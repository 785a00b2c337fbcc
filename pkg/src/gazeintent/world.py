"""Block-copy task world: board geometry, piece rules, pick/place legality.

The task plane is measured in millimeters. A board holds a 6x4 workspace
grid of 24 pattern cells (6 of each of the 4 piece types, random
orientations, 5 pre-completed) plus a 4-slot stock column to the left.
Stock slots are replenished on pick, so each slot permanently offers one
piece type.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

N_TYPES = 4
N_CELLS = 24
CELLS_PER_TYPE = 6
N_PRECOMPLETED = 5
BOARD_VERSION = 1


class WorldError(Exception):
    """Base class for task-world rule violations."""


class HeldPieceError(WorldError):
    """A piece is already held when an empty hand was required."""


class NoHeldPieceError(WorldError):
    """No piece is held when one was required."""


class IllegalPickError(WorldError):
    """Pick attempted from a slot that is not a legal candidate."""


class PlaceOutcome(Enum):
    COMPLETED = "completed"
    MISMATCH_RETURNED_TO_STOCK = "mismatch_returned_to_stock"


Point = tuple[float, float]


@dataclass(frozen=True)
class BoardLayout:
    """Positions (mm) of the 4 stock slots and 24 pattern cells."""

    stock_slots: tuple[Point, ...]
    pattern_cells: tuple[Point, ...]
    cell_size: float

    def __post_init__(self) -> None:
        if len(self.stock_slots) != 4:
            raise ValueError("layout needs exactly 4 stock slots")
        if len(self.pattern_cells) != N_CELLS:
            raise ValueError(f"layout needs exactly {N_CELLS} pattern cells")
        everything = list(self.stock_slots) + list(self.pattern_cells)
        if len(set(everything)) != len(everything):
            raise ValueError("layout positions must be pairwise distinct")

    @classmethod
    def standard(cls) -> "BoardLayout":
        """Desk-scale default: 80 mm cells, 10 mm gutters, 6x4 workspace,
        stock column 120 mm (edge to edge) left of the workspace."""
        cell = 80.0
        pitch = cell + 10.0
        stock_x = cell / 2.0
        slots = tuple((stock_x, cell / 2.0 + i * pitch) for i in range(4))
        ws_x0 = stock_x + cell / 2.0 + 120.0 + cell / 2.0
        cells = tuple(
            (ws_x0 + col * pitch, cell / 2.0 + row * pitch)
            for row in range(4)
            for col in range(6)
        )
        return cls(stock_slots=slots, pattern_cells=cells, cell_size=cell)

    def slot_position(self, slot_id: int) -> Point:
        return self.stock_slots[slot_id]

    def cell_position(self, cell_id: int) -> Point:
        return self.pattern_cells[cell_id]


@dataclass(frozen=True)
class BoardState:
    """Immutable board snapshot; all rule operations return new states."""

    layout: BoardLayout
    seed: int
    cell_types: tuple[int, ...]
    cell_orients: tuple[int, ...]
    completed: tuple[bool, ...]
    stock: tuple[int, ...]
    held: Optional[tuple[int, int]] = None

    def incomplete_cells_of_type(self, piece_type: int) -> list[int]:
        return [
            i
            for i in range(N_CELLS)
            if self.cell_types[i] == piece_type and not self.completed[i]
        ]

    @property
    def completed_count(self) -> int:
        return sum(self.completed)


def new_board(seed: int, layout: Optional[BoardLayout] = None) -> BoardState:
    """Randomized board: 6 cells of each type, random orientations,
    5 pre-completed cells, one stock slot per type. Pure in (seed, layout)."""
    if layout is None:
        layout = BoardLayout.standard()
    rng = np.random.default_rng(seed)
    types = np.repeat(np.arange(1, N_TYPES + 1), CELLS_PER_TYPE)
    rng.shuffle(types)
    orients = rng.integers(0, 4, size=N_CELLS)
    pre = rng.choice(N_CELLS, size=N_PRECOMPLETED, replace=False)
    completed = np.zeros(N_CELLS, dtype=bool)
    completed[pre] = True
    stock = rng.permutation(np.arange(1, N_TYPES + 1))
    return BoardState(
        layout=layout,
        seed=seed,
        cell_types=tuple(int(t) for t in types),
        cell_orients=tuple(int(o) for o in orients),
        completed=tuple(bool(c) for c in completed),
        stock=tuple(int(s) for s in stock),
        held=None,
    )


def legal_pick_candidates(board: BoardState) -> set[int]:
    """Slot ids whose piece type still has at least one incomplete cell."""
    if board.held is not None:
        raise HeldPieceError("cannot pick while holding a piece")
    return {
        slot
        for slot in range(4)
        if board.incomplete_cells_of_type(board.stock[slot])
    }


def legal_place_candidates(board: BoardState) -> set[int]:
    """Incomplete cells whose model type matches the held piece.

    Orientation is ignored for candidacy; the user may still rotate
    before dropping."""
    if board.held is None:
        raise NoHeldPieceError("no piece held")
    return set(board.incomplete_cells_of_type(board.held[0]))


def apply_pick(board: BoardState, slot_id: int) -> BoardState:
    """Take the slot's piece (orientation 0). The slot replenishes
    immediately with the same type."""
    if board.held is not None:
        raise IllegalPickError("cannot pick while holding a piece")
    if slot_id not in legal_pick_candidates(board):
        raise IllegalPickError(f"slot {slot_id} is not a legal pick")
    return replace(board, held=(board.stock[slot_id], 0))


def rotate_held(board: BoardState) -> BoardState:
    """Advance the held piece's orientation by one quarter turn."""
    if board.held is None:
        raise NoHeldPieceError("no piece held")
    piece_type, orient = board.held
    return replace(board, held=(piece_type, (orient + 1) % 4))


def apply_place(board: BoardState, cell_id: int) -> tuple[BoardState, PlaceOutcome]:
    """Drop the held piece on a cell.

    Completes the cell when it is incomplete and both type and orientation
    match the model; any other drop (wrong cell, wrong orientation,
    already-completed cell) returns the piece to stock. Either way the
    hand ends empty."""
    if board.held is None:
        raise NoHeldPieceError("no piece held")
    if not 0 <= cell_id < N_CELLS:
        raise ValueError(f"cell id {cell_id} out of range")
    piece_type, orient = board.held
    matches = (
        not board.completed[cell_id]
        and board.cell_types[cell_id] == piece_type
        and board.cell_orients[cell_id] == orient
    )
    if matches:
        done = list(board.completed)
        done[cell_id] = True
        return (
            replace(board, completed=tuple(done), held=None),
            PlaceOutcome.COMPLETED,
        )
    return replace(board, held=None), PlaceOutcome.MISMATCH_RETURNED_TO_STOCK


def is_complete(board: BoardState) -> bool:
    return all(board.completed)


def board_to_json(board: BoardState) -> str:
    """Versioned JSON serialization (layout is not embedded)."""
    doc = {
        "version": BOARD_VERSION,
        "seed": board.seed,
        "cells": [
            {
                "cell_id": i,
                "type": board.cell_types[i],
                "orient": board.cell_orients[i],
                "completed": board.completed[i],
            }
            for i in range(N_CELLS)
        ],
        "stock": list(board.stock),
        "held": list(board.held) if board.held is not None else None,
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def board_from_json(text: str, layout: Optional[BoardLayout] = None) -> BoardState:
    doc = json.loads(text)
    if doc.get("version") != BOARD_VERSION:
        raise ValueError(f"unsupported board version: {doc.get('version')!r}")
    cells = sorted(doc["cells"], key=lambda c: c["cell_id"])
    if [c["cell_id"] for c in cells] != list(range(N_CELLS)):
        raise ValueError("board JSON must describe cells 0..23 exactly once")
    held = doc["held"]
    return BoardState(
        layout=layout if layout is not None else BoardLayout.standard(),
        seed=int(doc["seed"]),
        cell_types=tuple(int(c["type"]) for c in cells),
        cell_orients=tuple(int(c["orient"]) for c in cells),
        completed=tuple(bool(c["completed"]) for c in cells),
        stock=tuple(int(s) for s in doc["stock"]),
        held=(int(held[0]), int(held[1])) if held is not None else None,
    )
