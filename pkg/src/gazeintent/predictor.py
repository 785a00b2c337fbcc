"""Per-candidate feature vectors and one-vs-all target resolution.

Pick candidates are scored on the concatenation of the slot's own
attention profile (F1) with the profile of the most-attended incomplete
pattern cell of the same type (F2, zero vector when the type is fully
placed); place candidates use the cell's own profile alone. The winner
is the candidate with the highest calibrated P(chosen=1), ties broken
toward the lowest object id. A pick model whose input dimension equals
one window (300) is treated as an F1-only baseline.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .attention import AttentionConfig, GazeTrace, compute_vap_matrix
from .svm import SvmModel, predict_proba
from .world import BoardState, legal_pick_candidates, legal_place_candidates

DEFAULT_DECISION_THRESHOLD = 0.55


class PredictorError(Exception):
    pass


class EmptySlotError(PredictorError):
    """Pick features requested for a slot that holds no piece."""


class IllegalCandidateError(PredictorError):
    """Place features requested for a cell that cannot take the held piece."""


class NoCandidatesError(PredictorError):
    """Prediction requested with an empty candidate set."""


class Models(NamedTuple):
    pick: SvmModel
    place: SvmModel


@dataclass(frozen=True)
class FeatureVector:
    kind: str  # "pick" | "place"
    values: np.ndarray


@dataclass(frozen=True)
class Prediction:
    t: float
    kind: str
    per_candidate: dict[int, float]
    chosen: int
    decided: bool


def prediction_to_json(p: Prediction) -> str:
    return json.dumps(
        {
            "t": p.t,
            "kind": p.kind,
            "probs": {str(k): v for k, v in sorted(p.per_candidate.items())},
            "chosen": p.chosen,
            "decided": p.decided,
        },
        sort_keys=True,
        separators=(",", ":"),
    )


def _pick_feature_rows(
    trace: GazeTrace,
    board: BoardState,
    slots: list[int],
    window_end: float,
    cfg: AttentionConfig,
    f1_only: bool = False,
) -> np.ndarray:
    """Feature matrix for several pick candidates sharing one VAP pass."""
    for slot in slots:
        if not 0 <= slot < 4:
            raise EmptySlotError(f"slot {slot} holds no piece")
    layout = board.layout
    positions = [layout.slot_position(s) for s in slots]
    cell_ids: list[list[int]] = []
    for slot in slots:
        cells = board.incomplete_cells_of_type(board.stock[slot])
        cell_ids.append(cells)
        positions.extend(layout.cell_position(c) for c in cells)
    vaps = compute_vap_matrix(trace, np.asarray(positions), window_end, cfg)

    n = cfg.samples_per_window
    rows = np.zeros((len(slots), n if f1_only else 2 * n))
    offset = len(slots)
    for i, slot in enumerate(slots):
        rows[i, :n] = vaps[i]
        cells = cell_ids[i]
        if not f1_only and cells:
            block = vaps[offset : offset + len(cells)]
            means = block.mean(axis=1)
            # max mean wins; exact ties go to the lowest cell id
            best = int(np.lexsort((cells, -means))[0])
            rows[i, n:] = block[best]
        offset += len(cells)
    return rows


def pick_features(
    trace: GazeTrace,
    board: BoardState,
    candidate_slot: int,
    window_end: float,
    cfg: AttentionConfig,
    f1_only: bool = False,
) -> FeatureVector:
    row = _pick_feature_rows(
        trace, board, [candidate_slot], window_end, cfg, f1_only
    )[0]
    return FeatureVector(kind="pick", values=row)


def _place_feature_rows(
    trace: GazeTrace,
    board: BoardState,
    cells: list[int],
    window_end: float,
    cfg: AttentionConfig,
) -> np.ndarray:
    if board.held is None:
        raise IllegalCandidateError("no piece held")
    legal = board.incomplete_cells_of_type(board.held[0])
    for cell in cells:
        if cell not in legal:
            raise IllegalCandidateError(
                f"cell {cell} cannot take the held piece"
            )
    positions = np.asarray([board.layout.cell_position(c) for c in cells])
    return compute_vap_matrix(trace, positions, window_end, cfg)


def place_features(
    trace: GazeTrace,
    board: BoardState,
    candidate_cell: int,
    window_end: float,
    cfg: AttentionConfig,
) -> FeatureVector:
    row = _place_feature_rows(trace, board, [candidate_cell], window_end, cfg)[0]
    return FeatureVector(kind="place", values=row)


def candidate_features(
    trace: GazeTrace,
    board: BoardState,
    kind: str,
    window_end: float,
    cfg: AttentionConfig,
    f1_only: bool = False,
) -> tuple[list[int], np.ndarray]:
    """(sorted candidate ids, feature matrix) for one prediction instant."""
    if kind == "pick":
        cands = sorted(legal_pick_candidates(board))
        if not cands:
            raise NoCandidatesError("no legal pick candidates")
        return cands, _pick_feature_rows(trace, board, cands, window_end, cfg,
                                         f1_only)
    if kind == "place":
        cands = sorted(legal_place_candidates(board))
        if not cands:
            raise NoCandidatesError("no legal place candidates")
        return cands, _place_feature_rows(trace, board, cands, window_end, cfg)
    raise ValueError(f"unknown kind: {kind!r}")


def resolve_one_vs_all(
    t: float, kind: str, per_candidate: dict[int, float], threshold: float
) -> Prediction:
    if not per_candidate:
        raise NoCandidatesError("empty candidate set")
    chosen = max(sorted(per_candidate), key=lambda c: per_candidate[c])
    return Prediction(
        t=t,
        kind=kind,
        per_candidate=dict(per_candidate),
        chosen=chosen,
        decided=max(per_candidate.values()) >= threshold,
    )


def predict(
    models: Models,
    trace: GazeTrace,
    board: BoardState,
    kind: str,
    window_end: float,
    cfg: AttentionConfig,
    threshold: float = DEFAULT_DECISION_THRESHOLD,
) -> Prediction:
    """Evaluate P(chosen=1) for every legal candidate and take the argmax."""
    model = models.pick if kind == "pick" else models.place
    f1_only = kind == "pick" and model.dim == cfg.samples_per_window
    cands, rows = candidate_features(trace, board, kind, window_end, cfg,
                                     f1_only)
    probs = predict_proba(model, rows)
    per_candidate = {c: float(p) for c, p in zip(cands, probs)}
    return resolve_one_vs_all(window_end, kind, per_candidate, threshold)


def build_training_set(
    corpus_episodes,
    kind: str,
    cfg: AttentionConfig,
    f1_only: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """chosen=1 row for each episode's target, chosen=0 per other candidate."""
    xs, ys = [], []
    for ep in corpus_episodes:
        if ep.kind != kind:
            continue
        cands = sorted(ep.candidates)
        if kind == "pick":
            rows = _pick_feature_rows(
                ep.trace, ep.board, cands, ep.action_time, cfg, f1_only
            )
        else:
            rows = _place_feature_rows(
                ep.trace, ep.board, cands, ep.action_time, cfg
            )
        for c, row in zip(cands, rows):
            xs.append(row)
            ys.append(1 if c == ep.true_target else 0)
    if not xs:
        return np.zeros((0, 0)), np.zeros(0, dtype=int)
    return np.vstack(xs), np.asarray(ys, dtype=int)


def train_predictors(corpus, params, seed: int, cfg: AttentionConfig = None):
    """Train the pick (F1||F2) and place (F1) models on a corpus."""
    from .svm import DegenerateDataError, train_calibrated

    cfg = cfg or AttentionConfig()
    x_pick, y_pick = build_training_set(corpus.episodes, "pick", cfg)
    x_place, y_place = build_training_set(corpus.episodes, "place", cfg)
    if len(x_pick) == 0 or len(x_place) == 0:
        raise DegenerateDataError("corpus must contain both episode kinds")
    pick_model = train_calibrated(x_pick, y_pick, params, seed)
    place_model = train_calibrated(x_place, y_place, params, seed + 1)
    return Models(pick=pick_model, place=place_model)
