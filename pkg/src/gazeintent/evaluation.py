"""Anticipation-window sweeps and corpus statistics.

The sweep slides the 4 s window away from the action in single-frame
steps, predicts every episode at each offset, and records the fraction
of correct target choices. Episodes whose trace does not reach back far
enough at an offset are skipped and counted rather than failing the
sweep. Curve comparisons report per-offset differences with a paired
sign test across grid points.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .attention import AttentionConfig
from .predictor import (
    DEFAULT_DECISION_THRESHOLD,
    Models,
    build_training_set,
    predict,
)
from .svm import DegenerateDataError, SvmModel, SvmParams, train_calibrated
from .synthetic import Corpus


class GridMismatchError(Exception):
    """Two curves were compared on different t_prior grids."""


class InsufficientTraceError(Exception):
    """An episode's trace does not cover the window at a given offset."""


@dataclass(frozen=True)
class AccuracyCurve:
    kind: str
    t_prior: np.ndarray = field(repr=False)
    accuracy: np.ndarray = field(repr=False)
    n_samples: np.ndarray = field(repr=False)
    skipped: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ComparisonReport:
    mean_difference: float
    differences: np.ndarray = field(repr=False)
    n_pos: int = 0
    n_neg: int = 0
    n_tie: int = 0
    sign_test_p: float = 1.0


@dataclass(frozen=True)
class GroupStats:
    mean: float
    sd: float
    n: int


@dataclass(frozen=True)
class DurationStats:
    pick: GroupStats
    place: GroupStats
    t_statistic: float
    p_value: float


def low_chance_subset(corpus: Corpus, kind: str) -> Corpus:
    """Episodes of one kind where random guessing succeeds at <= 25%:
    exactly 4 pick candidates, or 4-6 place candidates."""
    if kind == "pick":
        keep = [
            ep
            for ep in corpus.episodes
            if ep.kind == "pick" and len(ep.candidates) == 4
        ]
    elif kind == "place":
        keep = [
            ep
            for ep in corpus.episodes
            if ep.kind == "place" and 4 <= len(ep.candidates) <= 6
        ]
    else:
        raise ValueError(f"unknown kind: {kind!r}")
    return replace_episodes(corpus, keep)


def replace_episodes(corpus: Corpus, episodes) -> Corpus:
    return Corpus(
        episodes=list(episodes),
        seed=corpus.seed,
        params=corpus.params,
        mixture=dict(corpus.mixture),
    )


def predict_at_offset(
    models: Models,
    episode,
    t_prior: float,
    cfg: AttentionConfig,
    threshold: float = DEFAULT_DECISION_THRESHOLD,
):
    """Prediction for one episode with the window pulled t_prior back."""
    window_end = episode.action_time - t_prior
    earliest = episode.trace.earliest_time()
    if earliest > window_end - cfg.window + cfg.frame:
        raise InsufficientTraceError(
            f"trace starts at {earliest:.3f}, window needs "
            f"{window_end - cfg.window:.3f}"
        )
    return predict(
        models, episode.trace, episode.board, episode.kind, window_end, cfg,
        threshold,
    )


def sweep_accuracy(
    models: Models,
    corpus: Corpus,
    kind: str,
    t_max: float,
    cfg: AttentionConfig,
    threshold: float = DEFAULT_DECISION_THRESHOLD,
) -> AccuracyCurve:
    """Accuracy over the t_prior grid [0, t_max] in single-frame steps."""
    episodes = [ep for ep in corpus.episodes if ep.kind == kind]
    n_steps = int(np.floor(t_max / cfg.frame + 1e-9)) + 1
    grid = np.arange(n_steps) * cfg.frame
    correct = np.zeros(n_steps, dtype=int)
    counted = np.zeros(n_steps, dtype=int)
    skipped = np.zeros(n_steps, dtype=int)
    for ep in episodes:
        for k in range(n_steps):
            try:
                pred = predict_at_offset(models, ep, grid[k], cfg, threshold)
            except InsufficientTraceError:
                skipped[k] += 1
                continue
            counted[k] += 1
            correct[k] += pred.chosen == ep.true_target
    with np.errstate(invalid="ignore"):
        accuracy = np.where(counted > 0, correct / np.maximum(counted, 1), np.nan)
    return AccuracyCurve(
        kind=kind, t_prior=grid, accuracy=accuracy, n_samples=counted,
        skipped=skipped,
    )


def train_f1_baseline(
    corpus: Corpus, params: SvmParams, seed: int, cfg: AttentionConfig = None
) -> SvmModel:
    """Pick model trained on the candidate's own 300-entry profile only."""
    cfg = cfg or AttentionConfig()
    x, y = build_training_set(corpus.episodes, "pick", cfg, f1_only=True)
    if len(x) == 0:
        raise DegenerateDataError("corpus has no pick episodes")
    return train_calibrated(x, y, params, seed)


def compare_curves(a: AccuracyCurve, b: AccuracyCurve) -> ComparisonReport:
    """Per-offset differences a-b with a paired sign test over grid points."""
    if len(a.t_prior) != len(b.t_prior) or not np.allclose(
        a.t_prior, b.t_prior, atol=1e-12
    ):
        raise GridMismatchError("curves use different t_prior grids")
    diffs = a.accuracy - b.accuracy
    valid = np.isfinite(diffs)
    n_pos = int((diffs[valid] > 0).sum())
    n_neg = int((diffs[valid] < 0).sum())
    n_tie = int(valid.sum()) - n_pos - n_neg
    if n_pos + n_neg > 0:
        p = float(
            stats.binomtest(n_pos, n_pos + n_neg, 0.5, alternative="two-sided").pvalue
        )
    else:
        p = 1.0
    return ComparisonReport(
        mean_difference=float(np.nanmean(diffs)) if valid.any() else 0.0,
        differences=diffs,
        n_pos=n_pos,
        n_neg=n_neg,
        n_tie=n_tie,
        sign_test_p=p,
    )


def chance_level(kind: str, n_candidates: int = 4) -> float:
    return 1.0 / n_candidates


def duration_stats(corpus: Corpus) -> DurationStats:
    """Group means/SDs and a Welch two-sample t-test (pick vs place)."""
    picks = np.array([ep.duration for ep in corpus.episodes if ep.kind == "pick"])
    places = np.array([ep.duration for ep in corpus.episodes if ep.kind == "place"])
    if len(picks) < 2 or len(places) < 2:
        raise DegenerateDataError("need >= 2 episodes of each kind")
    v1, v2 = picks.var(ddof=1), places.var(ddof=1)
    n1, n2 = len(picks), len(places)
    se_sq = v1 / n1 + v2 / n2 + 1e-24  # epsilon guards zero-variance groups
    t = float((picks.mean() - places.mean()) / np.sqrt(se_sq))
    dof = se_sq**2 / (
        (v1 / n1) ** 2 / max(n1 - 1, 1) + (v2 / n2) ** 2 / max(n2 - 1, 1) + 1e-300
    )
    dof = max(float(dof), 1.0)
    p = float(2.0 * stats.t.sf(abs(t), dof))
    return DurationStats(
        pick=GroupStats(float(picks.mean()), float(picks.std(ddof=1)), n1),
        place=GroupStats(float(places.mean()), float(places.std(ddof=1)), n2),
        t_statistic=t,
        p_value=p,
    )


def spearman_trend(curve: AccuracyCurve) -> float:
    """Rank correlation between accuracy and -t_prior over the grid."""
    valid = np.isfinite(curve.accuracy)
    rho, _ = stats.spearmanr(curve.accuracy[valid], -curve.t_prior[valid])
    return float(rho)


def curve_to_csv(curve: AccuracyCurve, path) -> None:
    with open(path, "w") as fh:
        fh.write("t_prior_s,accuracy,n\n")
        for t, acc, n in zip(curve.t_prior, curve.accuracy, curve.n_samples):
            fh.write(f"{t:.6f},{acc:.6f},{n}\n")


def curve_from_csv(path, kind: str) -> AccuracyCurve:
    rows = np.genfromtxt(path, delimiter=",", skip_header=1)
    rows = np.atleast_2d(rows)
    return AccuracyCurve(
        kind=kind,
        t_prior=rows[:, 0],
        accuracy=rows[:, 1],
        n_samples=rows[:, 2].astype(int),
        skipped=np.zeros(len(rows), dtype=int),
    )


def comparison_to_json(report: ComparisonReport, path=None) -> str:
    doc = {
        "mean_difference": report.mean_difference,
        "n_pos": report.n_pos,
        "n_neg": report.n_neg,
        "n_tie": report.n_tie,
        "sign_test_p": report.sign_test_p,
        "differences": [
            None if not np.isfinite(d) else float(d) for d in report.differences
        ],
    }
    text = json.dumps(doc, sort_keys=True, indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
