"""Gaze stream to per-object visual attention profiles.

A profile is the gaze-proximity probability exp(-d^2 / 2 sigma^2) of one
object, resampled onto a uniform 300-slot grid covering the trailing 4 s
window at the native 75 Hz frame rate. Tracking gaps contribute zero
attention rather than holding the last value, so dropouts stay visible
to the classifier downstream.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

FRAME_75HZ = 1.0 / 75.0


class EmptyTraceError(Exception):
    """The gaze trace holds no samples at all."""


class GazeSample(NamedTuple):
    t: float
    x: float
    y: float
    valid: bool = True


def sample_to_json(s: GazeSample) -> str:
    return json.dumps(
        {"t": s.t, "x": s.x, "y": s.y, "valid": bool(s.valid)},
        separators=(",", ":"),
    )


def sample_from_json(line: str) -> GazeSample:
    doc = json.loads(line)
    return GazeSample(
        t=float(doc["t"]), x=float(doc["x"]), y=float(doc["y"]),
        valid=bool(doc["valid"]),
    )


@dataclass(frozen=True)
class AttentionConfig:
    """Window geometry for attention profiles.

    frame defaults to the true 75 Hz period (~13.333 ms); sigma is the
    gaze distance producing a significant attention drop, 60 mm to match
    the 80 mm piece size.
    """

    sigma: float = 60.0
    window: float = 4.0
    samples_per_window: int = 300
    frame: float = FRAME_75HZ

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.frame <= 0:
            raise ValueError("frame must be positive")
        if self.samples_per_window != round(self.window / self.frame):
            raise ValueError(
                "samples_per_window must equal round(window / frame)"
            )


@dataclass(frozen=True)
class VisualAttentionProfile:
    """One object's gaze-proximity series over the trailing window."""

    object_id: object
    window_end: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.values.ndim != 1:
            raise ValueError("profile values must be a 1-D vector")

    def mean(self) -> float:
        return float(self.values.mean())


class GazeTrace:
    """Single-writer ring buffer of gaze samples in arrival order.

    Reads take a chronological snapshot, so many profiles can be computed
    concurrently over one trace without coordination.
    """

    def __init__(self, capacity: int = 1200):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._t = np.zeros(capacity)
        self._x = np.zeros(capacity)
        self._y = np.zeros(capacity)
        self._valid = np.zeros(capacity, dtype=bool)
        self._ptr = 0
        self._full = False

    @classmethod
    def from_samples(
        cls, samples: Iterable[GazeSample], capacity: int | None = None
    ) -> "GazeTrace":
        items = list(samples)
        trace = cls(capacity=capacity or max(len(items), 1))
        for s in items:
            trace.append(s)
        return trace

    def __len__(self) -> int:
        return self.capacity if self._full else self._ptr

    def append(self, sample: GazeSample) -> None:
        if len(self) and sample.t < self.latest_time():
            raise ValueError("gaze samples must arrive in non-decreasing t")
        i = self._ptr
        self._t[i] = sample.t
        self._x[i] = sample.x
        self._y[i] = sample.y
        self._valid[i] = sample.valid
        self._ptr = (i + 1) % self.capacity
        if self._ptr == 0:
            self._full = True

    def latest_time(self) -> float:
        if not len(self):
            raise EmptyTraceError("trace holds no samples")
        return float(self._t[(self._ptr - 1) % self.capacity])

    def earliest_time(self) -> float:
        if not len(self):
            raise EmptyTraceError("trace holds no samples")
        start = self._ptr if self._full else 0
        return float(self._t[start % self.capacity])

    def snapshot(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Chronological copies of (t, x, y, valid)."""
        if self._full:
            order = np.r_[self._ptr : self.capacity, 0 : self._ptr]
        else:
            order = np.arange(self._ptr)
        return (
            self._t[order].copy(),
            self._x[order].copy(),
            self._y[order].copy(),
            self._valid[order].copy(),
        )


def gaze_distance(gaze_pos: Sequence[float], object_pos: Sequence[float]) -> float:
    """Euclidean distance (mm) between gaze point and object center."""
    return math.hypot(gaze_pos[0] - object_pos[0], gaze_pos[1] - object_pos[1])


def attention_sample(d: float, sigma: float) -> float:
    """Gaze-proximity probability exp(-d^2 / 2 sigma^2)."""
    return math.exp(-(d * d) / (2.0 * sigma * sigma))


def compute_vap_matrix(
    trace: GazeTrace,
    positions: np.ndarray,
    window_end: float,
    cfg: AttentionConfig,
) -> np.ndarray:
    """Attention profiles for many objects over one window, shape (m, n).

    window_end is quantized to the frame grid. Each slot takes the
    nearest-in-time valid finite sample within one frame; uncovered slots
    are zero. Row i corresponds to positions[i]; sharing the slot
    assignment across objects is what keeps per-frame prediction cheap.
    """
    if not len(trace):
        raise EmptyTraceError("trace holds no samples")
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    n = cfg.samples_per_window
    k_end = round(window_end / cfg.frame)
    slot_t = (np.arange(n) + (k_end - (n - 1))) * cfg.frame

    t, x, y, valid = trace.snapshot()
    ok = valid & np.isfinite(t) & np.isfinite(x) & np.isfinite(y)
    out = np.zeros((positions.shape[0], n))
    if not ok.any():
        return out
    tv, xv, yv = t[ok], x[ok], y[ok]

    right = np.searchsorted(tv, slot_t)
    left = np.clip(right - 1, 0, len(tv) - 1)
    right = np.clip(right, 0, len(tv) - 1)
    use_left = np.abs(slot_t - tv[left]) <= np.abs(tv[right] - slot_t)
    idx = np.where(use_left, left, right)
    covered = np.abs(tv[idx] - slot_t) <= cfg.frame * (1 + 1e-9)

    dx = xv[idx][None, :] - positions[:, 0:1]
    dy = yv[idx][None, :] - positions[:, 1:2]
    vals = np.exp(-(dx * dx + dy * dy) / (2.0 * cfg.sigma * cfg.sigma))
    out[:, covered] = vals[:, covered]
    return out


def compute_vap(
    trace: GazeTrace,
    object_pos: Sequence[float],
    window_end: float,
    cfg: AttentionConfig,
    object_id: object = None,
) -> VisualAttentionProfile:
    """Attention profile of one object over the trailing window."""
    values = compute_vap_matrix(
        trace, np.asarray([object_pos], dtype=float), window_end, cfg
    )[0]
    k_end = round(window_end / cfg.frame)
    return VisualAttentionProfile(
        object_id=object_id, window_end=k_end * cfg.frame, values=values
    )
