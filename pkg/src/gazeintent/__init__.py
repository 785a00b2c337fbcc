"""Gaze-based intention prediction for an assisted block-copy task.

Converts a 75 Hz stream of 2D gaze points into per-object visual
attention profiles, predicts pick and place targets with kernel SVMs,
and drives an assistive effector under follow/rebel/random behavior
modes.
"""

__version__ = "0.1.0"
