"""Brute-force projected-gradient oracle for the SVM dual.

Maximizes W(a) = sum(a) - 0.5 a'Qa over the box [0, C]^n intersected
with the hyperplane y'a = 0, where Q = (y y') * K. The projection onto
the intersection is exact (bisection on the hyperplane multiplier), so
with enough iterations the iterate converges to the dual optimum. Kept
deliberately independent of the trained-model code path.
"""
import numpy as np


def project(v, y, c):
    """Exact projection of v onto {0 <= a <= C, y'a = 0}."""

    def hyper(lmb):
        return float(y @ np.clip(v - lmb * y, 0.0, c))

    lo, hi = -(np.abs(v).max() + c + 1.0), np.abs(v).max() + c + 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if hyper(mid) > 0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi) * y, 0.0, c)


def dual_objective(alpha, y, gram):
    q = (y[:, None] * y[None, :]) * gram
    return float(alpha.sum() - 0.5 * alpha @ q @ alpha)


def solve_dual(gram, y, c, iters=20000, tol=1e-13):
    """Projected gradient ascent (with momentum restarts) to high precision.

    y in {-1, +1}. Momentum only changes the iteration count, not the
    fixed points: every iterate is an exact projection, and the best
    objective seen is tracked so the returned alpha is feasible."""
    n = len(y)
    q = (y[:, None] * y[None, :]) * gram
    step = 1.0 / (np.linalg.eigvalsh(q).max() + 1e-9)
    alpha = project(np.zeros(n), y, c)
    look = alpha.copy()
    momentum = 1.0
    best_alpha = alpha.copy()
    best = dual_objective(alpha, y, gram)
    stale = 0
    for _ in range(iters):
        grad = 1.0 - q @ look
        alpha_new = project(look + step * grad, y, c)
        obj = dual_objective(alpha_new, y, gram)
        if obj > best + tol:
            best, best_alpha, stale = obj, alpha_new.copy(), 0
        else:
            stale += 1
        if obj < best - 1e-9:  # divergence guard: restart the momentum
            momentum = 1.0
            look = best_alpha.copy()
            alpha = best_alpha.copy()
            continue
        momentum_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum * momentum))
        look = alpha_new + ((momentum - 1.0) / momentum_new) * (alpha_new - alpha)
        alpha = alpha_new
        momentum = momentum_new
        if stale >= 60:
            break
    return best_alpha


def bias_from_kkt(alpha, y, gram, c):
    """b consistent with the KKT conditions of the solved dual."""
    g = gram @ (alpha * y)
    inside = (alpha > 1e-8 * c) & (alpha < c * (1 - 1e-8))
    if inside.any():
        return float(np.mean(y[inside] - g[inside]))
    # no free support vectors: b lies in an interval; take its midpoint
    lo, hi = -np.inf, np.inf
    for i in range(len(y)):
        bound = y[i] - g[i]
        at_zero = alpha[i] <= 1e-8 * c
        if (at_zero and y[i] > 0) or (not at_zero and y[i] < 0):
            lo = max(lo, bound)
        else:
            hi = min(hi, bound)
    if not np.isfinite(lo):
        return float(hi)
    if not np.isfinite(hi):
        return float(lo)
    return float(0.5 * (lo + hi))


def decision_values(alpha, y, b, kernel_fn, train_x, test_x):
    k = kernel_fn(test_x, train_x)
    return k @ (alpha * y) + b
