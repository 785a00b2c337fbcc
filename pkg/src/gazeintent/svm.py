"""Binary kernel SVM trained with sequential minimal optimization.

The solver is the simplified SMO variant: sweep the examples in a seeded
order, pick the second index of each working pair at random (seeded),
and stop after max_passes consecutive sweeps without an update. When the
random partner yields no progress the remaining indices are scanned in a
seeded order before the violation is given up, which is what lets the
KKT audit hold at tolerance after training. Probability outputs come
from Platt scaling fitted on a holdout.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

MODEL_VERSION = 1


class SvmError(Exception):
    pass


class DegenerateDataError(SvmError):
    """Training or calibration data contains a single class."""


class DimensionMismatchError(SvmError):
    """Feature dimensionality differs from what the model expects."""


class UncalibratedModelError(SvmError):
    """predict_proba called before Platt calibration."""


@dataclass(frozen=True)
class SvmParams:
    kernel: str = "rbf"  # "linear" | "rbf"
    gamma: Optional[float] = None  # None -> 1/dim, resolved at training
    c: float = 1.0
    tol: float = 1e-3
    max_passes: int = 10
    eps: float = 1e-5

    def __post_init__(self) -> None:
        if self.kernel not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel: {self.kernel!r}")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    alphas_signed: np.ndarray  # alpha_i * y_i per support vector
    bias: float
    params: SvmParams  # gamma resolved
    platt_a: Optional[float] = None
    platt_b: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]


def kernel_matrix(params: SvmParams, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """K[i, j] = k(a_i, b_j)."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    if params.kernel == "linear":
        return a @ b.T
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-params.gamma * sq)


def _resolve_gamma(params: SvmParams, dim: int) -> SvmParams:
    if params.kernel == "rbf" and params.gamma is None:
        return replace(params, gamma=1.0 / dim)
    return params


def _validate_xy(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if x.ndim != 2:
        raise DimensionMismatchError("feature matrix must be 2-D")
    if len(x) != len(y):
        raise DimensionMismatchError("feature/label counts differ")
    labels = set(np.unique(y).tolist())
    if not labels <= {0, 1}:
        raise ValueError(f"labels must be 0/1, got {sorted(labels)}")
    if labels != {0, 1}:
        raise DegenerateDataError("training data must contain both classes")
    return x, y.astype(int)


def train_smo(
    x: np.ndarray, y01: np.ndarray, params: SvmParams = SvmParams(), seed: int = 0
) -> SvmModel:
    """Train on features x (n, d) and 0/1 labels; deterministic under seed."""
    x, y01 = _validate_xy(x, y01)
    n, dim = x.shape
    params = _resolve_gamma(params, dim)
    y = 2.0 * y01 - 1.0
    c, tol, eps = params.c, params.tol, params.eps

    gram = kernel_matrix(params, x, x)
    diag = np.diag(gram).copy()
    alpha = np.zeros(n)
    b = 0.0
    g = np.zeros(n)  # g_i = sum_j alpha_j y_j K_ij (bias excluded)
    rng = np.random.default_rng(seed)

    def try_pair(i: int, j: int, e_i: float) -> bool:
        nonlocal b, g
        if j == i:
            return False
        e_j = g[j] + b - y[j]
        a_i, a_j = alpha[i], alpha[j]
        if y[i] != y[j]:
            lo, hi = max(0.0, a_j - a_i), min(c, c + a_j - a_i)
        else:
            lo, hi = max(0.0, a_i + a_j - c), min(c, a_i + a_j)
        if lo >= hi:
            return False
        eta = diag[i] + diag[j] - 2.0 * gram[i, j]
        if eta <= 0:
            return False
        a_j_new = a_j + y[j] * (e_i - e_j) / eta
        a_j_new = min(hi, max(lo, a_j_new))
        if abs(a_j_new - a_j) < eps:
            return False
        a_i_new = a_i + y[i] * y[j] * (a_j - a_j_new)
        # snap to the box to keep 0 <= alpha <= C exact
        if a_i_new < 1e-12:
            a_i_new = 0.0
        elif a_i_new > c - 1e-12:
            a_i_new = c
        d_i, d_j = a_i_new - a_i, a_j_new - a_j
        b1 = b - e_i - y[i] * d_i * gram[i, i] - y[j] * d_j * gram[i, j]
        b2 = b - e_j - y[i] * d_i * gram[i, j] - y[j] * d_j * gram[j, j]
        if 0.0 < a_i_new < c:
            b_new = b1
        elif 0.0 < a_j_new < c:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        alpha[i], alpha[j] = a_i_new, a_j_new
        g += d_i * y[i] * gram[i] + d_j * y[j] * gram[j]
        b = b_new
        return True

    passes = 0
    sweeps = 0
    max_sweeps = max(200, 50 * params.max_passes)
    while passes < params.max_passes and sweeps < max_sweeps:
        sweeps += 1
        changed = 0
        order = rng.permutation(n)
        for i in order:
            e_i = g[i] + b - y[i]
            r = y[i] * e_i
            if not ((r < -tol and alpha[i] < c) or (r > tol and alpha[i] > 0)):
                continue
            j = int(rng.integers(n - 1))
            if j >= i:
                j += 1
            if try_pair(i, j, e_i):
                changed += 1
                continue
            # random partner made no progress: scan the rest, largest
            # |E_i - E_j| first, so a violated pair is never missed
            errs = g + b - y
            fallback = np.argsort(-np.abs(e_i - errs))
            for j2 in fallback:
                if try_pair(i, int(j2), e_i):
                    changed += 1
                    break
        passes = passes + 1 if changed == 0 else 0

    sv = alpha > 0
    return SvmModel(
        support_vectors=x[sv].copy(),
        alphas_signed=(alpha * y)[sv].copy(),
        bias=float(b),
        params=params,
    )


def decision_values(model: SvmModel, x: np.ndarray) -> np.ndarray:
    """f(x) = sum_i alpha_i y_i K(sv_i, x) + b for each row of x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.dim:
        raise DimensionMismatchError(
            f"expected dim {model.dim}, got {x.shape[1]}"
        )
    if len(model.alphas_signed) == 0:
        return np.full(len(x), model.bias)
    k = kernel_matrix(model.params, x, model.support_vectors)
    return k @ model.alphas_signed + model.bias


def decision_value(model: SvmModel, x: np.ndarray) -> float:
    return float(decision_values(model, x)[0])


def dual_objective(model_or_alpha, y=None, gram=None) -> float:
    """W(a) = sum(a) - 0.5 a'(yy'*K)a, from raw arrays (training-side)."""
    alpha = np.asarray(model_or_alpha, dtype=float)
    q = (y[:, None] * y[None, :]) * gram
    return float(alpha.sum() - 0.5 * alpha @ q @ alpha)


def kkt_max_violation(
    model: SvmModel, x: np.ndarray, y01: np.ndarray
) -> float:
    """Largest complementarity violation of the trained model on (x, y).

    Per example: alpha=0 requires y f >= 1, alpha=C requires y f <= 1,
    0<alpha<C requires y f = 1; the return value is the worst slack, so
    <= tol means the audit passes. Examples the model dropped (alpha=0)
    are matched by position lookup against the support set.
    """
    x = np.asarray(x, dtype=float)
    y = 2.0 * np.asarray(y01, dtype=float) - 1.0
    f = decision_values(model, x)
    # recover per-example alpha from the support set
    alpha = np.zeros(len(x))
    if len(model.support_vectors):
        sv_index = {}
        for i, row in enumerate(model.support_vectors):
            sv_index.setdefault(row.tobytes(), []).append(i)
        used = {k: 0 for k in sv_index}
        for i, row in enumerate(x):
            key = row.tobytes()
            if key in sv_index and used[key] < len(sv_index[key]):
                j = sv_index[key][used[key]]
                alpha[i] = abs(model.alphas_signed[j])
                used[key] += 1
    c = model.params.c
    margins = y * f
    worst = 0.0
    for i in range(len(x)):
        if alpha[i] <= 1e-12:
            worst = max(worst, 1.0 - margins[i])
        elif alpha[i] >= c - 1e-12:
            worst = max(worst, margins[i] - 1.0)
        else:
            worst = max(worst, abs(margins[i] - 1.0))
    return float(worst)


def fit_platt(
    model: SvmModel, x_holdout: np.ndarray, y_holdout: np.ndarray
) -> SvmModel:
    """Platt scaling P(chosen=1 | f) = 1 / (1 + exp(A f + B)).

    Regularized maximum likelihood with the usual smoothed targets
    (Lin-Weng Newton iteration with backtracking); the sigmoid parameters
    are stored on a copy of the model.
    """
    y_holdout = np.asarray(y_holdout)
    if set(np.unique(y_holdout).tolist()) != {0, 1}:
        raise DegenerateDataError("calibration data must contain both classes")
    f = decision_values(model, np.asarray(x_holdout, dtype=float))
    n_pos = int((y_holdout == 1).sum())
    n_neg = len(y_holdout) - n_pos
    hi, lo = (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)
    t = np.where(y_holdout == 1, hi, lo)

    a, b = 0.0, np.log((n_neg + 1.0) / (n_pos + 1.0))
    min_step, sigma_reg = 1e-10, 1e-12

    def nll(a_, b_):
        z = a_ * f + b_
        # stable log(1 + exp(z)) split by sign
        pos = z >= 0
        out = np.empty_like(z)
        out[pos] = t[pos] * z[pos] + np.log1p(np.exp(-z[pos]))
        out[~pos] = (t[~pos] - 1.0) * z[~pos] + np.log1p(np.exp(z[~pos]))
        return float(out.sum())

    fval = nll(a, b)
    for _ in range(200):
        z = a * f + b
        p = np.where(z >= 0, np.exp(-z) / (1 + np.exp(-z)), 1 / (1 + np.exp(z)))
        d1 = p * (1 - p)
        grad_a = float(np.sum(f * (t - p)))
        grad_b = float(np.sum(t - p))
        if abs(grad_a) < 1e-10 and abs(grad_b) < 1e-10:
            break
        h11 = float(np.sum(f * f * d1)) + sigma_reg
        h22 = float(np.sum(d1)) + sigma_reg
        h12 = float(np.sum(f * d1))
        det = h11 * h22 - h12 * h12
        da = -(h22 * grad_a - h12 * grad_b) / det
        db = -(-h12 * grad_a + h11 * grad_b) / det
        # grad here is of the NLL's negative; walk downhill with backtracking
        step = 1.0
        g_dot_d = grad_a * da + grad_b * db
        while step >= min_step:
            a_new, b_new = a + step * da, b + step * db
            f_new = nll(a_new, b_new)
            if f_new < fval + 1e-4 * step * g_dot_d:
                a, b, fval = a_new, b_new, f_new
                break
            step /= 2.0
        else:
            break
    return replace(model, platt_a=float(a), platt_b=float(b))


_P_MAX = float(np.nextafter(1.0, 0.0))
_P_MIN = float(np.nextafter(0.0, 1.0))


def predict_proba(model: SvmModel, x: np.ndarray) -> np.ndarray:
    """Calibrated P(chosen=1) per row of x, always strictly inside (0, 1)."""
    if model.platt_a is None or model.platt_b is None:
        raise UncalibratedModelError("model has no Platt calibration")
    f = decision_values(model, x)
    z = model.platt_a * f + model.platt_b
    p = np.where(z >= 0, np.exp(-z) / (1 + np.exp(-z)), 1 / (1 + np.exp(z)))
    return np.clip(p, _P_MIN, _P_MAX)


def predict_proba_one(model: SvmModel, x: np.ndarray) -> float:
    return float(predict_proba(model, x)[0])


@dataclass(frozen=True)
class CvReport:
    k: int
    per_fold_accuracy: list[float]
    mean_accuracy: float


def stratified_folds(y01: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold id per example; sizes differ by at most one, labels balanced."""
    y01 = np.asarray(y01)
    rng = np.random.default_rng(seed)
    idx0 = rng.permutation(np.flatnonzero(y01 == 0))
    idx1 = rng.permutation(np.flatnonzero(y01 == 1))
    merged = np.concatenate([idx0, idx1])
    folds = np.empty(len(y01), dtype=int)
    folds[merged] = np.arange(len(y01)) % k
    return folds


def calibration_split(
    y01: np.ndarray, frac: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Stratified (train_idx, holdout_idx) with a `frac` holdout share."""
    y01 = np.asarray(y01)
    rng = np.random.default_rng(seed)
    hold = []
    for label in (0, 1):
        idx = rng.permutation(np.flatnonzero(y01 == label))
        n_hold = max(1, int(round(frac * len(idx))))
        hold.extend(idx[:n_hold].tolist())
    hold = np.array(sorted(hold))
    mask = np.ones(len(y01), dtype=bool)
    mask[hold] = False
    return np.flatnonzero(mask), hold


def train_calibrated(
    x: np.ndarray, y01: np.ndarray, params: SvmParams, seed: int
) -> SvmModel:
    """SMO on an 80% stratified split, Platt scaling on the held-out 20%."""
    x, y01 = _validate_xy(x, y01)
    train_idx, cal_idx = calibration_split(y01, 0.2, seed)
    model = train_smo(x[train_idx], y01[train_idx], params, seed)
    return fit_platt(model, x[cal_idx], y01[cal_idx])


def cross_validate(
    x: np.ndarray,
    y01: np.ndarray,
    k: int = 5,
    params: SvmParams = SvmParams(),
    seed: int = 0,
) -> CvReport:
    """Stratified k-fold accuracy of the calibrated classifier."""
    x, y01 = _validate_xy(x, y01)
    if len(x) < k:
        raise DegenerateDataError(f"need at least {k} examples for {k} folds")
    folds = stratified_folds(y01, k, seed)
    accs = []
    for fold in range(k):
        test = folds == fold
        model = train_calibrated(x[~test], y01[~test], params, seed + fold)
        pred = (predict_proba(model, x[test]) >= 0.5).astype(int)
        accs.append(float((pred == y01[test]).mean()))
    return CvReport(k=k, per_fold_accuracy=accs, mean_accuracy=float(np.mean(accs)))


def model_to_json(model: SvmModel) -> str:
    doc = {
        "version": MODEL_VERSION,
        "kernel": model.params.kernel,
        "gamma": model.params.gamma,
        "c": model.params.c,
        "platt": (
            [model.platt_a, model.platt_b] if model.platt_a is not None else None
        ),
        "bias": model.bias,
        "svs": model.support_vectors.tolist(),
        "alphas_signed": model.alphas_signed.tolist(),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def model_from_json(text: str) -> SvmModel:
    doc = json.loads(text)
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version: {doc.get('version')!r}")
    params = SvmParams(kernel=doc["kernel"], gamma=doc["gamma"], c=doc["c"])
    platt = doc.get("platt")
    svs = np.asarray(doc["svs"], dtype=float)
    if svs.size == 0:
        svs = svs.reshape(0, 0)
    return SvmModel(
        support_vectors=svs,
        alphas_signed=np.asarray(doc["alphas_signed"], dtype=float),
        bias=float(doc["bias"]),
        params=params,
        platt_a=None if platt is None else float(platt[0]),
        platt_b=None if platt is None else float(platt[1]),
    )


def model_hash(*models: SvmModel) -> str:
    h = hashlib.sha256()
    for m in models:
        h.update(model_to_json(m).encode())
    return h.hexdigest()
