import numpy as np
import pytest

from gazeintent.svm import (
    CvReport,
    DegenerateDataError,
    DimensionMismatchError,
    SvmModel,
    SvmParams,
    UncalibratedModelError,
    cross_validate,
    decision_value,
    decision_values,
    dual_objective,
    fit_platt,
    kernel_matrix,
    kkt_max_violation,
    model_from_json,
    model_hash,
    model_to_json,
    predict_proba,
    predict_proba_one,
    stratified_folds,
    train_calibrated,
    train_smo,
)

from qp_oracle import bias_from_kkt, dual_objective as oracle_objective, solve_dual

TIGHT = dict(tol=1e-7, max_passes=20)


def random_dataset(seed, separable=True):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 21))
    dim = int(rng.integers(2, 6))
    x = rng.uniform(-2, 2, size=(n, dim))
    if separable:
        w = rng.normal(size=dim)
        margin = x @ w
        y = (margin > np.median(margin)).astype(int)
    else:
        y = rng.integers(0, 2, size=n)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return x, y


def test_two_point_linear_symmetry():
    x = np.array([[-1.0, 0.0], [1.0, 0.0]])
    y = np.array([0, 1])
    model = train_smo(x, y, SvmParams(kernel="linear", c=1.0, **TIGHT), seed=0)
    assert decision_value(model, np.array([0.0, 0.0])) == pytest.approx(0.0, abs=1e-9)
    # analytic margin: the two points are support vectors at +-1
    assert decision_value(model, x[1]) == pytest.approx(1.0, abs=1e-6)
    assert decision_value(model, x[0]) == pytest.approx(-1.0, abs=1e-6)


def test_xor_rbf_classifies_training_points():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([0, 0, 1, 1])
    params = SvmParams(kernel="rbf", gamma=1.0, c=10.0, **TIGHT)
    model = train_smo(x, y, params, seed=0)
    pred = (decision_values(model, x) >= 0).astype(int)
    assert np.array_equal(pred, y)
    # dual objective matches the projected-gradient oracle on the 4-var dual
    gram = kernel_matrix(params, x, x)
    ys = 2.0 * y - 1.0
    alpha_star = solve_dual(gram, ys, params.c)
    w_star = oracle_objective(alpha_star, ys, gram)
    alpha_full = np.zeros(len(x))
    # recover dense alpha from the model for the objective
    for sv, a in zip(model.support_vectors, model.alphas_signed):
        i = next(k for k in range(len(x)) if np.array_equal(x[k], sv))
        alpha_full[i] = abs(a)
    w_smo = dual_objective(alpha_full, ys, gram)
    assert abs(w_smo - w_star) <= 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_oracle_equivalence_random_sets(seed):
    x, y = random_dataset(seed, separable=seed % 2 == 0)
    kernel = "linear" if seed % 2 else "rbf"
    params = SvmParams(kernel=kernel, gamma=None if kernel == "rbf" else None,
                       c=1.0, **TIGHT)
    model = train_smo(x, y, params, seed=seed)
    resolved = model.params
    gram = kernel_matrix(resolved, x, x)
    ys = 2.0 * y - 1.0
    alpha_star = solve_dual(gram, ys, resolved.c)
    w_star = oracle_objective(alpha_star, ys, gram)

    alpha_full = np.zeros(len(x))
    used = np.zeros(len(x), dtype=bool)
    for sv, a in zip(model.support_vectors, model.alphas_signed):
        i = next(
            k for k in range(len(x)) if not used[k] and np.array_equal(x[k], sv)
        )
        alpha_full[i] = abs(a)
        used[i] = True
    w_smo = dual_objective(alpha_full, ys, gram)
    assert abs(w_smo - w_star) <= 1e-4

    rng = np.random.default_rng(1000 + seed)
    tests = rng.uniform(-2, 2, size=(100, x.shape[1]))
    b_star = bias_from_kkt(alpha_star, ys, gram, resolved.c)
    k_test = kernel_matrix(resolved, tests, x)
    f_oracle = k_test @ (alpha_star * ys) + b_star
    f_smo = decision_values(model, tests)
    assert np.array_equal(f_smo >= 0, f_oracle >= 0)


def test_kkt_audit_and_dual_feasibility():
    for seed in range(6):
        x, y = random_dataset(seed * 7 + 1, separable=seed % 2 == 0)
        params = SvmParams(c=1.0)
        model = train_smo(x, y, params, seed=seed)
        assert kkt_max_violation(model, x, y) <= params.tol
        alphas = np.abs(model.alphas_signed)
        assert np.all(alphas >= 0)
        assert np.all(alphas <= params.c)
        drift = abs(model.alphas_signed.sum())
        assert drift <= 1e-8 * max(alphas.sum(), 1.0)


def test_training_deterministic_under_seed():
    x, y = random_dataset(3)
    a = train_smo(x, y, seed=11)
    b = train_smo(x, y, seed=11)
    assert np.array_equal(a.support_vectors, b.support_vectors)
    assert np.array_equal(a.alphas_signed, b.alphas_signed)
    assert a.bias == b.bias


def test_single_class_rejected():
    x = np.zeros((5, 2))
    with pytest.raises(DegenerateDataError):
        train_smo(x, np.ones(5, dtype=int))


def test_dimension_mismatch_rejected():
    x, y = random_dataset(1)
    model = train_smo(x, y)
    with pytest.raises(DimensionMismatchError):
        decision_values(model, np.zeros((3, x.shape[1] + 1)))


def test_linear_decision_is_affine():
    x, y = random_dataset(5)
    model = train_smo(x, y, SvmParams(kernel="linear"), seed=0)
    p0 = np.zeros(x.shape[1])
    p1 = np.ones(x.shape[1])
    p_half = 0.5 * p1
    f0, f1, fh = (decision_value(model, p) for p in (p0, p1, p_half))
    assert fh == pytest.approx(0.5 * (f0 + f1), abs=1e-9)


def test_rbf_kernel_matrix_is_psd():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(10, 4))
    gram = kernel_matrix(SvmParams(kernel="rbf", gamma=0.7), pts, pts)
    assert np.allclose(gram, gram.T)
    eigvals = np.linalg.eigvalsh(gram)
    assert eigvals.min() >= -1e-9


def test_platt_sigmoid_midpoint_and_orientation():
    x, y = random_dataset(4)
    model = train_smo(x, y, seed=0)
    # hand-set coefficients: f=0 with (A=-1, B=0) must give exactly 0.5
    manual = SvmModel(
        support_vectors=model.support_vectors,
        alphas_signed=model.alphas_signed,
        bias=model.bias,
        params=model.params,
        platt_a=-1.0,
        platt_b=0.0,
    )
    z = manual.platt_a * 0.0 + manual.platt_b
    assert 1.0 / (1.0 + np.exp(z)) == 0.5

    calibrated = fit_platt(model, x, y)
    assert calibrated.platt_a < 0  # P rises with the decision value

    f = decision_values(calibrated, x)
    p = predict_proba(calibrated, x)
    order = np.argsort(f)
    assert np.all(np.diff(p[order]) >= -1e-15)


def test_platt_requires_both_classes():
    x, y = random_dataset(4)
    model = train_smo(x, y)
    with pytest.raises(DegenerateDataError):
        fit_platt(model, x[:3], np.ones(3, dtype=int))


def test_predict_proba_bounds_and_extremes():
    x, y = random_dataset(4)
    model = train_smo(x, y, seed=0)
    with pytest.raises(UncalibratedModelError):
        predict_proba(model, x)
    manual = SvmModel(
        support_vectors=np.zeros((0, 1)),
        alphas_signed=np.zeros(0),
        bias=50.0,
        params=SvmParams(kernel="linear"),
        platt_a=-1.0,
        platt_b=0.0,
    )
    p = predict_proba_one(manual, np.zeros(1))
    assert p >= 1 - 1e-9
    assert p < 1.0
    low = SvmModel(**{**manual.__dict__, "bias": -50.0})
    q = predict_proba_one(low, np.zeros(1))
    assert 0.0 < q <= 1e-9


def test_stratified_folds_partition_and_balance():
    y = np.array([0] * 60 + [1] * 40)
    folds = stratified_folds(y, 5, seed=1)
    sizes = [int((folds == k).sum()) for k in range(5)]
    assert sizes == [20] * 5
    for k in range(5):
        pos = int(((folds == k) & (y == 1)).sum())
        assert pos == 8
    again = stratified_folds(y, 5, seed=1)
    assert np.array_equal(folds, again)
    assert not np.array_equal(folds, stratified_folds(y, 5, seed=2))


def test_cross_validate_separable_is_perfect():
    rng = np.random.default_rng(0)
    x0 = rng.normal(loc=-3, size=(50, 2))
    x1 = rng.normal(loc=3, size=(50, 2))
    x = np.vstack([x0, x1])
    y = np.array([0] * 50 + [1] * 50)
    report = cross_validate(x, y, k=5, params=SvmParams(c=1.0), seed=0)
    assert isinstance(report, CvReport)
    assert len(report.per_fold_accuracy) == 5
    assert report.mean_accuracy == 1.0


def test_cross_validate_needs_enough_data():
    with pytest.raises(DegenerateDataError):
        cross_validate(np.zeros((3, 2)), np.array([0, 1, 0]), k=5)


def test_model_json_roundtrip_preserves_decisions():
    x, y = random_dataset(8)
    model = fit_platt(train_smo(x, y, seed=0), x, y)
    text = model_to_json(model)
    loaded = model_from_json(text)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-2, 2, size=(50, x.shape[1]))
    assert np.all(
        np.abs(decision_values(model, pts) - decision_values(loaded, pts)) <= 1e-12
    )
    assert model_to_json(loaded) == text
    assert model_hash(model) == model_hash(loaded)


def test_model_json_rejects_bad_version():
    x, y = random_dataset(8)
    text = model_to_json(train_smo(x, y)).replace('"version":1', '"version":9')
    with pytest.raises(ValueError):
        model_from_json(text)


def test_train_calibrated_end_to_end():
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(-2, 1, (40, 3)), rng.normal(2, 1, (40, 3))])
    y = np.array([0] * 40 + [1] * 40)
    model = train_calibrated(x, y, SvmParams(), seed=0)
    p = predict_proba(model, x)
    assert ((p >= 0.5).astype(int) == y).mean() >= 0.95
