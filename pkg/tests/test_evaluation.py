import math

import numpy as np
import pytest

from gazeintent.attention import FRAME_75HZ, AttentionConfig
from gazeintent.evaluation import (
    AccuracyCurve,
    GridMismatchError,
    InsufficientTraceError,
    chance_level,
    compare_curves,
    comparison_to_json,
    curve_from_csv,
    curve_to_csv,
    duration_stats,
    low_chance_subset,
    predict_at_offset,
    replace_episodes,
    spearman_trend,
    sweep_accuracy,
    train_f1_baseline,
)
from gazeintent.predictor import Models, train_predictors
from gazeintent.svm import DegenerateDataError, SvmParams
from gazeintent.synthetic import GazeProfileParams, Scenario, generate_corpus

CFG = AttentionConfig()
PARAMS = GazeProfileParams()


@pytest.fixture(scope="module")
def small_corpus():
    return generate_corpus(PARAMS, n_episodes=40, seed=101)


@pytest.fixture(scope="module")
def small_models(small_corpus):
    return train_predictors(small_corpus, SvmParams(c=1.0), seed=0)


def test_low_chance_subset_rules(small_corpus):
    picks = low_chance_subset(small_corpus, "pick")
    assert all(len(ep.candidates) == 4 for ep in picks.episodes)
    assert all(ep.kind == "pick" for ep in picks.episodes)
    places = low_chance_subset(small_corpus, "place")
    assert all(4 <= len(ep.candidates) <= 6 for ep in places.episodes)
    # fabricate out-of-band candidate counts to check the boundaries
    ep = places.episodes[0]
    two = replace_episodes(small_corpus, [ep])
    two.episodes[0].candidates = frozenset(list(ep.candidates)[:2])
    two.episodes[0].true_target = sorted(two.episodes[0].candidates)[0]
    assert low_chance_subset(two, "place").episodes == []


def test_sweep_accuracy_shape_and_consistency(small_corpus, small_models):
    sub = low_chance_subset(small_corpus, "pick")
    curve = sweep_accuracy(small_models, sub, "pick", 0.5, CFG)
    n = int(0.5 / CFG.frame) + 1
    assert len(curve.t_prior) == n
    assert np.allclose(np.diff(curve.t_prior), CFG.frame)
    assert np.all((curve.accuracy >= 0) & (curve.accuracy <= 1))
    # sweep agrees with direct per-episode prediction at a mid offset
    k = 20
    correct = 0
    for ep in sub.episodes:
        pred = predict_at_offset(small_models, ep, curve.t_prior[k], CFG)
        correct += pred.chosen == ep.true_target
    assert curve.accuracy[k] == pytest.approx(correct / len(sub.episodes))
    assert curve.n_samples[k] == len(sub.episodes)


def test_sweep_skips_short_traces(small_corpus, small_models):
    sub = low_chance_subset(small_corpus, "pick")
    t_max = 9.0  # beyond the 12 s retained history minus the window
    curve = sweep_accuracy(small_models, sub, "pick", t_max, CFG)
    assert curve.skipped[-1] > 0
    assert curve.n_samples[-1] + curve.skipped[-1] == len(sub.episodes)
    with pytest.raises(InsufficientTraceError):
        ep = min(sub.episodes, key=lambda e: e.action_time)
        predict_at_offset(small_models, ep, 11.0, CFG)


def test_accuracy_decays_with_offset(small_corpus, small_models):
    sub = low_chance_subset(small_corpus, "pick")

    def accuracy_at(t_prior):
        hits = total = 0
        for ep in sub.episodes:
            try:
                pred = predict_at_offset(small_models, ep, t_prior, CFG)
            except InsufficientTraceError:
                continue
            hits += pred.chosen == ep.true_target
            total += 1
        return hits / total

    # deep into the previous episode the window carries little signal
    assert accuracy_at(0.0) > accuracy_at(3.0)


def test_f1_baseline_dimension(small_corpus):
    baseline = train_f1_baseline(small_corpus, SvmParams(c=1.0), seed=0)
    assert baseline.dim == 300
    empty = replace_episodes(
        small_corpus, [ep for ep in small_corpus.episodes if ep.kind == "place"]
    )
    with pytest.raises(DegenerateDataError):
        train_f1_baseline(empty, SvmParams(), seed=0)


def make_curve(values, kind="pick"):
    values = np.asarray(values, dtype=float)
    grid = np.arange(len(values)) * FRAME_75HZ
    n = np.full(len(values), 10, dtype=int)
    return AccuracyCurve(kind=kind, t_prior=grid, accuracy=values, n_samples=n,
                         skipped=np.zeros(len(values), dtype=int))


def test_compare_curve_with_itself():
    curve = make_curve(np.linspace(0.9, 0.3, 80))
    report = compare_curves(curve, curve)
    assert report.mean_difference == 0.0
    assert report.n_pos == report.n_neg == 0
    assert report.sign_test_p == 1.0


def test_compare_shifted_curve_sign_test():
    base = np.linspace(0.8, 0.3, 64)
    report = compare_curves(make_curve(base + 0.1), make_curve(base))
    assert report.mean_difference == pytest.approx(0.1)
    assert report.n_pos == 64
    # two-sided binomial tail with 64/64 wins: p = 2 * 0.5^64
    assert report.sign_test_p == pytest.approx(2.0 * 0.5**64, rel=1e-6)
    assert report.sign_test_p < 0.01


def test_compare_antisymmetric():
    a = make_curve(np.linspace(0.9, 0.4, 30))
    b = make_curve(np.linspace(0.7, 0.5, 30))
    ab, ba = compare_curves(a, b), compare_curves(b, a)
    assert ab.mean_difference == pytest.approx(-ba.mean_difference)
    assert ab.n_pos == ba.n_neg


def test_compare_grid_mismatch():
    with pytest.raises(GridMismatchError):
        compare_curves(make_curve(np.ones(10)), make_curve(np.ones(12)))


def test_chance_level():
    assert chance_level("pick", 4) == 0.25
    assert chance_level("place", 6) == pytest.approx(1 / 6)


def test_duration_stats_separated_constants(small_corpus):
    eps = [ep for ep in small_corpus.episodes[:6]]
    for ep, (kind, dur) in zip(
        eps, [("pick", 3.0)] * 3 + [("place", 5.0)] * 3
    ):
        ep.kind = kind
        ep.duration = dur
    stats_ = duration_stats(replace_episodes(small_corpus, eps))
    assert stats_.t_statistic < -100
    assert stats_.p_value < 1e-6
    assert stats_.pick.mean == 3.0
    assert stats_.place.mean == 5.0


def test_duration_stats_generator_direction(small_corpus):
    stats_ = duration_stats(small_corpus)
    assert stats_.t_statistic < 0
    assert stats_.pick.n == 20
    assert stats_.place.n == 20


def test_duration_stats_identical_groups_rarely_significant():
    rng = np.random.default_rng(0)
    significant = 0
    for _ in range(100):
        sample = rng.normal(4.0, 1.0, size=40)
        eps = []
        corpus = generate_corpus(PARAMS, n_episodes=4, seed=1)
        for i, d in enumerate(sample):
            ep = corpus.episodes[i % 4]
            clone = type(ep)(
                kind="pick" if i < 20 else "place",
                board=ep.board,
                candidates=ep.candidates,
                true_target=ep.true_target,
                trace=ep.trace,
                action_time=ep.action_time,
                scenario=ep.scenario,
                duration=float(d),
            )
            eps.append(clone)
        report = duration_stats(replace_episodes(corpus, eps))
        significant += report.p_value <= 0.05
    assert significant <= 10  # ~5% false positive rate expected


def test_duration_stats_requires_both_kinds(small_corpus):
    only_picks = replace_episodes(
        small_corpus, [ep for ep in small_corpus.episodes if ep.kind == "pick"]
    )
    with pytest.raises(DegenerateDataError):
        duration_stats(only_picks)


def test_spearman_trend_on_monotone_curve():
    rho = spearman_trend(make_curve(np.linspace(0.95, 0.3, 100)))
    assert rho == pytest.approx(1.0)


def test_curve_csv_roundtrip(tmp_path):
    curve = make_curve(np.linspace(0.9, 0.2, 40))
    path = tmp_path / "curve.csv"
    curve_to_csv(curve, path)
    header = path.read_text().splitlines()[0]
    assert header == "t_prior_s,accuracy,n"
    again = curve_from_csv(path, "pick")
    assert np.allclose(again.t_prior, curve.t_prior, atol=1e-6)
    assert np.allclose(again.accuracy, curve.accuracy, atol=1e-6)
    assert np.array_equal(again.n_samples, curve.n_samples)


def test_comparison_json(tmp_path):
    report = compare_curves(
        make_curve([0.5, 0.6, 0.7]), make_curve([0.4, 0.6, 0.5])
    )
    path = tmp_path / "cmp.json"
    text = comparison_to_json(report, path)
    assert path.exists()
    assert '"n_pos": 2' in text
    assert math.isclose(report.mean_difference, 0.1, abs_tol=1e-12)


def test_plots_render(tmp_path, small_corpus, small_models):
    from gazeintent.plots import plot_accuracy_curves, plot_simulation_report

    sub = low_chance_subset(small_corpus, "pick")
    curve = sweep_accuracy(small_models, sub, "pick", 0.3, CFG)
    out = tmp_path / "curve.svg"
    plot_accuracy_curves([("pick", curve)], out, chance=0.25, title="pick sweep")
    assert out.exists() and out.stat().st_size > 500
    assert b"<svg" in out.read_bytes()[:200]

    reports = {
        "follow": {"match_rate": 0.9, "corrective_moves": 2},
        "rebel": {"match_rate": 0.1, "corrective_moves": 30},
    }
    out2 = tmp_path / "sim.svg"
    plot_simulation_report(reports, out2)
    assert out2.exists()
