"""Operator command line: corpus generation, training, evaluation sweeps,
closed-loop simulation, serving, and replay.

Exit codes: 0 success, 2 configuration/usage error, 3 data error.
Report-producing commands write a matplotlib figure next to their
delimited output unless a different figure path is given.
"""
from __future__ import annotations

import argparse
import asyncio
import collections
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config, parse_mixture_flag
from .controller import Mode
from .evaluation import (
    compare_curves,
    comparison_to_json,
    curve_to_csv,
    duration_stats,
    low_chance_subset,
    sweep_accuracy,
    train_f1_baseline,
)
from .predictor import Models, build_training_set
from .session import (
    CorruptLogError,
    ModelLoadError,
    RefusedError,
    SessionConfig,
    VersionError,
    load_models,
    replay as replay_log,
    save_models,
)
from .simulate import run_closed_loop
from .svm import DegenerateDataError, SvmParams, cross_validate
from .synthetic import generate_corpus, read_corpus, write_corpus

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

DATA_ERRORS = (
    DegenerateDataError,
    ModelLoadError,
    CorruptLogError,
    VersionError,
    RefusedError,
    OSError,
    ValueError,
)


def _parse_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"bad address {text!r}, want HOST:PORT")
    return host, int(port)


def _session_config(cfg) -> SessionConfig:
    return SessionConfig(
        attention=cfg.attention,
        threshold=cfg.controller.threshold,
        decision_cap=cfg.controller.decision_cap,
        tip_speed=cfg.controller.tip_speed,
        gripper_latency=cfg.session.gripper_latency,
        trigger_radius=cfg.session.trigger_radius,
        px_per_mm=cfg.session.px_per_mm,
    )


def cmd_gen_corpus(args) -> int:
    cfg = load_config(args.config)
    mixture = parse_mixture_flag(args.mix) if args.mix else cfg.mixture
    corpus = generate_corpus(
        cfg.synthetic, n_episodes=args.n, seed=args.seed, mixture=mixture
    )
    write_corpus(corpus, args.out)
    histogram = collections.Counter(ep.scenario.value for ep in corpus.episodes)
    print(f"wrote {len(corpus.episodes)} episodes to {args.out} (seed={args.seed})")
    for name, count in sorted(histogram.items()):
        print(f"  {name:16s} {count:5d}  ({count / len(corpus.episodes):.1%})")
    stats = duration_stats(corpus)
    print(
        f"durations: pick {stats.pick.mean:.2f}s +- {stats.pick.sd:.2f}, "
        f"place {stats.place.mean:.2f}s +- {stats.place.sd:.2f} "
        f"(t={stats.t_statistic:.2f}, p={stats.p_value:.2e})"
    )
    return EXIT_OK


def _grid_search(x, y, base: SvmParams, seed: int) -> SvmParams:
    dim = x.shape[1]
    best, best_acc = base, -1.0
    for gamma_scale in (0.1, 1.0, 10.0):
        for c in (0.1, 1.0, 10.0):
            params = SvmParams(
                kernel=base.kernel,
                gamma=gamma_scale / dim if base.kernel == "rbf" else None,
                c=c,
                tol=base.tol,
                max_passes=base.max_passes,
                eps=base.eps,
            )
            acc = cross_validate(x, y, 5, params, seed).mean_accuracy
            if acc > best_acc:
                best, best_acc = params, acc
    return best


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    corpus = read_corpus(args.corpus)
    print(f"loaded {len(corpus.episodes)} episodes from {args.corpus}")
    x_pick, y_pick = build_training_set(corpus.episodes, "pick", cfg.attention)
    x_place, y_place = build_training_set(corpus.episodes, "place", cfg.attention)

    pick_params = place_params = cfg.svm
    if args.grid:
        pick_params = _grid_search(x_pick, y_pick, cfg.svm, args.seed)
        place_params = _grid_search(x_place, y_place, cfg.svm, args.seed)
        print(
            f"grid selected pick (C={pick_params.c}, gamma={pick_params.gamma}), "
            f"place (C={place_params.c}, gamma={place_params.gamma})"
        )

    cv_pick = cross_validate(x_pick, y_pick, 5, pick_params, args.seed)
    cv_place = cross_validate(x_place, y_place, 5, place_params, args.seed)
    print(f"pick  per-object 5-fold CV accuracy: {cv_pick.mean_accuracy:.4f}")
    print(f"place per-object 5-fold CV accuracy: {cv_place.mean_accuracy:.4f}")

    from .svm import train_calibrated

    models = Models(
        pick=train_calibrated(x_pick, y_pick, pick_params, args.seed),
        place=train_calibrated(x_place, y_place, place_params, args.seed + 1),
    )
    digest = save_models(models, args.out)
    report = {
        "pick": {"k": 5, "per_fold": cv_pick.per_fold_accuracy,
                 "mean": cv_pick.mean_accuracy},
        "place": {"k": 5, "per_fold": cv_place.per_fold_accuracy,
                  "mean": cv_place.mean_accuracy},
        "model_hash": digest,
        "corpus": str(args.corpus),
        "seed": args.seed,
    }
    out = Path(args.out)
    (out / "cv_report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"models written to {out} (hash {digest[:12]})")
    return EXIT_OK


def cmd_eval_sweep(args) -> int:
    cfg = load_config(args.config)
    corpus = read_corpus(args.corpus)
    models, _ = load_models(args.models)
    subset = low_chance_subset(corpus, args.kind)
    print(
        f"low-chance subset: {len(subset.episodes)} of "
        f"{sum(ep.kind == args.kind for ep in corpus.episodes)} "
        f"{args.kind} episodes"
    )
    curve = sweep_accuracy(
        models, subset, args.kind, args.tmax, cfg.attention,
        cfg.controller.threshold,
    )
    curve_to_csv(curve, args.out)
    print(f"curve written to {args.out} "
          f"(accuracy at t=0: {curve.accuracy[0]:.4f})")

    chances = [1.0 / len(ep.candidates) for ep in subset.episodes]
    chance = float(np.mean(chances)) if chances else None

    curves = [(args.kind, curve)]
    if args.baseline:
        if args.kind != "pick":
            raise ConfigError("--baseline only applies to pick sweeps")
        baseline_model = train_f1_baseline(corpus, cfg.svm, args.seed,
                                           cfg.attention)
        base_curve = sweep_accuracy(
            Models(pick=baseline_model, place=models.place), subset, "pick",
            args.tmax, cfg.attention, cfg.controller.threshold,
        )
        base_csv = Path(args.out).with_suffix(".baseline.csv")
        curve_to_csv(base_curve, base_csv)
        report = compare_curves(curve, base_curve)
        cmp_path = Path(args.out).with_suffix(".comparison.json")
        comparison_to_json(report, cmp_path)
        print(
            f"baseline comparison: mean diff {report.mean_difference:+.4f}, "
            f"sign test p={report.sign_test_p:.2e} -> {cmp_path}"
        )
        curves.append(("baseline (own profile only)", base_curve))

    from .plots import plot_accuracy_curves

    svg = args.svg or Path(args.out).with_suffix(".svg")
    plot_accuracy_curves(
        curves, svg, chance=chance,
        title=f"{args.kind} prediction accuracy vs anticipation offset",
    )
    print(f"figure written to {svg}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.boards == 0:
        print("no boards requested; nothing to simulate")
        return EXIT_OK
    models, _ = load_models(args.models)
    modes = list(Mode) if args.mode == "all" else [Mode(args.mode)]
    seeds = [args.seed + i for i in range(args.boards)]
    reports = {}
    for mode in modes:
        report = run_closed_loop(
            models, mode, seeds, cfg.synthetic, cfg.mixture, cfg.attention,
            threshold=cfg.controller.threshold, seed=args.seed,
            max_blocks=args.blocks,
        )
        reports[mode.value] = report.to_dict()
        print(
            f"{mode.value:8s} boards={report.boards} "
            f"match_rate={report.match_rate:.3f} "
            f"corrective={report.corrective_moves} "
            f"mean_completion={report.mean_completion_time:.1f}s"
        )
    if args.out:
        Path(args.out).write_text(json.dumps(reports, indent=2) + "\n")
        print(f"report written to {args.out}")
        from .plots import plot_simulation_report

        svg = args.svg or Path(args.out).with_suffix(".svg")
        plot_simulation_report(reports, svg)
        print(f"figure written to {svg}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import SessionServer, serve_forever

    cfg = load_config(args.config)
    models, digest = load_models(args.models)
    server = SessionServer(
        models, digest, _session_config(cfg), log_dir=args.log_dir
    )
    tcp = _parse_addr(args.addr) if args.addr else None
    ws = _parse_addr(args.ws_addr) if args.ws_addr else None
    if tcp is None and ws is None:
        raise ConfigError("need --addr and/or --ws-addr")

    def announce(bound):
        for label, addr in bound:
            # printed only after the bind; flushed so pipes see readiness
            print(f"listening ({label}) on {addr[0]}:{addr[1]}", flush=True)

    try:
        asyncio.run(serve_forever(server, tcp, ws, on_ready=announce))
    except KeyboardInterrupt:
        print("interrupted, shutting down")
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = load_config(args.config)
    models, digest = load_models(args.models)
    result = replay_log(args.log, models, digest, _session_config(cfg))
    print(f"session {result.session_id}")
    print("summary:")
    for key, value in sorted(result.summary.items()):
        print(f"  {key}: {value}")
    print(f"recorded telemetry hash: {result.recorded_hash}")
    print(f"replayed telemetry hash: {result.replayed_hash}")
    if not result.identical:
        print("REPLAY MISMATCH: recorded and replayed streams differ")
        return EXIT_DATA
    print("replay deterministic: streams identical")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazeintent",
        description=__doc__,
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", default=None,
                       help="TOML or JSON config file (defaults apply)")
        return p

    p = with_config(sub.add_parser(
        "gen-corpus", help="generate a labeled synthetic episode corpus",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter))
    p.add_argument("--n", type=int, default=912,
                   help="number of episodes to record")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True, help="corpus JSONL path")
    p.add_argument("--mix", default=None,
                   help="scenario weights, e.g. OneDominant=0.6,Alternating=0.4")
    p.set_defaults(func=cmd_gen_corpus)

    p = with_config(sub.add_parser(
        "train", help="train pick/place models with 5-fold CV",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter))
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output model directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", action="store_true",
                   help="small seeded (C, gamma) grid search")
    p.set_defaults(func=cmd_train)

    p = with_config(sub.add_parser(
        "eval-sweep", help="anticipation-window accuracy sweep",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter))
    p.add_argument("--corpus", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--kind", choices=("pick", "place"), required=True)
    p.add_argument("--tmax", type=float, default=4.0,
                   help="largest anticipation offset (s)")
    p.add_argument("--out", required=True, help="curve CSV path")
    p.add_argument("--svg", default=None,
                   help="figure path (default: alongside --out)")
    p.add_argument("--baseline", action="store_true",
                   help="also sweep an own-profile-only pick baseline")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_eval_sweep)

    p = with_config(sub.add_parser(
        "simulate", help="closed-loop synthetic user vs controller",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter))
    p.add_argument("--models", required=True)
    p.add_argument("--mode", choices=("follow", "rebel", "random", "all"),
                   default="all")
    p.add_argument("--boards", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--blocks", type=int, default=None,
                   help="max blocks per board (default: play to completion)")
    p.add_argument("--out", default=None, help="JSON report path")
    p.add_argument("--svg", default=None,
                   help="figure path (default: alongside --out)")
    p.set_defaults(func=cmd_simulate)

    p = with_config(sub.add_parser(
        "serve", help="run the live session service",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter))
    p.add_argument("--models", required=True)
    p.add_argument("--addr", default="127.0.0.1:8765",
                   help="TCP (length-prefixed JSON) listen address")
    p.add_argument("--ws-addr", default=None,
                   help="WebSocket listen address for the browser console")
    p.add_argument("--log-dir", default=None,
                   help="directory for replayable session logs")
    p.set_defaults(func=cmd_serve)

    p = with_config(sub.add_parser(
        "replay", help="re-drive a recorded session and verify determinism",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter))
    p.add_argument("--log", required=True)
    p.add_argument("--models", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
