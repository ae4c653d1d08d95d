"""Command-line entry point: ``dwmoe <subcommand> ...``.

Exit status is 0 on success, 1 on usage errors and 2 on data errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import data as D
from .ensemble import SCHEMES, Ensemble, GrowthConfig, grow_ensemble
from .evaluation import (
    ClassificationConfig,
    ExperimentConfig,
    benchmark_drift_spec,
    classification_table_csv,
    emit_report,
    load_samples_file,
    run_classification_ablation,
    run_forecast_experiment,
    walk_forward,
)
from .expert import TrainConfig
from .partition import zero_line

log = logging.getLogger("dwmoe")

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise D.DataError(f"{path}: invalid JSON ({exc})") from None


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def cmd_gen_data(args) -> None:
    if args.kind == "crescents":
        if args.spec:
            raise UsageError("--spec applies to --kind drift only")
        pts = D.gen_crescents(args.n or 200, 0.1 if args.noise is None else args.noise, args.seed)
        xs = np.array([p.x for p in pts])
        text = D.dump_csv(D.weekly_dates(len(pts)), xs, ("x0", "x1"), [p.label for p in pts])
    else:
        if args.n is not None or args.noise is not None:
            raise UsageError("--n/--noise apply to --kind crescents only")
        spec = D.DriftSpec.from_dict(_read_json(args.spec)) if args.spec else benchmark_drift_spec()
        spec = replace(spec, seed=args.seed)
        m, targets = D.gen_drifting_series(spec)
        text = D.dump_csv(D.weekly_dates(len(m)), m.changes, m.feature_names, targets)
    _write(args.out, text)


def _train_settings(cfg: dict, seed: int | None):
    growth = GrowthConfig(**cfg.get("growth", {}))
    if seed is not None:
        growth = replace(growth, seed=seed)
    elif "seed" in cfg:
        growth = replace(growth, seed=int(cfg["seed"]))
    return growth, TrainConfig(**cfg.get("train", {}))


def cmd_train(args) -> None:
    cfg = _read_json(args.config)
    samples = load_samples_file(args.data, int(cfg.get("target_feature", 0)))
    n_train = int(cfg.get("n_train", len(samples)))
    train = samples[:n_train]
    features = tuple(cfg.get("partition_features", (3, 5)))
    if train and any(f >= len(train[0].x) for f in features):
        raise D.DataError(f"partition features {features} out of range for {len(train[0].x)} inputs")
    growth, tcfg = _train_settings(cfg, args.seed)
    if len(train) < growth.subset_len:
        raise D.DataError(f"need at least {growth.subset_len} training samples, have {len(train)}")
    ens = grow_ensemble(train, zero_line(features), growth, tcfg,
                        decay=float(cfg.get("decay", 0.7)), window=int(cfg.get("window", 10)))
    log.info("grew ensemble of %d experts", ens.K)
    _write(args.out, json.dumps(ens.to_dict(), indent=1) + "\n")


def cmd_predict(args) -> None:
    ens = Ensemble.from_dict(_read_json(args.ensemble))
    samples = load_samples_file(args.data, args.target_feature)[args.start:]
    warmup = ens.window if args.warmup is None else args.warmup
    if len(samples) <= warmup:
        raise D.DataError(f"need more than {warmup} samples after --start, have {len(samples)}")
    if samples and len(samples[0].x) != ens.experts[0].F:
        raise D.DataError(f"ensemble expects {ens.experts[0].F} inputs, data has {len(samples[0].x)}")
    report = walk_forward(ens, args.scheme, samples[:warmup], samples[warmup:])
    fmt = "json" if args.out.endswith(".json") else "csv"
    _write(args.out, emit_report(report, fmt))


def cmd_bench_classify(args) -> None:
    cfg = ClassificationConfig.from_dict(_read_json(args.config)) if args.config else ClassificationConfig()
    cfg = replace(cfg, repetitions=args.reps, seed=args.seed)
    _write(args.out, classification_table_csv(run_classification_ablation(cfg)))


def cmd_bench_forecast(args) -> None:
    cfg = ExperimentConfig.from_dict(_read_json(args.config)) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    _write(args.out, run_forecast_experiment(cfg).to_csv())


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dwmoe", description="Dynamically weighted mixture-of-experts forecasting.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="write a synthetic dataset as CSV")
    g.add_argument("--kind", choices=("crescents", "drift"), required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--noise", type=float)
    g.add_argument("--spec", help="JSON drift spec (default: the forecasting benchmark series)")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="grow an ensemble and save it as JSON")
    t.add_argument("--data", required=True)
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, help="overrides the growth seed in --config")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("predict", help="walk-forward predictions with a saved ensemble")
    r.add_argument("--ensemble", required=True)
    r.add_argument("--data", required=True)
    r.add_argument("--scheme", choices=SCHEMES, required=True)
    r.add_argument("--out", required=True, help="report path; .json selects JSON, anything else CSV")
    r.add_argument("--start", type=int, default=0, help="skip this many leading samples")
    r.add_argument("--warmup", type=int, help="unscored warm-up steps (default: ensemble window)")
    r.add_argument("--target-feature", type=int, default=0)
    r.set_defaults(func=cmd_predict)

    c = sub.add_parser("bench-classify", help="weighting ablation on crescent data")
    c.add_argument("--reps", type=int, default=100)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)
    c.add_argument("--config", help="JSON ClassificationConfig overrides")
    c.set_defaults(func=cmd_bench_classify)

    f = sub.add_parser("bench-forecast", help="unweighted/static/dynamic comparison")
    f.add_argument("--config", help="JSON ExperimentConfig (default: the drift benchmark)")
    f.add_argument("--out", required=True)
    f.add_argument("--seed", type=int, help="overrides the config seed")
    f.set_defaults(func=cmd_bench_forecast)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"dwmoe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (D.DataError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"dwmoe: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
