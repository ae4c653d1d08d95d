"""Walk-forward evaluation, the two benchmark experiments and report I/O."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import (
    DataError,
    DriftSpec,
    Regime,
    Sample,
    drift_samples,
    gen_crescents,
    has_target_column,
    load_csv,
    load_sample_csv,
    make_samples,
    stack_samples,
    to_percent_changes,
    weekly_average,
)
from .ensemble import (
    DEFAULT_DECAY,
    DEFAULT_WINDOW,
    SCHEMES,
    Ensemble,
    GrowthConfig,
    ScoreRecord,
    grow_ensemble,
    ones_table,
    score_sample,
    static_train_update,
)
from .expert import MlpExpert, TrainConfig, init_random, predict_batch, train_arrays
from .metrics import direction_accuracy, nse_error
from .partition import Partition, from_medians, zero_line

FEATURE_NAMES = ("platinum", "palladium", "rhodium", "gold", "brent", "zar_usd")
GOLD, ZAR_USD = 3, 5


def _child_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


# -- reports -----------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    """Outcome of one walk-forward run: per-step ``(predicted, actual)`` pairs and summaries."""

    nse: float
    direction_accuracy: float
    per_step: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "per_step", tuple((float(p), float(a)) for p, a in self.per_step))
        if self.nse < 0 or not 0.0 <= self.direction_accuracy <= 1.0:
            raise ValueError("nse must be >= 0 and direction accuracy in [0, 1]")

    @property
    def horizon(self) -> int:
        return len(self.per_step)

    @property
    def root_nse(self) -> float:
        return math.sqrt(self.nse)

    @classmethod
    def from_predictions(cls, preds: Sequence[float], targets: Sequence[float]) -> "EvalReport":
        return cls(nse_error(preds, targets), direction_accuracy(preds, targets), tuple(zip(preds, targets)))


def emit_report(report: EvalReport, fmt: str = "csv") -> str:
    """Serialise a report as ``csv`` (steps then summary footer rows) or ``json``."""
    if fmt == "json":
        return json.dumps({
            "horizon": report.horizon,
            "nse": report.nse,
            "root_nse": report.root_nse,
            "direction_accuracy": report.direction_accuracy,
            "per_step": [list(p) for p in report.per_step],
        }, indent=1) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["step", "predicted", "actual"])
    for i, (p, a) in enumerate(report.per_step):
        w.writerow([i, repr(p), repr(a)])
    w.writerow(["nse", repr(report.nse), ""])
    w.writerow(["direction_accuracy", repr(report.direction_accuracy), ""])
    return out.getvalue()


def parse_report(text: str, fmt: str = "csv") -> EvalReport:
    if fmt == "json":
        d = json.loads(text)
        return EvalReport(d["nse"], d["direction_accuracy"], tuple(tuple(p) for p in d["per_step"]))
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["step", "predicted", "actual"]:
        raise DataError("not a report file", line=1)
    steps, summary = [], {}
    for row in rows[1:]:
        if row[0] in ("nse", "direction_accuracy"):
            summary[row[0]] = float(row[1])
        else:
            steps.append((float(row[1]), float(row[2])))
    return EvalReport(summary["nse"], summary["direction_accuracy"], tuple(steps))


# -- walk-forward --------------------------------------------------------------


def walk_forward(ensemble: Ensemble, scheme: str, warmup: Sequence[Sample],
                 test: Sequence[Sample]) -> EvalReport:
    """Predict each test step before revealing its target.

    Dynamic and static runs first observe the ``warmup`` samples; the static
    run then freezes its weights. ``ensemble`` itself is not modified.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    e = ensemble.with_scheme("unweighted" if scheme == "unweighted" else "dynamic")
    for s in warmup:
        e.observe(s.x, s.t)
    if scheme == "static":
        e.freeze_static()
    preds = []
    for s in test:
        preds.append(e.predict(s.x))
        e.observe(s.x, s.t)
    return EvalReport.from_predictions(preds, [s.t for s in test])


# -- forecasting experiment ----------------------------------------------------


def benchmark_drift_spec(seed: int = 0) -> DriftSpec:
    """Recurring two-regime series used by the forecasting benchmark.

    Regime A drives next-week platinum from the gold change, regime B from
    the exchange-rate change. Training (weeks 0-99) sees A then B, the
    warm-up and the first 15 test weeks continue B, and A returns for the
    last 5 weeks of a 20-week horizon.
    """
    a = (0.0, 0.0, 0.0, 100.0, 0.0, 0.0)
    b = (0.0, 0.0, 0.0, 0.0, 0.0, 100.0)
    return DriftSpec(
        n_weeks=130,
        regimes=(Regime(50, a, 0.01), Regime(75, b, 0.01), Regime(5, a, 0.01)),
        seed=seed,
        feature_names=FEATURE_NAMES,
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Forecasting comparison settings.

    Exactly one of ``drift`` (regenerated per repetition with a derived seed)
    or ``csv_path`` (prices, or a sample file with a ``target`` column) is
    the data source. Samples are split into ``n_train`` for growth,
    ``warmup`` (default: the window size) for warming up the weights and
    ``max(horizons)`` for scoring.
    """

    drift: Optional[DriftSpec] = field(default_factory=benchmark_drift_spec)
    csv_path: Optional[str] = None
    target_feature: int = 0
    horizons: tuple[int, ...] = (4, 10, 20)
    schemes: tuple[str, ...] = SCHEMES
    repetitions: int = 10
    n_train: int = 100
    warmup: Optional[int] = None
    growth: GrowthConfig = GrowthConfig(seed_epochs=2)
    train: TrainConfig = TrainConfig()
    partition_features: tuple[int, ...] = (GOLD, ZAR_USD)
    decay: float = DEFAULT_DECAY
    window: int = DEFAULT_WINDOW
    seed: int = 0

    def __post_init__(self):
        if (self.drift is None) == (self.csv_path is None):
            raise ValueError("give exactly one of drift or csv_path")
        if not self.horizons or min(self.horizons) < 1 or self.repetitions < 1:
            raise ValueError("horizons and repetitions must be >= 1")
        bad = set(self.schemes) - set(SCHEMES)
        if bad:
            raise ValueError(f"unknown schemes {sorted(bad)}")

    @property
    def n_warmup(self) -> int:
        return self.window if self.warmup is None else self.warmup

    def to_dict(self) -> dict:
        d = asdict(self)
        d["drift"] = self.drift.to_dict() if self.drift is not None else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if d.get("csv_path") is not None and "drift" not in d:
            d["drift"] = None
        if d.get("drift") is not None:
            d["drift"] = DriftSpec.from_dict(d["drift"])
        if "growth" in d:
            d["growth"] = GrowthConfig(**d["growth"])
        if "train" in d:
            d["train"] = TrainConfig(**d["train"])
        for key in ("horizons", "schemes", "partition_features"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def load_samples_file(path: str | Path, target_feature: int = 0) -> list[Sample]:
    """Samples from a price file (weekly averaged, then changed) or an exported sample file."""
    text = Path(path).read_text(encoding="utf-8")
    if has_target_column(text):
        return load_sample_csv(text)[0]
    return make_samples(to_percent_changes(weekly_average(load_csv(text))), target_feature)


@dataclass
class ForecastTable:
    """Mean scores per ``(scheme, horizon)`` over repetitions."""

    horizons: tuple[int, ...]
    nse: dict = field(default_factory=dict)
    direction: dict = field(default_factory=dict)
    ensemble_sizes: list = field(default_factory=list)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        hs = self.horizons
        w.writerow(["scheme", *(f"nse_{h}w" for h in hs), *(f"root_nse_{h}w" for h in hs),
                    *(f"direction_{h}w" for h in hs)])
        for scheme in dict.fromkeys(s for s, _ in self.nse):
            w.writerow([scheme,
                        *(repr(self.nse[scheme, h]) for h in hs),
                        *(repr(math.sqrt(self.nse[scheme, h])) for h in hs),
                        *(repr(self.direction[scheme, h]) for h in hs)])
        return out.getvalue()


def run_forecast_experiment(cfg: ExperimentConfig) -> ForecastTable:
    """Grow one ensemble per repetition and score every scheme on the same continuation."""
    horizon = max(cfg.horizons)
    need = cfg.n_train + cfg.n_warmup + horizon
    base = None if cfg.csv_path is None else load_samples_file(cfg.csv_path, cfg.target_feature)
    scores = {(s, h): [] for s in cfg.schemes for h in cfg.horizons}
    hits = {(s, h): [] for s in cfg.schemes for h in cfg.horizons}
    sizes = []
    for rep_seed in _child_seeds(cfg.seed, cfg.repetitions):
        data_seed, growth_seed = (int(v) for v in np.random.default_rng(rep_seed).integers(0, 2**63, size=2))
        samples = base if base is not None else drift_samples(replace(cfg.drift, seed=data_seed))
        if len(samples) < need:
            raise DataError(f"need {need} samples (train + warm-up + horizon), have {len(samples)}")
        train = samples[:cfg.n_train]
        warm = samples[cfg.n_train:cfg.n_train + cfg.n_warmup]
        test = samples[cfg.n_train + cfg.n_warmup:need]
        ens = grow_ensemble(train, zero_line(cfg.partition_features), replace(cfg.growth, seed=growth_seed),
                            cfg.train, decay=cfg.decay, window=cfg.window)
        sizes.append(ens.K)
        for scheme in cfg.schemes:
            steps = walk_forward(ens, scheme, warm, test).per_step
            preds, targets = zip(*steps)
            for h in cfg.horizons:
                scores[scheme, h].append(nse_error(preds[:h], targets[:h]))
                hits[scheme, h].append(direction_accuracy(preds[:h], targets[:h]))
    return ForecastTable(
        tuple(cfg.horizons),
        {k: float(np.mean(v)) for k, v in scores.items()},
        {k: float(np.mean(v)) for k, v in hits.items()},
        sizes,
    )


# -- classification ablation ---------------------------------------------------

WEIGHTING_MODES = ("No weights", "1 weight", "2 weights", "4 weights")
LABEL_TARGET = 0.1


@dataclass(frozen=True)
class ClassificationConfig:
    """Crescent-data weighting ablation.

    Each of ``n_experts`` networks is trained on the ``local_size`` training
    points nearest a randomly drawn training point, so experts are
    competent in different parts of the plane. Class labels become regression
    targets of ``-0.1`` / ``+0.1`` and decisions are the sign of the output.
    """

    n: int = 200
    noise: float = 0.1
    n_train: int = 150
    n_experts: int = 10
    local_size: int = 50
    hidden: int = 2
    train: TrainConfig = TrainConfig(epochs=20)
    split_feature: int = 0
    repetitions: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.local_size <= self.n_train < self.n:
            raise ValueError("need 0 < local_size <= n_train < n")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ClassificationConfig":
        d = dict(d)
        if "train" in d:
            d["train"] = TrainConfig(**d["train"])
        return cls(**d)


def train_local_experts(X: np.ndarray, T: np.ndarray, cfg: ClassificationConfig, seed: int) -> list[MlpExpert]:
    rng = np.random.default_rng(seed)
    experts = []
    for _ in range(cfg.n_experts):
        anchor = X[rng.integers(len(X))]
        # stable sort keeps ties deterministic
        idx = np.argsort(np.hypot(*(X - anchor).T), kind="stable")[:cfg.local_size]
        init_seed, train_seed = (int(v) for v in rng.integers(0, 2**63, size=2))
        expert = init_random(X.shape[1], cfg.hidden, init_seed)
        experts.append(train_arrays(expert, X[idx], T[idx], replace(cfg.train, seed=train_seed)))
    return experts


def regional_weights(outputs: np.ndarray, labels: np.ndarray, regions: np.ndarray, R: int) -> np.ndarray:
    """Apply the 1.2 / 0.4 rule once per training sample, in order."""
    w = ones_table(outputs.shape[1], R)
    for out, label, region in zip(outputs, labels, regions):
        w = static_train_update(w, ScoreRecord(int(region), tuple(score_sample(out, label, "classification"))))
    return w


def ablation_accuracies(experts: Sequence[MlpExpert], X_train, y_train, X_test, y_test,
                        split_feature: int = 0) -> dict[str, float]:
    """Test accuracy of the four weighting modes for one trained ensemble."""
    out_train = np.column_stack([predict_batch(e, X_train) for e in experts])
    out_test = np.column_stack([predict_batch(e, X_test) for e in experts])
    partitions = {
        "No weights": None,
        "1 weight": Partition(),
        "2 weights": from_medians(X_train, [split_feature]),
        "4 weights": from_medians(X_train, [0, 1]),
    }
    acc = {}
    for mode, p in partitions.items():
        if p is None:
            ens = Ensemble(experts, Partition(), "unweighted")
        else:
            w = regional_weights(out_train, y_train, p.regions_of(X_train), p.n_regions)
            ens = Ensemble(experts, p, "static", weights=w)
        W = ens.weights[:, ens.partition.regions_of(X_test)].T
        y = np.sum(out_test * W, axis=1) / np.sum(W, axis=1)
        acc[mode] = float(np.mean(np.sign(y) == np.where(y_test == 1, 1.0, -1.0)))
    return acc


def run_classification_ablation(cfg: ClassificationConfig) -> dict[str, float]:
    """Mean test accuracy of each weighting mode over ``cfg.repetitions`` fresh datasets."""
    totals = {m: [] for m in WEIGHTING_MODES}
    for rep_seed in _child_seeds(cfg.seed, cfg.repetitions):
        data_seed, model_seed = (int(v) for v in np.random.default_rng(rep_seed).integers(0, 2**63, size=2))
        pts = gen_crescents(cfg.n, cfg.noise, data_seed)
        X = np.array([p.x for p in pts])
        y = np.array([p.label for p in pts])
        T = np.where(y == 1, LABEL_TARGET, -LABEL_TARGET)
        tr, te = slice(0, cfg.n_train), slice(cfg.n_train, cfg.n)
        experts = train_local_experts(X[tr], T[tr], cfg, model_seed)
        acc = ablation_accuracies(experts, X[tr], y[tr], X[te], y[te], cfg.split_feature)
        for m in WEIGHTING_MODES:
            totals[m].append(acc[m])
    return {m: float(np.mean(v)) for m, v in totals.items()}


def classification_table_csv(result: dict[str, float]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["test", "accuracy_percent"])
    for mode in WEIGHTING_MODES:
        w.writerow([mode, repr(100.0 * result[mode])])
    return out.getvalue()
