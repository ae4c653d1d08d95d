"""Region-weighted ensemble of MLP experts with static and decayed online voting weights."""

from __future__ import annotations

import copy as _copy
import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .data import Sample, stack_samples
from .expert import MlpExpert, TrainConfig, init_random, predict_batch, train_arrays
from .metrics import ZERO_PRED_TOL, ZERO_TARGET_TOL, nse_error
from .partition import Partition, region_of

REWARD = 1.2
PENALTY = 0.4

SCHEMES = ("unweighted", "static", "dynamic")
DEFAULT_WINDOW = 10
DEFAULT_DECAY = 0.7


@dataclass(frozen=True)
class ScoreRecord:
    region: int
    multipliers: tuple[float, ...]


class ScoreHistory:
    """The last ``window`` score records, newest first."""

    def __init__(self, window: int = DEFAULT_WINDOW, records: Iterable[ScoreRecord] = ()):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self._buf: deque[ScoreRecord] = deque(maxlen=window)
        # records arrive newest first; appendleft from the oldest keeps that order
        for rec in reversed(list(records)[:window]):
            self._buf.appendleft(rec)

    def push(self, record: ScoreRecord) -> None:
        self._buf.appendleft(record)

    def __iter__(self):
        return iter(self._buf)

    def __len__(self):
        return len(self._buf)

    def __getitem__(self, age: int) -> ScoreRecord:
        return self._buf[age]

    def __eq__(self, other):
        return isinstance(other, ScoreHistory) and self.window == other.window and list(self) == list(other)


def ones_table(K: int, R: int) -> np.ndarray:
    return np.ones((K, R))


def score_sample(outputs: Sequence[float], target: float, mode: str = "regression") -> np.ndarray:
    """Per-expert multiplier: 1.2 for a correct call, 0.4 otherwise.

    In classification mode ``target`` is a class label (0/1 or -1/+1) and an
    output is correct when its sign matches the label's. In regression mode
    the sign of the output must match the sign of the target; a target
    within 1e-6 of zero is matched only by an output within 0.01 of zero.
    """
    out = np.asarray(outputs, dtype=float)
    if not np.all(np.isfinite(out)):
        raise ValueError("outputs must be finite")
    if mode == "classification":
        correct = np.sign(out) == (1.0 if target > 0 else -1.0)
    elif mode == "regression":
        if abs(target) <= ZERO_TARGET_TOL:
            correct = np.abs(out) <= ZERO_PRED_TOL
        else:
            correct = np.sign(out) == np.sign(target)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return np.where(correct, REWARD, PENALTY)


def static_train_update(w: np.ndarray, record: ScoreRecord) -> np.ndarray:
    """Multiply the record's region column by its multipliers; returns a new table."""
    w = np.array(w, dtype=float, copy=True)
    m = np.asarray(record.multipliers, dtype=float)
    if m.shape != (w.shape[0],) or not 0 <= record.region < w.shape[1]:
        raise ValueError("record does not match weight table dimensions")
    w[:, record.region] *= m
    return w


def dynamic_recompute(h: Iterable[ScoreRecord], decay: float, K: int, R: int) -> np.ndarray:
    """Weights from a newest-first history.

    ``w[k, i]`` is the product over records in region ``i`` of
    ``multiplier[k] ** (decay ** age)``, computed as a decayed sum of logs.
    Regions without records get exactly 1.
    """
    if not 0.0 < decay < 1.0:
        raise ValueError("decay must lie in (0, 1)")
    logw = np.zeros((K, R))
    for age, rec in enumerate(h):
        logw[:, rec.region] += decay ** age * np.log(np.asarray(rec.multipliers, dtype=float))
    return np.exp(logw)


@dataclass(frozen=True)
class GrowthConfig:
    seed_epochs: int = 10
    candidate_epochs: int = 20
    subset_len: int = 20
    max_iters: int = 50
    patience: int = 25
    seed: int = 0
    hidden: int = 2

    def __post_init__(self):
        for name in ("seed_epochs", "candidate_epochs", "subset_len", "patience", "hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


class Ensemble:
    """Experts plus a ``K x R`` table of voting weights.

    ``observe`` and ``freeze_static`` mutate in place (single writer);
    ``predict`` is read-only.
    """

    def __init__(self, experts: Sequence[MlpExpert], partition: Partition = Partition(),
                 scheme: str = "unweighted", weights: Optional[np.ndarray] = None,
                 decay: float = DEFAULT_DECAY, window: int = DEFAULT_WINDOW,
                 history: Iterable[ScoreRecord] = ()):
        if not experts:
            raise ValueError("an ensemble needs at least one expert")
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if not 0.0 < decay < 1.0:
            raise ValueError("decay must lie in (0, 1)")
        self.experts = tuple(experts)
        self.partition = partition
        self.decay = float(decay)
        self.history = ScoreHistory(window, history)
        K, R = len(self.experts), partition.n_regions
        w = ones_table(K, R) if weights is None else np.array(weights, dtype=float, copy=True)
        if w.shape != (K, R) or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError(f"weights must be a positive finite {K}x{R} table")
        if scheme == "unweighted" and not np.all(w == 1.0):
            raise ValueError("an unweighted ensemble must have all-ones weights")
        self.weights = w
        self.scheme = scheme

    @property
    def K(self) -> int:
        return len(self.experts)

    @property
    def R(self) -> int:
        return self.partition.n_regions

    @property
    def window(self) -> int:
        return self.history.window

    def copy(self) -> "Ensemble":
        return _copy.deepcopy(self)

    def with_scheme(self, scheme: str) -> "Ensemble":
        """Fresh copy for evaluation under ``scheme``: all-ones weights, empty history."""
        return Ensemble(self.experts, self.partition, scheme, decay=self.decay, window=self.window)

    def outputs(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([predict_batch(e, x[None, :])[0] for e in self.experts])

    def outputs_batch(self, X: np.ndarray) -> np.ndarray:
        """``(N, K)`` matrix of expert outputs."""
        return np.column_stack([predict_batch(e, X) for e in self.experts])

    def combine_outputs(self, outputs: np.ndarray, region: int) -> float:
        col = self.weights[:, region]
        return float(np.dot(outputs, col) / np.sum(col))

    def predict(self, x) -> float:
        """Weighted average of expert outputs with the weights of ``x``'s region."""
        return self.combine_outputs(self.outputs(x), region_of(self.partition, x))

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        W = self.weights[:, self.partition.regions_of(X)].T  # (N, K)
        return np.sum(self.outputs_batch(X) * W, axis=1) / np.sum(W, axis=1)

    def observe(self, x, t: float) -> "Ensemble":
        """Reveal the target for ``x``. Only the dynamic scheme reacts."""
        if not math.isfinite(t):
            raise ValueError("target must be finite")
        if self.scheme != "dynamic":
            return self
        rec = ScoreRecord(region_of(self.partition, x), tuple(score_sample(self.outputs(x), t).tolist()))
        self.history.push(rec)
        self.weights = dynamic_recompute(self.history, self.decay, self.K, self.R)
        return self

    def freeze_static(self) -> "Ensemble":
        """Fix the current dynamic weights; later observations no longer move them."""
        if len(self.history) == 0:
            raise ValueError("cannot freeze without warm-up")
        self.scheme = "static"
        return self

    def to_dict(self) -> dict:
        return {
            "experts": [e.to_dict() for e in self.experts],
            "partition": self.partition.to_dict(),
            "scheme": self.scheme,
            "lambda": self.decay,
            "window": self.window,
            "weights": self.weights.ravel().tolist(),
            "history": [{"region": r.region, "multipliers": list(r.multipliers)} for r in self.history],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Ensemble":
        experts = [MlpExpert.from_dict(e) for e in d["experts"]]
        partition = Partition.from_dict(d["partition"])
        weights = np.array(d["weights"], dtype=float).reshape(len(experts), partition.n_regions)
        history = [ScoreRecord(int(r["region"]), tuple(float(m) for m in r["multipliers"]))
                   for r in d.get("history", [])]
        return cls(experts, partition, d["scheme"], weights, d["lambda"], d["window"], history)


def combine(e: Ensemble, x) -> float:
    return e.predict(x)


def step_online(e: Ensemble, x) -> float:
    return e.predict(x)


def observe(e: Ensemble, x, t: float) -> Ensemble:
    return e.observe(x, t)


def freeze_static(e: Ensemble) -> Ensemble:
    return e.freeze_static()


def grow_ensemble(train: Sequence[Sample], partition: Partition, gcfg: GrowthConfig,
                  tcfg: TrainConfig = TrainConfig(), trace: Optional[list] = None,
                  decay: float = DEFAULT_DECAY, window: int = DEFAULT_WINDOW) -> Ensemble:
    """Build an ensemble by greedy selection of specialised experts.

    A seed expert is trained on the whole training set. Each iteration then
    trains a fresh expert on a random contiguous stretch of ``subset_len``
    samples and keeps it only if the unweighted ensemble's training error
    (mean squared relative error) strictly drops. Growth stops after
    ``max_iters`` iterations or ``patience`` consecutive rejections.

    The training error after the seed and after every acceptance is appended
    to ``trace`` when given. ``tcfg`` supplies the proposal width and
    acceptance rule; epochs and seeds come from ``gcfg``.
    """
    if len(train) < gcfg.subset_len:
        raise ValueError("training set shorter than subset_len")
    X, T = stack_samples(train)
    F = X.shape[1]
    rng = np.random.default_rng(gcfg.seed)

    def fresh(epochs, Xs, Ts):
        init_seed, train_seed = (int(s) for s in rng.integers(0, 2**63, size=2))
        expert = init_random(F, gcfg.hidden, init_seed)
        return train_arrays(expert, Xs, Ts, replace(tcfg, epochs=epochs, seed=train_seed))

    experts = [fresh(gcfg.seed_epochs, X, T)]
    total = predict_batch(experts[0], X)
    err = nse_error(total, T)
    if trace is not None:
        trace.append(err)
    rejections = 0
    for _ in range(gcfg.max_iters):
        if rejections >= gcfg.patience:
            break
        start = int(rng.integers(0, len(T) - gcfg.subset_len + 1))
        sl = slice(start, start + gcfg.subset_len)
        cand = fresh(gcfg.candidate_epochs, X[sl], T[sl])
        pred = predict_batch(cand, X)
        new_err = nse_error((total + pred) / (len(experts) + 1), T)
        if new_err < err:
            experts.append(cand)
            total = total + pred
            err = new_err
            rejections = 0
            if trace is not None:
                trace.append(err)
        else:
            rejections += 1
    return Ensemble(experts, partition, "unweighted", decay=decay, window=window)
