"""Single-hidden-layer MLP expert trained by random-walk weight perturbation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import Sample, stack_samples

OUTPUT_BOUND = 0.2
# largest double strictly below OUTPUT_BOUND; tanh saturates to 1.0 for big inputs
_OUTPUT_CAP = math.nextafter(OUTPUT_BOUND, 0.0)


@dataclass(frozen=True)
class MlpExpert:
    """``F -> H -> 1`` network.

    ``w_ih`` is ``(F + 1, H)`` with the bias in the last row; ``w_ho`` is
    ``(H + 1,)`` with the bias last. Hidden units use ``2*sigmoid(a) - 1``
    (range ``(-1, 1)``), the output ``0.4*sigmoid(b) - 0.2``.
    """

    w_ih: np.ndarray
    w_ho: np.ndarray

    def __post_init__(self):
        w_ih = np.array(self.w_ih, dtype=float, copy=True)
        w_ho = np.array(self.w_ho, dtype=float, copy=True)
        if w_ih.ndim != 2 or w_ih.shape[0] < 2 or w_ho.shape != (w_ih.shape[1] + 1,):
            raise ValueError("inconsistent weight shapes")
        if not (np.all(np.isfinite(w_ih)) and np.all(np.isfinite(w_ho))):
            raise ValueError("weights must be finite")
        w_ih.flags.writeable = False
        w_ho.flags.writeable = False
        object.__setattr__(self, "w_ih", w_ih)
        object.__setattr__(self, "w_ho", w_ho)

    @property
    def F(self) -> int:
        return self.w_ih.shape[0] - 1

    @property
    def H(self) -> int:
        return self.w_ih.shape[1]

    @property
    def n_weights(self) -> int:
        return self.w_ih.size + self.w_ho.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.w_ih.ravel(), self.w_ho])

    @classmethod
    def from_flat(cls, theta: np.ndarray, F: int, H: int) -> "MlpExpert":
        k = (F + 1) * H
        return cls(np.reshape(theta[:k], (F + 1, H)), theta[k:])

    def to_dict(self) -> dict:
        return {"F": self.F, "H": self.H, "w_ih": self.w_ih.ravel().tolist(), "w_ho": self.w_ho.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MlpExpert":
        F, H = int(d["F"]), int(d["H"])
        w_ih = np.array(d["w_ih"], dtype=float)
        if w_ih.size != (F + 1) * H or len(d["w_ho"]) != H + 1:
            raise ValueError("serialized weights do not match F and H")
        return cls(w_ih.reshape(F + 1, H), np.array(d["w_ho"], dtype=float))

    def __call__(self, x) -> float:
        return forward(self, x)

    def __eq__(self, other):
        if not isinstance(other, MlpExpert):
            return NotImplemented
        return np.array_equal(self.w_ih, other.w_ih) and np.array_equal(self.w_ho, other.w_ho)

    __hash__ = None


@dataclass(frozen=True)
class TrainConfig:
    """Random-walk training settings.

    One epoch is ``len(samples)`` proposals. With ``temperature`` unset a
    proposal is kept only if it strictly lowers the training MSE; otherwise a
    Metropolis rule ``exp(-delta / temperature)`` is used and the best state
    visited is returned.
    """

    epochs: int = 20
    proposal_sd: float = 0.05
    seed: int = 0
    temperature: Optional[float] = None

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.proposal_sd > 0:
            raise ValueError("proposal_sd must be > 0")
        if self.temperature is not None and not self.temperature > 0:
            raise ValueError("temperature must be > 0")


def init_random(F: int = 6, H: int = 2, seed: int = 0) -> MlpExpert:
    """Weights i.i.d. uniform on ``[-0.5, 0.5]`` from a PCG64 stream."""
    if F < 1 or H < 1:
        raise ValueError("F and H must be >= 1")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(-0.5, 0.5, size=(F + 1) * H + H + 1)
    return MlpExpert.from_flat(theta, F, H)


def _forward_flat(theta: np.ndarray, X: np.ndarray, F: int, H: int) -> np.ndarray:
    k = (F + 1) * H
    w_ih = theta[:k].reshape(F + 1, H)
    w_ho = theta[k:]
    # 2*sigmoid(a) - 1 == tanh(a/2); 0.4*sigmoid(b) - 0.2 == 0.2*tanh(b/2)
    hidden = np.tanh(0.5 * (X @ w_ih[:F] + w_ih[F]))
    out = OUTPUT_BOUND * np.tanh(0.5 * (hidden @ w_ho[:H] + w_ho[H]))
    return np.clip(out, -_OUTPUT_CAP, _OUTPUT_CAP)


def predict_batch(e: MlpExpert, X: np.ndarray) -> np.ndarray:
    """Outputs for the rows of ``X`` (shape ``(N, F)``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != e.F:
        raise ValueError(f"expected {e.F} inputs, got {X.shape[1]}")
    return _forward_flat(e.flat(), X, e.F, e.H)


def forward(e: MlpExpert, x) -> float:
    """Output for one input vector, strictly inside ``(-0.2, 0.2)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (e.F,):
        raise ValueError(f"expected {e.F} inputs, got shape {x.shape}")
    return float(predict_batch(e, x[None, :])[0])


def mse(e: MlpExpert, samples: Sequence[Sample]) -> float:
    if not samples:
        raise ValueError("mse needs at least one sample")
    X, T = stack_samples(samples)
    return float(np.mean((predict_batch(e, X) - T) ** 2))


def train_mcmc(e: MlpExpert, samples: Sequence[Sample], cfg: TrainConfig) -> MlpExpert:
    """Random-walk search over all weights jointly to reduce training MSE.

    Every proposal adds ``N(0, proposal_sd^2)`` noise to each weight. The
    returned expert never has a higher training MSE than ``e``.
    """
    if not samples:
        raise ValueError("train_mcmc needs at least one sample")
    X, T = stack_samples(samples)
    return train_arrays(e, X, T, cfg)


def train_arrays(e: MlpExpert, X: np.ndarray, T: np.ndarray, cfg: TrainConfig) -> MlpExpert:
    """:func:`train_mcmc` on pre-stacked arrays."""
    n_prop = cfg.epochs * len(T)
    if n_prop == 0:
        return e
    F, H = e.F, e.H
    rng = np.random.default_rng(cfg.seed)
    theta = e.flat()
    cur = float(np.mean((_forward_flat(theta, X, F, H) - T) ** 2))
    best_theta, best = theta, cur
    for _ in range(n_prop):
        prop = theta + rng.normal(0.0, cfg.proposal_sd, size=theta.size)
        err = float(np.mean((_forward_flat(prop, X, F, H) - T) ** 2))
        if cfg.temperature is None:
            accept = err < cur
        else:
            accept = err < cur or rng.uniform() < math.exp(-(err - cur) / cfg.temperature)
        if accept:
            theta, cur = prop, err
            if cur < best:
                best_theta, best = theta, cur
    return MlpExpert.from_flat(best_theta, F, H)
