"""Forecast error measures."""

from __future__ import annotations

from typing import Sequence

import numpy as np

#: Targets this close to zero count as "no change".
ZERO_TARGET_TOL = 1e-6
#: A prediction this small is a correct call of "no change".
ZERO_PRED_TOL = 0.01


def _paired(preds, targets) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(preds, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if len(y) != len(t):
        raise ValueError(f"length mismatch: {len(y)} predictions, {len(t)} targets")
    if len(y) == 0:
        raise ValueError("empty input")
    return y, t


def nse_error(preds: Sequence[float], targets: Sequence[float]) -> float:
    """Mean squared relative error, falling back to the plain squared error where the target is 0.

    Predicting no change at all scores exactly 1 on any series without zero
    targets.
    """
    y, t = _paired(preds, targets)
    nz = t != 0
    terms = np.empty_like(t)
    terms[nz] = ((y[nz] - t[nz]) / t[nz]) ** 2
    terms[~nz] = (y[~nz] - t[~nz]) ** 2
    return float(np.mean(terms))


def direction_hits(preds, targets) -> np.ndarray:
    """Boolean array: was the sign of the change called correctly?"""
    y = np.asarray(preds, dtype=float)
    t = np.asarray(targets, dtype=float)
    flat = np.abs(t) <= ZERO_TARGET_TOL
    return np.where(flat, np.abs(y) <= ZERO_PRED_TOL, np.sign(y) == np.sign(t))


def direction_accuracy(preds: Sequence[float], targets: Sequence[float]) -> float:
    y, t = _paired(preds, targets)
    return float(np.mean(direction_hits(y, t)))
