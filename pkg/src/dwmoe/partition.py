"""Axis-threshold partitions of the input space into 1, 2 or 4 regions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_AXES = 2


@dataclass(frozen=True)
class Partition:
    """Up to two ``(feature, threshold)`` cuts.

    Bit ``b`` of a region index is set when ``x[feature_b] >= threshold_b``,
    so a value sitting on a threshold belongs to the upper region.
    """

    axes: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        axes = tuple((int(f), float(t)) for f, t in self.axes)
        if len(axes) > MAX_AXES:
            raise ValueError(f"at most {MAX_AXES} axes are supported")
        feats = [f for f, _ in axes]
        if len(set(feats)) != len(feats) or any(f < 0 for f in feats):
            raise ValueError("axis features must be distinct non-negative indices")
        if not all(np.isfinite(t) for _, t in axes):
            raise ValueError("thresholds must be finite")
        object.__setattr__(self, "axes", axes)

    @property
    def n_regions(self) -> int:
        return 2 ** len(self.axes)

    def region_of(self, x) -> int:
        return region_of(self, x)

    def regions_of(self, X: np.ndarray) -> np.ndarray:
        """Vectorised :func:`region_of` over the rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(len(X), dtype=int)
        for bit, (f, thr) in enumerate(self.axes):
            out |= (X[:, f] >= thr).astype(int) << bit
        return out

    def to_dict(self) -> dict:
        return {"axes": [{"feature": f, "threshold": t} for f, t in self.axes]}

    @classmethod
    def from_dict(cls, d: dict) -> "Partition":
        return cls(tuple((a["feature"], a["threshold"]) for a in d["axes"]))


def region_of(p: Partition, x) -> int:
    idx = 0
    for bit, (f, thr) in enumerate(p.axes):
        if x[f] >= thr:
            idx |= 1 << bit
    return idx


def from_medians(points: Sequence[Sequence[float]], feature_indices: Sequence[int]) -> Partition:
    """Cut each listed feature at its median over ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("from_medians needs at least one point")
    return Partition(tuple((f, float(np.median(pts[:, f]))) for f in feature_indices))


def zero_line(feature_indices: Sequence[int] = ()) -> Partition:
    """Cut the listed features at 0, i.e. split on rising versus falling."""
    if len(set(feature_indices)) != len(feature_indices):
        raise ValueError("duplicate feature indices")
    return Partition(tuple((f, 0.0) for f in feature_indices))
