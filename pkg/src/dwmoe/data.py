"""Price-series ingestion, weekly percent-change features and synthetic datasets."""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: Range of a representable weekly target change.
TARGET_BOUND = 0.2


class DataError(ValueError):
    """Raised for malformed input data. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message}, line {line}"
        super().__init__(message)


@dataclass(frozen=True)
class RawSeries:
    """Daily (or weekly) positive prices, one row per date."""

    dates: tuple[dt.date, ...]
    values: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape != (len(self.dates), len(self.feature_names)):
            raise DataError("values must have shape (rows, features)")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise DataError("values must be finite and positive")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError("dates must be strictly increasing")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class FeatureMatrix:
    """Fractional week-on-week changes; ``changes[w, f]`` for week ``weeks[w]``."""

    weeks: tuple[int, ...]
    changes: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        changes = np.array(self.changes, dtype=float, copy=True)
        if changes.ndim != 2 or changes.shape != (len(self.weeks), len(self.feature_names)):
            raise DataError("changes must have shape (weeks, features)")
        if not np.all(np.isfinite(changes)):
            raise DataError("changes must be finite")
        if any(b != a + 1 for a, b in zip(self.weeks, self.weeks[1:])):
            raise DataError("week indices must be consecutive")
        changes.flags.writeable = False
        object.__setattr__(self, "changes", changes)
        object.__setattr__(self, "weeks", tuple(self.weeks))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self):
        return len(self.weeks)


@dataclass(frozen=True)
class Sample:
    """Input changes of one week and the target change of the next."""

    x: np.ndarray
    t: float

    def __post_init__(self):
        x = np.array(self.x, dtype=float, copy=True)
        if x.ndim != 1 or not np.all(np.isfinite(x)) or not np.isfinite(self.t):
            raise DataError("sample must be a finite vector and a finite target")
        x.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class LabeledPoint:
    x: tuple[float, float]
    label: int


@dataclass(frozen=True)
class Regime:
    length: int
    coeffs: tuple[float, ...]
    noise_sd: float = 0.0


@dataclass(frozen=True)
class DriftSpec:
    """Piecewise-stationary linear target over autoregressive feature changes.

    ``ar`` and ``feature_sd`` parameterise the AR(1) process the features
    follow; every regime must carry ``len(coeffs) == n_features``.
    """

    n_weeks: int
    regimes: tuple[Regime, ...]
    seed: int = 0
    ar: float = 0.3
    feature_sd: float = 0.05
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        regimes = tuple(r if isinstance(r, Regime) else Regime(**r) for r in self.regimes)
        regimes = tuple(
            Regime(int(r.length), tuple(float(c) for c in r.coeffs), float(r.noise_sd)) for r in regimes
        )
        object.__setattr__(self, "regimes", regimes)
        if not regimes:
            raise DataError("at least one regime is required")
        if sum(r.length for r in regimes) != self.n_weeks:
            raise DataError("regime lengths must sum to n_weeks")
        if any(r.length < 0 or r.noise_sd < 0 for r in regimes):
            raise DataError("regime lengths and noise_sd must be non-negative")
        if len({len(r.coeffs) for r in regimes}) != 1:
            raise DataError("all regimes need the same number of coefficients")
        if not -1.0 < self.ar < 1.0 or self.feature_sd < 0:
            raise DataError("need |ar| < 1 and feature_sd >= 0")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(self.n_features))
        if len(names) != self.n_features:
            raise DataError("feature_names length must match coefficient count")
        object.__setattr__(self, "feature_names", names)

    @property
    def n_features(self) -> int:
        return len(self.regimes[0].coeffs)

    def to_dict(self) -> dict:
        return {
            "n_weeks": self.n_weeks,
            "regimes": [
                {"length": r.length, "coeffs": list(r.coeffs), "noise_sd": r.noise_sd} for r in self.regimes
            ],
            "seed": self.seed,
            "ar": self.ar,
            "feature_sd": self.feature_sd,
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DriftSpec":
        d = dict(d)
        d["regimes"] = tuple(Regime(**r) for r in d["regimes"])
        d["feature_names"] = tuple(d.get("feature_names", ()))
        return cls(**d)


# -- ingestion ---------------------------------------------------------------


def _read_rows(text: str | Iterable[str]):
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty input", line=1) from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[0].lower() != "date":
        raise DataError("header must be 'date' followed by feature columns", line=1)
    rows = []
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        try:
            day = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise DataError(f"bad date {row[0]!r}", line=lineno) from None
        try:
            vals = [float(c) for c in row[1:]]
        except ValueError:
            raise DataError("bad decimal value", line=lineno) from None
        if not all(np.isfinite(vals)):
            raise DataError("non-finite value", line=lineno)
        rows.append((lineno, day, vals))
    return header, rows


def load_csv(text: str | Iterable[str]) -> RawSeries:
    """Parse a ``date,<f1>,...,<fF>`` price file into a date-sorted series.

    Raises :class:`DataError` naming the offending line for malformed rows,
    non-positive values and duplicate dates.
    """
    header, rows = _read_rows(text)
    seen: dict[dt.date, int] = {}
    for lineno, day, vals in rows:
        if any(v <= 0 for v in vals):
            raise DataError("non-positive value", line=lineno)
        if day in seen:
            raise DataError(f"duplicate date {day.isoformat()}", line=lineno)
        seen[day] = lineno
    rows.sort(key=lambda r: r[1])
    return RawSeries(
        dates=tuple(r[1] for r in rows),
        values=np.array([r[2] for r in rows], dtype=float).reshape(len(rows), len(header) - 1),
        feature_names=tuple(header[1:]),
    )


def load_sample_csv(text: str | Iterable[str]) -> tuple[list[Sample], tuple[str, ...]]:
    """Parse an exported dataset whose last column is ``target``.

    Feature columns already hold changes (or coordinates), so signs are free.
    Rows keep their file order.
    """
    header, rows = _read_rows(text)
    if header[-1] != "target" or len(header) < 3:
        raise DataError("sample file needs feature columns and a final 'target' column", line=1)
    samples = [Sample(np.array(vals[:-1]), vals[-1]) for _, _, vals in rows]
    return samples, tuple(header[1:-1])


def has_target_column(text: str) -> bool:
    first = text.lstrip().split("\n", 1)[0]
    return first.strip().split(",")[-1].strip() == "target"


def dump_csv(dates: Sequence[dt.date], values: np.ndarray, names: Sequence[str],
             targets: Sequence[float] | None = None) -> str:
    """Write rows in the loader's format; ``targets`` adds a final column."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["date", *names, *(["target"] if targets is not None else [])])
    for i, day in enumerate(dates):
        row = [day.isoformat(), *(repr(float(v)) for v in values[i])]
        if targets is not None:
            row.append(repr(float(targets[i])))
        writer.writerow(row)
    return out.getvalue()


# -- transforms --------------------------------------------------------------


def weekly_average(series: RawSeries) -> RawSeries:
    """Average each ISO week's rows; the output row is dated on that week's Monday."""
    if len(series) == 0:
        raise DataError("cannot average an empty series")
    groups: dict[dt.date, list[int]] = {}
    for i, day in enumerate(series.dates):
        monday = day - dt.timedelta(days=day.isoweekday() - 1)
        groups.setdefault(monday, []).append(i)
    mondays = sorted(groups)
    means = np.array([series.values[groups[m]].mean(axis=0) for m in mondays])
    return RawSeries(tuple(mondays), means, series.feature_names)


def to_percent_changes(series: RawSeries) -> FeatureMatrix:
    """Fractional change of each row relative to the previous one."""
    if len(series) < 2:
        raise DataError("need at least two rows for changes")
    v = series.values
    changes = (v[1:] - v[:-1]) / v[:-1]
    return FeatureMatrix(tuple(range(len(changes))), changes, series.feature_names)


def reconstruct_prices(first: Sequence[float], changes: np.ndarray) -> np.ndarray:
    """Invert :func:`to_percent_changes` given the first row of prices."""
    first = np.asarray(first, dtype=float)
    growth = np.cumprod(1.0 + np.asarray(changes, dtype=float), axis=0)
    return np.vstack([first, first * growth])


def make_samples(m: FeatureMatrix, target_feature: int) -> list[Sample]:
    """Pair each week's changes with the next week's change of ``target_feature``."""
    if not 0 <= target_feature < len(m.feature_names):
        raise DataError(f"target feature index {target_feature} out of range")
    if len(m) < 2:
        raise DataError("need at least two weeks to build samples")
    c = m.changes
    return [Sample(c[j], c[j + 1, target_feature]) for j in range(len(m) - 1)]


def stack_samples(samples: Sequence[Sample]) -> tuple[np.ndarray, np.ndarray]:
    """Samples as an ``(N, F)`` input matrix and an ``(N,)`` target vector."""
    if not samples:
        return np.empty((0, 0)), np.empty(0)
    return np.vstack([s.x for s in samples]), np.array([s.t for s in samples])


# -- synthetic data ----------------------------------------------------------


def gen_crescents(n: int, noise_sd: float, seed: int) -> list[LabeledPoint]:
    """Two interleaving half-circle arcs with isotropic Gaussian noise.

    Class 0 lies on the upper unit arc centred at the origin, class 1 on the
    lower unit arc centred at ``(1, 0.5)``. Points come back shuffled, so any
    head/tail split is a random split.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be an even count >= 2")
    if noise_sd < 0:
        raise ValueError("noise_sd must be non-negative")
    rng = np.random.default_rng(seed)
    half = n // 2
    theta = rng.uniform(0.0, np.pi, size=(2, half))
    upper = np.column_stack([np.cos(theta[0]), np.sin(theta[0])])
    lower = np.column_stack([1.0 - np.cos(theta[1]), 0.5 - np.sin(theta[1])])
    pts = np.vstack([upper, lower]) + rng.normal(0.0, noise_sd, size=(n, 2))
    labels = np.repeat([0, 1], half)
    order = rng.permutation(n)
    return [LabeledPoint((float(pts[i, 0]), float(pts[i, 1])), int(labels[i])) for i in order]


def arc_distance(x: Sequence[float], label: int) -> float:
    """Distance from ``x`` to the noise-free arc of class ``label``."""
    cx, cy, sign = (0.0, 0.0, 1.0) if label == 0 else (1.0, 0.5, -1.0)
    dx, dy = x[0] - cx, x[1] - cy
    if sign * dy >= 0:
        return abs(np.hypot(dx, dy) - 1.0)
    # below (above) the diameter: the nearest arc point is an endpoint
    return min(np.hypot(dx - 1.0, dy), np.hypot(dx + 1.0, dy))


def gen_drifting_series(spec: DriftSpec) -> tuple[FeatureMatrix, list[float]]:
    """Simulate AR(1) feature changes with a regime-switching linear target.

    ``targets[w]`` is the change of the week following week ``w``, generated
    from ``changes[w]`` with the coefficients of the regime active at ``w``
    and clamped to ``[-0.2, 0.2]``.
    """
    rng = np.random.default_rng(spec.seed)
    n, f = spec.n_weeks, spec.n_features
    innov = rng.normal(0.0, 1.0, size=(n, f))
    eps = rng.normal(0.0, 1.0, size=n)
    x = np.empty((n, f))
    if n:
        x[0] = innov[0] * spec.feature_sd / np.sqrt(1.0 - spec.ar ** 2)
    for w in range(1, n):
        x[w] = spec.ar * x[w - 1] + spec.feature_sd * innov[w]
    coeffs = np.empty((n, f))
    noise = np.empty(n)
    start = 0
    for r in spec.regimes:
        coeffs[start:start + r.length] = r.coeffs
        noise[start:start + r.length] = r.noise_sd
        start += r.length
    targets = np.clip(np.einsum("wf,wf->w", coeffs, x) + noise * eps, -TARGET_BOUND, TARGET_BOUND)
    return FeatureMatrix(tuple(range(n)), x, spec.feature_names), [float(t) for t in targets]


def drift_samples(spec: DriftSpec) -> list[Sample]:
    m, targets = gen_drifting_series(spec)
    return [Sample(m.changes[w], targets[w]) for w in range(len(m))]


def weekly_dates(n: int, start: dt.date = dt.date(2000, 1, 3)) -> list[dt.date]:
    """``n`` consecutive Mondays, used to date synthetic exports."""
    return [start + dt.timedelta(weeks=i) for i in range(n)]
