"""Accuracy metrics, rolling-window model monitoring, and shelf-life
estimation.

The monitor walks an expanding origin over the second half of a series:
at each origin T every candidate model is refit on observations 1..T-1 and
scored out of sample over the next k observations with the combined metric
``m = (rmse + mae) / 2``. The per-origin winners yield each model's
dominance share of the timeline, reported both unweighted and with
recency-decayed weights.

Shelf life regresses out-of-sample absolute percent error on time and
reports when the fitted line crosses a staleness threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import UnivariateSeries
from .errors import InsufficientDataError, ValidationError
from .hybrid import fit_tagged_models
from .neural import TdnnConfig

RECENCY_DECAY = 0.9


def _paired(actual, predicted):
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1 or len(a) == 0:
        raise ValidationError(
            f"need equal-length nonempty vectors, got {a.shape} and {p.shape}"
        )
    return a, p


def rmse(actual, predicted) -> float:
    a, p = _paired(actual, predicted)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def mae(actual, predicted) -> float:
    a, p = _paired(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def ape(actual: float, predicted: float) -> float:
    """Absolute percent error of one prediction; undefined at actual == 0."""
    if actual == 0:
        raise ValidationError("absolute percent error undefined for actual == 0")
    return abs(actual - predicted) / abs(actual) * 100.0


@dataclass(frozen=True)
class WindowMetricRecord:
    origin: int
    model: str
    rmse: float
    mae: float

    @property
    def m(self) -> float:
        return (self.rmse + self.mae) / 2.0


@dataclass(frozen=True)
class MonitorReport:
    k: int
    models: tuple
    origins: tuple
    records: tuple
    psi: dict = field(repr=False)
    dominance: dict
    weighted_share: dict = field(repr=False)

    @property
    def mode_winner(self) -> str:
        return max(self.models, key=lambda tag: self.dominance[tag])

    @property
    def weighted_winner(self) -> str:
        return max(self.models, key=lambda tag: self.weighted_share[tag])


def monitor(
    series: UnivariateSeries,
    models,
    k: int = 4,
    seed: int = 42,
    config: TdnnConfig | None = None,
) -> MonitorReport:
    """Score every model over all rolling origins.

    Origins run T = [t/2]+1 .. t-k+1 (1-indexed); each refits the models on
    observations 1..T-1 with a per-origin seed ``seed + T`` and scores the
    k-step forecast against observations T..T+k-1. Ties in the per-origin
    argmin go to the earlier model in ``models``.
    """
    models = [tag.strip().lower() for tag in models]
    if not models:
        raise ValidationError("need at least one model tag")
    if k < 1:
        raise ValidationError("window width k must be >= 1")
    t = len(series)
    if t < 2 * k + 4:
        raise InsufficientDataError(
            f"monitoring needs at least 2k + 4 = {2 * k + 4} observations, got {t}"
        )
    config = config or TdnnConfig(seed=seed)
    half = t // 2
    origins = tuple(range(half + 1, t - k + 2))
    records = []
    psi = {}
    wins = {tag: 0 for tag in models}
    weighted = {tag: 0.0 for tag in models}
    t_max = origins[-1]
    for origin in origins:
        train = series.prefix(origin - 1)
        actual = series.values[origin - 1 : origin - 1 + k]
        fitted = fit_tagged_models(
            train, models, replace(config, seed=seed + origin)
        )
        best_tag = None
        best_m = math.inf
        for tag in models:
            forecast = fitted[tag].forecast(k)
            record = WindowMetricRecord(
                origin=origin,
                model=tag,
                rmse=rmse(actual, forecast),
                mae=mae(actual, forecast),
            )
            records.append(record)
            if record.m < best_m:
                best_tag, best_m = tag, record.m
        psi[origin] = best_tag
        wins[best_tag] += 1
        weighted[best_tag] += RECENCY_DECAY ** (t_max - origin)
    n_origins = len(origins)
    dominance = {tag: 100.0 * wins[tag] / n_origins for tag in models}
    total_weight = sum(weighted.values())
    weighted_share = {
        tag: 100.0 * weighted[tag] / total_weight for tag in models
    }
    return MonitorReport(
        k=k,
        models=tuple(models),
        origins=origins,
        records=tuple(records),
        psi=psi,
        dominance=dominance,
        weighted_share=weighted_share,
    )


@dataclass(frozen=True)
class ShelfLifeResult:
    slope: float
    intercept: float
    crossing_t: float
    shelf_days: float
    unbounded: bool
    threshold_pct: float
    train_len: int
    ape_series: tuple  # (t, ape) pairs, t 1-indexed
    fitted_line: tuple

    @property
    def t_values(self) -> np.ndarray:
        return np.asarray([t for t, _ in self.ape_series], dtype=float)

    @property
    def ape_values(self) -> np.ndarray:
        return np.asarray([a for _, a in self.ape_series], dtype=float)


def shelf_life_from_apes(
    t_values, apes, train_len: int, threshold_pct: float = 5.0
) -> ShelfLifeResult:
    """Regress APE on t and invert the fitted line at the threshold."""
    t_arr = np.asarray(t_values, dtype=float)
    ape_arr = np.asarray(apes, dtype=float)
    if len(t_arr) != len(ape_arr) or len(t_arr) < 3:
        raise ValidationError(
            "shelf-life regression needs at least 3 matched (t, APE) points"
        )
    slope, intercept = np.polyfit(t_arr, ape_arr, 1)
    slope, intercept = float(slope), float(intercept)
    if slope <= 0:
        crossing_t = math.inf
        shelf_days = math.inf
        unbounded = True
    else:
        crossing_t = (threshold_pct - intercept) / slope
        shelf_days = crossing_t - train_len
        unbounded = False
    line = tuple(intercept + slope * t_arr)
    return ShelfLifeResult(
        slope=slope,
        intercept=intercept,
        crossing_t=crossing_t,
        shelf_days=shelf_days,
        unbounded=unbounded,
        threshold_pct=threshold_pct,
        train_len=train_len,
        ape_series=tuple(zip((int(t) for t in t_arr), ape_arr)),
        fitted_line=line,
    )


def shelf_life(
    series: UnivariateSeries,
    train_len: int,
    model: str = "holt-wbann",
    threshold_pct: float = 5.0,
    seed: int = 42,
    config: TdnnConfig | None = None,
) -> ShelfLifeResult:
    """Train on the first ``train_len`` points, score APE over the rest, and
    report where the APE trend line crosses ``threshold_pct``."""
    t = len(series)
    if not 0 < train_len < t:
        raise ValidationError(f"train_len must lie in (0, {t})")
    horizon = t - train_len
    config = config or TdnnConfig(seed=seed)
    fitted = fit_tagged_models(series.prefix(train_len), [model], config)
    forecast = fitted[model.strip().lower()].forecast(horizon)
    actual = series.values[train_len:]
    zeros = np.flatnonzero(actual == 0)
    if len(zeros):
        bad = series.dates[train_len + int(zeros[0])]
        raise ValidationError(
            f"APE undefined: zero observation on {bad.isoformat()}"
        )
    apes = np.abs(actual - forecast) / np.abs(actual) * 100.0
    t_values = np.arange(train_len + 1, t + 1)
    return shelf_life_from_apes(t_values, apes, train_len, threshold_pct)
