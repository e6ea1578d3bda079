"""Two-phase forecasters: a base model plus a wavelet-network remodeling of
its residuals. The final fitted values and forecasts are the elementwise sum
of the two phases, so the residual model can only add information the base
model left behind.

Registered model tags: ``arima``, ``arima-wbf``, ``holt``, ``holt-wbann``
(plus fixed-order variants like ``arima(0,1,0)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import UnivariateSeries
from .errors import InsufficientDataError, ValidationError
from .forecasters import Forecaster, make_base_forecaster
from .neural import TdnnConfig, WbannModel, wbann_fit, wbann_forecast

MODEL_TAGS = ("arima", "arima-wbf", "holt", "holt-wbann")

HYBRID_BASES = {"holt-wbann": "holt", "arima-wbf": "arima"}


@dataclass
class HybridModel:
    """A fitted base model and the residual network trained on its errors."""

    base: Forecaster
    residual_model: WbannModel = field(repr=False)
    base_kind: str
    n_obs: int
    base_skip: int  # leading positions where the base has no fitted value


def _tagged(phase: str, exc: Exception) -> Exception:
    return type(exc)(f"{phase} phase: {exc}")


def hybrid_fit(
    series: UnivariateSeries,
    base_kind: str,
    config: TdnnConfig | None = None,
    base: Forecaster | None = None,
) -> HybridModel:
    """Fit the base on the full series, then the residual network on the
    base's one-step errors. A prefit ``base`` for the same series may be
    supplied to avoid refitting."""
    if len(series) < 20:
        raise InsufficientDataError(
            f"hybrid fit needs >= 20 points, got {len(series)}"
        )
    config = config or TdnnConfig()
    if base is None:
        try:
            base = make_base_forecaster(base_kind).fit(series)
        except Exception as exc:
            raise _tagged(f"base ({base_kind})", exc) from exc
    fitted = base.fitted()
    defined = np.isfinite(fitted)
    skip = int(np.argmax(defined)) if defined.any() else len(fitted)
    if not defined[skip:].all():
        raise ValidationError("base fitted values must be a contiguous tail")
    residuals = series.values[skip:] - fitted[skip:]
    try:
        residual_model = wbann_fit(residuals, config)
    except Exception as exc:
        raise _tagged("residual (wbann)", exc) from exc
    return HybridModel(
        base=base,
        residual_model=residual_model,
        base_kind=base_kind,
        n_obs=len(series),
        base_skip=skip,
    )


def hybrid_fitted(model: HybridModel) -> np.ndarray:
    """Base fitted plus residual fitted, aligned on the original index; NaN
    where either phase defines no value."""
    out = np.full(model.n_obs, np.nan)
    base_fitted = model.base.fitted()
    resid_fitted = model.residual_model.fitted_values
    start = model.base_skip + model.residual_model.component_models[0].config.lags
    offset = start - model.base_skip
    out[start:] = base_fitted[start:] + resid_fitted[offset:]
    return out


def hybrid_forecast(model: HybridModel, h: int) -> np.ndarray:
    """Base forecast plus residual forecast, elementwise."""
    if h == 0:
        return np.empty(0)
    return model.base.forecast(h) + wbann_forecast(model.residual_model, h)


class HybridForecaster(Forecaster):
    """Hybrid composition under the shared forecaster contract."""

    def __init__(self, base_kind: str, config: TdnnConfig | None = None):
        self.base_kind = base_kind
        self.config = config or TdnnConfig()
        self.tag = f"{base_kind}+wbann"

    def fit(self, train: UnivariateSeries, base: Forecaster | None = None):
        self._observed = np.asarray(train.values, dtype=float)
        self.model = hybrid_fit(train, self.base_kind, self.config, base=base)
        return self

    def fitted(self) -> np.ndarray:
        return hybrid_fitted(self.model)

    def forecast(self, h: int) -> np.ndarray:
        return hybrid_forecast(self.model, h)


def make_forecaster(tag: str, config: TdnnConfig | None = None) -> Forecaster:
    """Build an unfitted forecaster from a registered tag."""
    tag = tag.strip().lower()
    if tag in HYBRID_BASES:
        model = HybridForecaster(HYBRID_BASES[tag], config)
        model.tag = tag
        return model
    model = make_base_forecaster(tag)
    return model


def fit_tagged_models(
    series: UnivariateSeries, tags, config: TdnnConfig | None = None
) -> dict[str, Forecaster]:
    """Fit every tag on one series, fitting each distinct base model once.

    Base fits are deterministic pure functions of the series, so a hybrid
    and its standalone base share the identical fitted object.
    """
    config = config or TdnnConfig()
    fitted: dict[str, Forecaster] = {}
    base_cache: dict[str, Forecaster] = {}

    def fit_base(kind: str) -> Forecaster:
        if kind not in base_cache:
            base_cache[kind] = make_base_forecaster(kind).fit(series)
        return base_cache[kind]

    for tag in tags:
        key = tag.strip().lower()
        if key in fitted:
            continue
        if key in HYBRID_BASES:
            model = HybridForecaster(HYBRID_BASES[key], config)
            model.tag = key
            fitted[key] = model.fit(series, base=fit_base(HYBRID_BASES[key]))
        else:
            fitted[key] = fit_base(key)
    return fitted
