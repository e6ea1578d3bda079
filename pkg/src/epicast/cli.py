"""Command-line front end: ingestion, models, adjustment, evaluation and
report emission.

Subcommands: ``forecast``, ``adjust``, ``monitor``, ``shelflife``, ``r0``.
Every run is deterministic given the input file, flags and ``--seed``
(default 42): randomness derives from the seed as documented per module
(per-origin ``seed + T`` in the monitor, per-component ``seed + k`` in the
residual networks). Commands compute everything first and write all output
files last, so a failing run leaves no partial outputs. Set ``EPICAST_LOG``
to ``debug``/``info`` for progress logging.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace
from datetime import timedelta
from pathlib import Path

import numpy as np

from . import adjust as adjust_mod
from . import epi
from .core import HierarchicalPanel, parse_panel_csv, parse_series_csv
from .errors import EpicastError, ValidationError
from .evaluate import monitor, shelf_life
from .hybrid import MODEL_TAGS, fit_tagged_models
from .neural import TdnnConfig

log = logging.getLogger("epicast")

DEFAULT_MODEL = "holt-wbann"
DEFAULT_POPULATION = 1.38e9


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _svg_chart(series_by_name: dict, title: str, width=720, height=360) -> str:
    """Minimal multi-line SVG chart; data-only, no external services."""
    pad = 40
    xs = [x for _, points in series_by_name.items() for x, _ in points]
    ys = [y for _, points in series_by_name.items() for _, y in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<title>{title}</title>',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for idx, (name, points) in enumerate(series_by_name.items()):
        coords = []
        for x, y in points:
            px = pad + (x - x_lo) / x_span * (width - 2 * pad)
            py = height - pad - (y - y_lo) / y_span * (height - 2 * pad)
            coords.append(f"{px:.2f},{py:.2f}")
        colour = palette[idx % len(palette)]
        parts.append(
            f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" '
            f'points="{" ".join(coords)}"/>'
        )
        parts.append(
            f'<text x="{pad}" y="{pad + 14 * idx}" font-size="12" '
            f'fill="{colour}">{name}</text>'
        )
    parts.append("</svg>\n")
    return "\n".join(parts)


def _tdnn_config(args) -> TdnnConfig:
    config = TdnnConfig(seed=args.seed)
    overrides = {}
    for key in ("lags", "hidden", "repeats", "epochs"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return replace(config, **overrides) if overrides else config


def _split_tags(text: str) -> list[str]:
    """Split a comma-separated tag list, ignoring commas inside parentheses
    so fixed-order specs like ``arima(0,1,0)`` survive."""
    tags, depth, current = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            tags.append("".join(current).strip())
            current = []
            continue
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        current.append(ch)
    tags.append("".join(current).strip())
    return [tag for tag in tags if tag]


def _parse_weight_mode(text: str):
    parts = text.strip().lower().split(":")
    mode = parts[0]
    if mode == "last" and len(parts) == 1:
        return {"mode": "last"}
    if mode == "window" and len(parts) == 2:
        return {"mode": "window", "window": int(parts[1])}
    if mode == "ewma" and len(parts) == 2:
        return {"mode": "ewma", "decay": float(parts[1])}
    raise ValidationError(
        f"bad --weight-mode {text!r}; expected last, window:K or ewma:LAMBDA"
    )


def cmd_forecast(args) -> list[Path]:
    series = parse_series_csv(args.input)
    fitted = fit_tagged_models(series, [args.model], _tdnn_config(args))
    raw = fitted[args.model.strip().lower()].forecast(args.horizon)
    out_dir = Path(args.out)
    rows = []
    points = []
    for i, value in enumerate(raw, start=1):
        date = series.last_date + timedelta(days=i)
        rows.append([date.isoformat(), _fmt(value), _fmt(max(0.0, value))])
        points.append((len(series) + i, float(value)))
    outputs = [(out_dir / "forecast.csv", "csv",
                (["date", "point_forecast", "clamped_forecast"], rows))]
    if args.svg:
        history = [(i + 1, float(v)) for i, v in enumerate(series.values)]
        chart = _svg_chart(
            {series.name: history, f"{args.model} forecast": points},
            f"{args.model} forecast for {series.name}",
        )
        outputs.append((out_dir / "forecast.svg", "text", chart))
    return _emit(outputs)


def _fit_panel(panel: HierarchicalPanel, model: str, config: TdnnConfig,
               fit_one=None):
    """Fit the chosen model nationally and per state; states whose fit fails
    are excluded (reported), the rest carry the correction."""
    if fit_one is None:
        def fit_one(series):
            return fit_tagged_models(series, [model], config)[
                model.strip().lower()
            ]
    national = fit_one(panel.national)
    states, excluded = [], []
    for s in panel.states:
        try:
            states.append((s, fit_one(s)))
        except EpicastError as exc:
            excluded.append((s.name, str(exc)))
    if not states:
        raise ValidationError("every state failed to fit; nothing to adjust")
    return national, states, excluded


def _last_defined(series, fitted_values):
    mask = np.isfinite(fitted_values)
    idx = int(np.flatnonzero(mask)[-1])
    return series.values[idx], float(fitted_values[idx])


def cmd_adjust(args, fit_one=None) -> list[Path]:
    panel = parse_panel_csv(args.input)
    config = _tdnn_config(args)
    mode = _parse_weight_mode(args.weight_mode)
    national_model, state_models, excluded = _fit_panel(
        panel, args.model, config, fit_one=fit_one
    )
    for name, reason in excluded:
        log.warning("excluding %s: %s", name, reason)

    nat_fitted = national_model.fitted()
    nat_obs, nat_fit = _last_defined(panel.national, nat_fitted)
    state_forecasts = np.array(
        [float(m.forecast(1)[0]) for _, m in state_models]
    )
    obs_fit_pairs = [
        _last_defined(s, m.fitted()) for s, m in state_models
    ]
    last_obs = np.array([pair[0] for pair in obs_fit_pairs])
    last_fit = np.array([pair[1] for pair in obs_fit_pairs])

    if mode["mode"] == "last":
        weights = adjust_mod.compute_weights(last_obs, last_fit)
    else:
        depth = min(
            int(np.isfinite(m.fitted()).sum()) for _, m in state_models
        )
        obs_hist = np.column_stack(
            [s.values[-depth:] for s, _ in state_models]
        )
        fit_hist = np.column_stack(
            [m.fitted()[-depth:] for _, m in state_models]
        )
        weights = adjust_mod.compute_weights_history(obs_hist, fit_hist, **mode)

    adjustment = adjust_mod.adjust_forecasts(
        adjust_mod.AdjustmentInput(
            state_forecasts=state_forecasts,
            national_forecast=float(national_model.forecast(1)[0]),
            last_observed_states=last_obs,
            last_fitted_states=last_fit,
            last_observed_national=float(nat_obs),
            last_fitted_national=nat_fit,
        ),
        weights=weights,
    )
    rows = []
    for (s, _), unadj, w, corr in zip(
        state_models,
        state_forecasts,
        adjustment.weights,
        adjustment.corrected_state_forecasts - state_forecasts,
    ):
        rows.append(
            [s.name, _fmt(unadj), _fmt(w), _fmt(corr), _fmt(unadj + corr)]
        )
    nat_unadj = float(national_model.forecast(1)[0])
    rows.append(
        [
            panel.national.name,
            _fmt(nat_unadj),
            "",
            _fmt(adjustment.corrected_national_forecast - nat_unadj),
            _fmt(adjustment.corrected_national_forecast),
        ]
    )
    out_dir = Path(args.out)
    outputs = [(out_dir / "adjustment.csv", "csv",
                (["state", "unadjusted", "weight", "correction", "adjusted"],
                 rows))]
    if excluded:
        text = "".join(f"{name}: {reason}\n" for name, reason in excluded)
        outputs.append((out_dir / "exclusions.txt", "text", text))
    written = _emit(outputs)
    print(f"branch: {adjustment.branch}")
    return written


def cmd_monitor(args) -> list[Path]:
    series = parse_series_csv(args.input)
    models = _split_tags(args.model)
    report = monitor(
        series, models, k=args.window, seed=args.seed, config=_tdnn_config(args)
    )
    metric_rows = [
        [r.origin, r.model, _fmt(r.rmse), _fmt(r.mae), _fmt(r.m)]
        for r in report.records
    ]
    dominance_rows = [
        [tag, _fmt(report.dominance[tag]), _fmt(report.weighted_share[tag])]
        for tag in report.models
    ]
    by_origin = {origin: {} for origin in report.origins}
    for r in report.records:
        by_origin[r.origin][r.model] = r.m
    timeline_rows = [
        [origin] + [_fmt(by_origin[origin][tag]) for tag in report.models]
        for origin in report.origins
    ]
    out_dir = Path(args.out)
    outputs = [
        (out_dir / "monitor.csv", "csv",
         (["origin", "model", "rmse", "mae", "m"], metric_rows)),
        (out_dir / "dominance.csv", "csv",
         (["model", "dominance_pct", "weighted_pct"], dominance_rows)),
        (out_dir / "timeline.csv", "csv",
         (["origin"] + [f"m_{tag}" for tag in report.models], timeline_rows)),
    ]
    if args.svg:
        chart = _svg_chart(
            {
                tag: [(origin, by_origin[origin][tag]) for origin in report.origins]
                for tag in report.models
            },
            f"moving-window metric, k={report.k}",
        )
        outputs.append((out_dir / "monitor.svg", "text", chart))
    written = _emit(outputs)
    print(f"mode winner: {report.mode_winner}")
    print(f"recency-weighted winner: {report.weighted_winner}")
    return written


def cmd_shelflife(args) -> list[Path]:
    series = parse_series_csv(args.input)
    train_len = args.train_len if args.train_len is not None else len(series) // 2
    result = shelf_life(
        series,
        train_len,
        model=args.model,
        threshold_pct=args.threshold,
        seed=args.seed,
        config=_tdnn_config(args),
    )
    ape_rows = [
        [t, _fmt(a), _fmt(line)]
        for (t, a), line in zip(result.ape_series, result.fitted_line)
    ]
    if result.unbounded:
        verdict = (
            "shelf life unbounded: the APE trend is not increasing "
            f"(slope {result.slope!r} %/day)\n"
        )
    else:
        verdict = f"shelf life: {result.shelf_days!r} days\n"
    text = (
        f"model: {args.model}\n"
        f"train_len: {result.train_len}\n"
        f"threshold_pct: {result.threshold_pct!r}\n"
        f"slope: {result.slope!r}\n"
        f"intercept: {result.intercept!r}\n"
        f"crossing_t: {result.crossing_t!r}\n" + verdict
    )
    out_dir = Path(args.out)
    written = _emit([
        (out_dir / "ape.csv", "csv", (["t", "ape", "fitted_line"], ape_rows)),
        (out_dir / "shelflife.txt", "text", text),
    ])
    print(verdict, end="")
    return written


def cmd_r0(args) -> list[Path]:
    series = parse_series_csv(args.input)
    window = None
    if args.growth_window is not None:
        start, stop = (int(v) for v in args.growth_window.split(":"))
        window = (start, stop)
    gi = epi.GenerationInterval(args.gi_mean, args.gi_shape)
    r, stderr, mse = epi.fit_growth_rate(series, window)
    growth = epi.r0_from_growth(r, gi, stderr=stderr, mse=mse)
    sir = epi.sir_fit(series, args.population)
    rows = [
        [series.name, "growth", _fmt(growth.r0), _fmt(growth.ci_lower),
         _fmt(growth.ci_upper), _fmt(growth.fit_mse)],
        [series.name, "sir", _fmt(sir.r0_sir), "", "",
         _fmt(sir.trajectory_mse)],
    ]
    out_dir = Path(args.out)
    written = _emit([
        (out_dir / "r0.csv", "csv",
         (["location", "method", "r0", "ci_lower", "ci_upper", "mse"], rows)),
    ])
    print(f"growth r0: {growth.r0!r}  sir r0: {sir.r0_sir!r}")
    return written


def _emit(outputs) -> list[Path]:
    """Write all prepared outputs; directories are created as needed."""
    written = []
    for path, kind, payload in outputs:
        path.parent.mkdir(parents=True, exist_ok=True)
        if kind == "csv":
            header, rows = payload
            _write_csv(path, header, rows)
        else:
            _write_text(path, payload)
        written.append(path)
        log.info("wrote %s", path)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epicast",
        description="Daily count forecasting, reconciliation and monitoring",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model_default=DEFAULT_MODEL, model_help="model tag"):
        p.add_argument("--input", required=True, help="input CSV path")
        p.add_argument("--model", default=model_default, help=model_help)
        p.add_argument("--seed", type=int, default=42, help="master seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--lags", type=int, default=None)
        p.add_argument("--hidden", type=int, default=None)
        p.add_argument("--repeats", type=int, default=None)
        p.add_argument("--epochs", type=int, default=None)

    p = sub.add_parser("forecast", help="h-step point forecasts")
    common(p, model_help=f"one of {', '.join(MODEL_TAGS)}")
    p.add_argument("--horizon", type=int, default=7)
    p.add_argument("--svg", action="store_true", help="also draw an SVG chart")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("adjust", help="constant-sum correction over a panel")
    common(p)
    p.add_argument(
        "--weight-mode",
        default="last",
        help="correction shares: last, window:K or ewma:LAMBDA",
    )
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("monitor", help="rolling-window model comparison")
    common(p, model_default=",".join(MODEL_TAGS),
           model_help="comma-separated model tags")
    p.add_argument("--window", type=int, default=4, help="window width k")
    p.add_argument("--svg", action="store_true", help="also draw an SVG chart")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("shelflife", help="APE-trend staleness horizon")
    common(p)
    p.add_argument("--train-len", type=int, default=None,
                   help="training prefix length (default: half the series)")
    p.add_argument("--threshold", type=float, default=5.0,
                   help="APE staleness threshold in percent")
    p.set_defaults(func=cmd_shelflife)

    p = sub.add_parser("r0", help="reproduction number estimates")
    common(p)
    p.add_argument("--population", type=float, default=DEFAULT_POPULATION)
    p.add_argument("--gi-mean", type=float, default=5.0,
                   help="generation interval mean (days)")
    p.add_argument("--gi-shape", type=float, default=5.0,
                   help="generation interval gamma shape")
    p.add_argument("--growth-window", default=None,
                   help="START:STOP indices for the growth regression")
    p.set_defaults(func=cmd_r0)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("EPICAST_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (EpicastError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
