#!/usr/bin/env python3
"""Regenerate the committed CSV fixtures under src/epicast/data/.

The fixtures mimic the archived covid19india.org daily confirmed-case feed
for 2020-03-14 through 2021-01-10 (303 days): a single national wave peaking
mid-September with a weekly reporting ripple, plus six hotspot states whose
shares of the national count evolve over the epidemic. The national column
exceeds the state sum every day (unattributed counts), so the panel defect
is positive. Deterministic: rerunning reproduces the committed bytes.
"""

import csv
import datetime
from pathlib import Path

import numpy as np

START = datetime.date(2020, 3, 14)
END = datetime.date(2021, 1, 10)
SEED = 20200314

# (day index, national daily count) anchors, interpolated in log space
NATIONAL_ANCHORS = [
    (0, 70),
    (17, 130),
    (47, 1500),
    (78, 7400),
    (108, 18500),
    (139, 48000),
    (170, 78000),
    (185, 95000),
    (200, 84000),
    (231, 47000),
    (262, 36000),
    (292, 19500),
    (302, 16300),
]

# (day index, share of national) anchors per hotspot state
STATE_ANCHORS = {
    "maharashtra": [(0, 0.30), (60, 0.32), (120, 0.30), (170, 0.24),
                    (220, 0.16), (302, 0.18)],
    "andhra_pradesh": [(0, 0.02), (100, 0.06), (150, 0.14), (185, 0.12),
                       (230, 0.06), (302, 0.015)],
    "tamil_nadu": [(0, 0.10), (60, 0.18), (120, 0.12), (185, 0.06),
                   (302, 0.045)],
    "karnataka": [(0, 0.03), (100, 0.08), (150, 0.11), (195, 0.12),
                  (250, 0.06), (302, 0.05)],
    "chhattisgarh": [(0, 0.004), (150, 0.01), (200, 0.03), (230, 0.035),
                     (302, 0.042)],
    "kerala": [(0, 0.05), (80, 0.025), (150, 0.04), (200, 0.08),
               (250, 0.16), (302, 0.28)],
}


def _interp(anchors, n, log_space):
    xs = np.array([a[0] for a in anchors], dtype=float)
    ys = np.array([a[1] for a in anchors], dtype=float)
    t = np.arange(n, dtype=float)
    if log_space:
        return np.exp(np.interp(t, xs, np.log(ys)))
    return np.interp(t, xs, ys)


def build():
    n = (END - START).days + 1
    rng = np.random.default_rng(SEED)
    t = np.arange(n)

    base = _interp(NATIONAL_ANCHORS, n, log_space=True)
    weekly = 1.0 + 0.07 * np.sin(2 * np.pi * t / 7.0 + 0.8)
    noise = np.exp(rng.normal(0.0, 0.035, size=n))
    national = np.maximum(1, np.rint(base * weekly * noise)).astype(int)

    states = {}
    for name, anchors in STATE_ANCHORS.items():
        share = _interp(anchors, n, log_space=False)
        jitter = np.exp(rng.normal(0.0, 0.04, size=n))
        states[name] = np.maximum(
            0, np.rint(national * share * jitter)
        ).astype(int)

    total_states = np.sum(list(states.values()), axis=0)
    if np.any(total_states > national):
        raise RuntimeError("state sum exceeds national; adjust share anchors")
    return national, states


def main():
    out_dir = Path(__file__).resolve().parents[1] / "src" / "epicast" / "data"
    out_dir.mkdir(parents=True, exist_ok=True)
    national, states = build()
    n = len(national)
    dates = [START + datetime.timedelta(days=int(i)) for i in range(n)]

    with open(out_dir / "india_confirmed.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "value"])
        for d, v in zip(dates, national):
            writer.writerow([d.isoformat(), int(v)])

    with open(out_dir / "india_panel.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "india"] + list(states))
        for i, d in enumerate(dates):
            row = [d.isoformat(), int(national[i])]
            row += [int(states[name][i]) for name in states]
            writer.writerow(row)

    print(f"wrote fixtures for {n} days to {out_dir}")


if __name__ == "__main__":
    main()
