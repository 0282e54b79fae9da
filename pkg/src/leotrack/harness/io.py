"""CSV persistence for metric series, confidence-region orbit tracks and plots."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..orbit import OrbitShape, azimuth_elevation, direction
from ..vmp import OrbitSurrogate, sample_ci_orbits
from .metrics import MetricSeries

METRIC_HEADER = ["t_seconds", "method", "A_e_deg", "K"]
CI_HEADER = ["sample", "t_seconds", "alpha", "beta", "eta0", "az_deg", "el_deg"]


def _fmt(x: float) -> str:
    # repr round-trips exactly and is platform independent
    return repr(float(x))


def emit_results(series, path: str | Path) -> None:
    """Write one row per (time, method) in the order given."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRIC_HEADER)
        for s in series:
            for t, a in zip(s.t, s.a_e):
                w.writerow([_fmt(t), s.method, _fmt(a), s.k])


def read_results(path: str | Path) -> list[MetricSeries]:
    rows: dict[str, list] = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.setdefault(rec["method"], []).append(rec)
    out = []
    for method, recs in rows.items():
        t = [float(r["t_seconds"]) for r in recs]
        a = [float(r["A_e_deg"]) for r in recs]
        out.append(MetricSeries(method, np.array(t), np.array(a), int(recs[0]["K"])))
    return out


def emit_ci_orbits(orbit: OrbitSurrogate, times, path: str | Path, shape: OrbitShape,
                   rng: np.random.Generator, level: float = 0.95, count: int = 50) -> int:
    """Sample ``count`` orbits inside the ``level`` region and write their tracks.

    Returns the number of rows written (``count * len(times)``).
    """
    times = np.asarray(times, dtype=float)
    gammas = sample_ci_orbits(orbit, level, count, rng)
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CI_HEADER)
        for i, g in enumerate(gammas):
            az, el = azimuth_elevation(direction(times, g, shape))
            for t, a, e in zip(times, np.degrees(az), np.degrees(el)):
                w.writerow([i, _fmt(t), *(_fmt(v) for v in g), _fmt(a), _fmt(e)])
                n += 1
    return n


def write_gnuplot(path: str | Path, csv_name: str, methods) -> None:
    """Small gnuplot script plotting A_e over time for each method."""
    plots = ", ".join(
        f"'{csv_name}' using 1:(stringcolumn(2) eq '{m}' ? $3 : 1/0) with lines title '{m}'"
        for m in methods
    )
    Path(path).write_text(
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        "set xlabel 'time [s]'\n"
        "set ylabel 'A_e [deg]'\n"
        "set logscale y\n"
        f"plot {plots}\n"
    )
