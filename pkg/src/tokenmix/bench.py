"""Wall-clock timing, CSV records and log-log complexity fits."""
from __future__ import annotations

import csv
import statistics
import time
from dataclasses import astuple, dataclass, fields
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np

__all__ = ["BenchRecord", "CSV_FIELDS", "time_call", "fit_exponent", "fit_power", "write_records"]


@dataclass(frozen=True)
class BenchRecord:
    op: str
    workers: int
    L: int
    D: int
    H: int
    wall_ms: float
    peak_score_elems: int = 0
    bytes_shuffled: int = 0
    max_feasible: int | str = ""


CSV_FIELDS = [f.name for f in fields(BenchRecord)]


def time_call(fn: Callable[[], object], repeats: int = 3) -> float:
    """Median wall time of ``fn()`` in milliseconds over ``repeats`` runs (after one warm-up)."""
    fn()
    samples = []
    for _ in range(max(1, repeats)):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return max(statistics.median(samples) * 1e3, 1e-6)


def fit_exponent(lengths: Sequence[float], times: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of log(time) on log(L), with the fit's R^2."""
    lx = np.log(np.asarray(lengths, dtype=np.float64))
    ly = np.log(np.asarray(times, dtype=np.float64))
    slope, icept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icept)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


def fit_power(lengths: Sequence[float], times: Sequence[float], power: float = 2.0) -> tuple[float, float]:
    """Fit ``t = c * L**power`` through the origin; returns (c, R^2)."""
    x = np.asarray(lengths, dtype=np.float64) ** power
    y = np.asarray(times, dtype=np.float64)
    c = float(x @ y / (x @ x))
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum((y - c * x) ** 2) / ss_tot if ss_tot > 0 else 1.0
    return c, float(r2)


def write_records(records: Iterable[BenchRecord], out: TextIO) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        row = list(astuple(r))
        row[5] = f"{r.wall_ms:.4f}"
        w.writerow(row)
