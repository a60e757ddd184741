"""
Posterior summaries, MCMC diagnostics and run timing.

Contains:
- integrated_autocorrelation_time / effective_sample_size: FFT autocorrelations
  truncated by Geyer's initial monotone sequence
- running_means, summarize_trace: per-parameter tables
- Stopwatch: wall and process CPU time of a block
"""

import math
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
import psutil


def integrated_autocorrelation_time(values: np.ndarray) -> float:
    """tau = 1 + 2 sum rho_k over the initial monotone positive pair sequence."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 4:
        return 1.0
    centered = values - values.mean()
    if centered.var() < 1e-300:
        return math.inf
    size = 2 ** math.ceil(math.log2(2 * n))
    spectrum = np.abs(np.fft.rfft(centered, size)) ** 2
    acov = np.fft.irfft(spectrum, size)[:n]
    rhos = acov / acov[0]

    pairs = (n - 1) // 2
    rho_sum = 0.0
    previous = rhos[0] + rhos[1]
    for p in range(1, pairs):
        current = rhos[2 * p] + rhos[2 * p + 1]
        if current < 0:
            break
        current = min(current, previous)
        rho_sum += current
        previous = current
    tau = -1.0 + 2.0 * (rhos[0] + rhos[1] + rho_sum)
    # antithetic chains can push tau toward zero; cap ESS at n log10(n)
    return max(tau, 1.0 / math.log10(n))


def effective_sample_size(values: np.ndarray) -> float:
    tau = integrated_autocorrelation_time(values)
    return float(len(values) / tau) if math.isfinite(tau) else 0.0


def running_means(trace: np.ndarray) -> np.ndarray:
    """Cumulative mean of each column."""
    trace = np.asarray(trace, dtype=float)
    if trace.shape[0] == 0:
        return trace.copy()
    counts = np.arange(1, trace.shape[0] + 1)[:, None]
    return np.cumsum(trace, axis=0) / counts


def summarize_trace(names: Sequence[str], trace: np.ndarray, level: float = 0.95) -> pd.DataFrame:
    """Mean, std, central interval and ESS per parameter."""
    trace = np.asarray(trace, dtype=float)
    tail = 0.5 * (1.0 - level)
    rows = []
    for k, name in enumerate(names):
        column = trace[:, k]
        if column.size == 0:
            rows.append((name, np.nan, np.nan, np.nan, np.nan, 0.0))
            continue
        rows.append((
            name,
            float(column.mean()),
            float(column.std(ddof=1)) if column.size > 1 else 0.0,
            float(np.quantile(column, tail)),
            float(np.quantile(column, 1.0 - tail)),
            effective_sample_size(column),
        ))
    return pd.DataFrame(rows, columns=["parameter", "mean", "std", "lower", "upper", "ess"])


@dataclass
class Stopwatch:
    """
    Context manager recording wall time (perf_counter) and process CPU time (psutil).

    Usage:
        with Stopwatch() as watch:
            run()
        watch.seconds, watch.cpu_seconds
    """

    seconds: float = 0.0
    cpu_seconds: float = 0.0

    def __enter__(self) -> "Stopwatch":
        self._process = psutil.Process()
        times = self._process.cpu_times()
        self._cpu0 = times.user + times.system
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, *exc) -> None:
        self.seconds = time.perf_counter() - self._t0
        times = self._process.cpu_times()
        self.cpu_seconds = times.user + times.system - self._cpu0
