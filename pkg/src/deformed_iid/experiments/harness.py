"""Seeded, order-independent Monte Carlo trial runner."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.stats import norm

from ..ensembles import trial_seed


@dataclass(frozen=True)
class TrialReport:
    trial_index: int
    seed: int
    model: str
    observable: str
    payload: Any
    runtime: float

    def __post_init__(self):
        if not _finite(self.payload):
            raise ValueError(f"trial {self.trial_index}: non-finite payload for {self.observable}")


def _finite(x) -> bool:
    if isinstance(x, dict):
        return all(_finite(v) for v in x.values())
    if isinstance(x, (list, tuple)):
        return all(_finite(v) for v in x)
    if isinstance(x, (bool, str, type(None))):
        return True
    arr = np.asarray(x)
    if arr.dtype.kind in "fc":
        return bool(np.all(np.isfinite(arr)))
    return True


def _run_one(task, base_seed, idx, model, observable):
    seed = trial_seed(base_seed, idx)
    t0 = time.perf_counter()
    payload = task(seed, idx)
    return TrialReport(idx, seed, model, observable, payload, time.perf_counter() - t0)


def run_trials(task: Callable[[int, int], Any], trials: int, base_seed: int, workers: int = 1,
               model: str = "", observable: str = "") -> list[TrialReport]:
    """Run ``task(seed, index)`` for ``index < trials``; results are sorted by index.

    Seeds depend only on ``(base_seed, index)``, so the output does not depend
    on ``workers``.  With ``workers > 1`` the task must be picklable.
    """
    if trials <= 0:
        raise ValueError("need at least one trial")
    if workers <= 1:
        return [_run_one(task, base_seed, i, model, observable) for i in range(trials)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futs = [ex.submit(_run_one, task, base_seed, i, model, observable) for i in range(trials)]
        out = [f.result() for f in futs]
    return sorted(out, key=lambda r: r.trial_index)


def mean_se(x, axis=0):
    """Sample mean and its standard error."""
    x = np.asarray(x, dtype=float)
    n = x.shape[axis]
    m = x.mean(axis=axis)
    se = x.std(axis=axis, ddof=1) / np.sqrt(n) if n > 1 else np.full_like(m, np.inf)
    return m, se


def wilson_interval(k: int, n: int, level: float = 0.95):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    zq = norm.ppf(0.5 + level / 2)
    p = k / n
    den = 1 + zq ** 2 / n
    mid = (p + zq ** 2 / (2 * n)) / den
    half = zq * np.sqrt(p * (1 - p) / n + zq ** 2 / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, float(mid - half))
    hi = 1.0 if k == n else min(1.0, float(mid + half))
    return lo, hi
