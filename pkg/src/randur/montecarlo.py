"""Monte Carlo evaluation of the likelihood-ratio detector.

Batches of independent runs under H0 and H1 give empirical false-alarm and
miss probabilities at every horizon ``t``.  The Neyman-Pearson operating
point at false-alarm budget ``alpha`` is taken from the exact order
statistic of the H0 values, so no threshold grid is involved.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from . import seeding
from .errors import ModelError
from .lrt import InitMode, run_batch_trajectories
from .model import Hypothesis, ModelParams, sample_state_path

CHUNK_ROWS = 512


@dataclass(frozen=True)
class BatchResult:
    hypothesis: Hypothesis
    log_lrt: np.ndarray
    master_seed: int
    params: ModelParams

    @property
    def n_runs(self) -> int:
        return self.log_lrt.shape[0]

    @property
    def horizon(self) -> int:
        return self.log_lrt.shape[1]


@dataclass(frozen=True)
class RocPoint:
    t: int
    gamma_log: float
    p_fa: float
    p_miss: float


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    t_max: int
    window: str
    n_points: int
    stderr: float = math.nan

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "window": self.window,
                "t_max": self.t_max, "n_points": self.n_points, "stderr": self.stderr}


def simulate_run(params: ModelParams, hypothesis, horizon: int, master_seed: int, index: int) -> np.ndarray:
    """Observations of run ``index``; a pure function of its arguments.

    Under H1 the run's stream first supplies the phase durations, then the
    noise.
    """
    hypothesis = Hypothesis.parse(hypothesis)
    rng = seeding.generator(master_seed, int(hypothesis), index)
    if hypothesis is Hypothesis.H1:
        states = sample_state_path(params, horizon, rng)
        levels = np.where(states == 1, params.mu1, params.mu2)
    else:
        levels = 0.0
    return params.mu0 + levels + params.sigma * rng.standard_normal(horizon)


def simulate_rows(params: ModelParams, hypothesis, horizon: int, master_seed: int,
                  start: int, stop: int) -> np.ndarray:
    out = np.empty((stop - start, horizon))
    for row, index in enumerate(range(start, stop)):
        out[row] = simulate_run(params, hypothesis, horizon, master_seed, index)
    return out


def _chunks(n: int, size: int):
    return [(lo, min(lo + size, n)) for lo in range(0, n, size)]


def run_batch(params: ModelParams, hypothesis, T: int, J: int, master_seed: int,
              threads: int = 1, mode=InitMode.MODEL, backend=None) -> BatchResult:
    """``J`` independent trajectories of ``log L_t``, ``t = 1..T``."""
    if T < 1 or J < 1:
        raise ModelError("T and J must be >= 1")
    hypothesis = Hypothesis.parse(hypothesis)
    out = np.empty((J, T))

    def work(bounds):
        lo, hi = bounds
        x = simulate_rows(params, hypothesis, T, master_seed, lo, hi)
        out[lo:hi] = run_batch_trajectories(params, x, mode, backend)

    bounds = _chunks(J, CHUNK_ROWS)
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, bounds))
    else:
        for b in bounds:
            work(b)
    out.setflags(write=False)
    return BatchResult(hypothesis, out, int(master_seed), params)


def _values(batch, t: Optional[int] = None) -> np.ndarray:
    arr = batch.log_lrt if isinstance(batch, BatchResult) else np.asarray(batch)
    if t is None:
        return arr
    if not 1 <= t <= arr.shape[1]:
        raise ModelError(f"t={t} outside the simulated horizon 1..{arr.shape[1]}")
    return arr[:, t - 1]


def roc_curve(batch0, batch1, t: int, n_thresholds: int = 200, beta: float = 1.0,
              thresholds: Optional[Sequence[float]] = None) -> List[RocPoint]:
    """Empirical ROC at horizon ``t`` on a log-threshold grid.

    The grid spans all observed values with a margin ``beta`` on each side.
    An alarm is raised when ``log L_t >= gamma``.
    """
    v0 = np.sort(_values(batch0, t))
    v1 = np.sort(_values(batch1, t))
    if thresholds is None:
        lo = min(v0[0], v1[0]) - beta
        hi = max(v0[-1], v1[-1]) + beta
        thresholds = np.linspace(lo, hi, n_thresholds)
    thresholds = np.asarray(thresholds, dtype=float)
    p_fa = (v0.size - np.searchsorted(v0, thresholds, side="left")) / v0.size
    p_miss = np.searchsorted(v1, thresholds, side="left") / v1.size
    return [RocPoint(t, float(g), float(a), float(b)) for g, a, b in zip(thresholds, p_fa, p_miss)]


def _allowed_alarms(alpha: float, n: int) -> int:
    if not 0 < alpha <= 1:
        raise ModelError("alpha must lie in (0, 1]")
    return min(n, int(math.floor(alpha * n + 1e-9)))


def _np_thresholds(v0: np.ndarray, alpha: float) -> np.ndarray:
    """Largest-miss thresholds meeting the false-alarm budget, per column.

    Returns the order statistic ``v`` such that alarming on ``log L > v``
    (equivalently ``>= nextafter(v)``) keeps at most ``floor(alpha J)``
    H0 alarms.  With ``alpha = 1`` every run may alarm and the column
    minimum is returned.
    """
    n = v0.shape[0]
    m = _allowed_alarms(alpha, n)
    if m >= n:
        return v0.min(axis=0)
    k = n - m - 1
    return np.partition(v0, k, axis=0)[k]


def p_miss_at_alpha(batch0, batch1, t: int, alpha: float):
    """``(p_miss, gamma_star)`` of the best test with ``P_fa <= alpha`` at ``t``."""
    v0 = _values(batch0, t)
    v1 = _values(batch1, t)
    v = float(_np_thresholds(v0[:, None], alpha)[0])
    if _allowed_alarms(alpha, v0.size) >= v0.size:
        gamma = v
    else:
        gamma = float(np.nextafter(v, np.inf))
    return float(np.mean(v1 < gamma)), gamma


def alarm_thresholds(batch0, alpha: float) -> np.ndarray:
    """Per-``t`` log-thresholds ``gamma_star`` calibrated on H0 runs."""
    v0 = _values(batch0)
    v = _np_thresholds(v0, alpha)
    if _allowed_alarms(alpha, v0.shape[0]) >= v0.shape[0]:
        return v
    return np.nextafter(v, np.inf)


def p_miss_series(batch0, batch1, alpha: float):
    """``p_miss`` and ``gamma_star`` for every ``t`` in the shared horizon."""
    v1 = _values(batch1)
    if _values(batch0).shape[1] != v1.shape[1]:
        raise ModelError("batches must share the horizon")
    gamma = alarm_thresholds(batch0, alpha)
    return (v1 < gamma).mean(axis=0), gamma


def fit_slope(p_miss, window: Union[str, float] = "full", t_values=None) -> SlopeFit:
    """Least-squares slope of ``-log p_miss`` against ``t``.

    Only horizons with ``p_miss > 0`` enter the fit.  ``window`` is ``"full"``
    or a fraction ``f``, which keeps ``t`` in ``[f * t_max, t_max]``.
    """
    p = np.asarray(p_miss, dtype=float)
    t = np.arange(1, p.size + 1) if t_values is None else np.asarray(t_values, dtype=float)
    usable = p > 0
    if usable.sum() < 2:
        raise ModelError("need at least two non-zero miss probabilities to fit a slope")
    t_max = int(t[usable].max())
    if window == "full":
        label = "full"
    else:
        frac = float(window)
        if not 0 <= frac < 1:
            raise ModelError("tail fraction must lie in [0, 1)")
        usable &= t >= frac * t_max
        label = f"tail:{frac:g}"
        if usable.sum() < 2:
            raise ModelError("tail window holds fewer than two usable points")
    tt, yy = t[usable], -np.log(p[usable])
    coeffs, cov = np.polyfit(tt, yy, 1, cov=True) if tt.size > 2 else (np.polyfit(tt, yy, 1), None)
    stderr = float(math.sqrt(cov[0, 0])) if cov is not None else math.nan
    return SlopeFit(float(coeffs[0]), float(coeffs[1]), t_max, label, int(tt.size), stderr)


def bootstrap(batch0, batch1, statistic: Callable[[np.ndarray, np.ndarray], float],
              n_boot: int = 100, seed: int = 0) -> np.ndarray:
    """Statistic recomputed on run-resampled batches.

    Resampling is over whole runs (rows), so correlations across ``t``
    within a run are preserved.  Replicates whose statistic is undefined are
    returned as ``nan``.
    """
    out = np.empty(n_boot)
    for b, (a0, a1) in enumerate(_resamples(batch0, batch1, n_boot, seed)):
        try:
            out[b] = statistic(a0, a1)
        except ModelError:
            out[b] = math.nan
    return out


def _safe_slope(p, window) -> float:
    try:
        return fit_slope(p, window).slope
    except ModelError:
        return math.nan


def bootstrap_slopes(batch0, batch1, alpha: float, windows=("full",), n_boot: int = 100,
                     seed: int = 0) -> dict:
    """``{window: (fit or None, stderr)}`` sharing one set of run resamples."""
    p, _ = p_miss_series(batch0, batch1, alpha)
    fits = {}
    for w in windows:
        try:
            fits[w] = fit_slope(p, w)
        except ModelError:
            fits[w] = None

    def stat(a, b):
        q, _ = p_miss_series(a, b, alpha)
        return [_safe_slope(q, w) for w in windows]

    reps = np.array([stat(*r) for r in _resamples(batch0, batch1, n_boot, seed)]).reshape(n_boot, len(windows))
    out = {}
    for k, w in enumerate(windows):
        col = reps[:, k][np.isfinite(reps[:, k])]
        out[w] = (fits[w], float(col.std(ddof=1)) if col.size > 1 else math.nan)
    return out


def _resamples(batch0, batch1, n_boot: int, seed: int):
    v0 = _values(batch0)
    v1 = _values(batch1)
    for b in range(n_boot):
        rng = seeding.generator(seed, seeding.STREAM_BOOTSTRAP, b)
        yield (v0[rng.integers(0, v0.shape[0], v0.shape[0])],
               v1[rng.integers(0, v1.shape[0], v1.shape[0])])


def slope_with_error(batch0, batch1, alpha: float, window: Union[str, float] = "full",
                     n_boot: int = 100, seed: int = 0):
    """Slope fit plus its run-bootstrap standard error."""
    fit, se = bootstrap_slopes(batch0, batch1, alpha, (window,), n_boot, seed)[window]
    if fit is None:
        p, _ = p_miss_series(batch0, batch1, alpha)
        fit_slope(p, window)  # raises with the reason
    return fit, se


def exponent_curve(batch0):
    """Mean and standard error of ``-(1/t) log L_t`` across H0 runs, per ``t``."""
    v = _values(batch0)
    scaled = -v / np.arange(1, v.shape[1] + 1)
    se = scaled.std(axis=0, ddof=1) / math.sqrt(v.shape[0]) if v.shape[0] > 1 else np.zeros(v.shape[1])
    return scaled.mean(axis=0), se
