"""End-to-end experiment pipelines behind ``randur reproduce`` and ``randur ingest``."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import seeding
from .config import ExperimentConfig, parse_config
from .errors import ModelError
from .exponent import detectability, guaranteed_bound, solve_bound
from .io import metadata, write_csv, write_json
from .lrt import run_trajectory
from .model import ModelParams
from .montecarlo import (alarm_thresholds, bootstrap_slopes, exponent_curve,
                         p_miss_series, run_batch)

TAIL_FRACTION = 0.8


@dataclass
class SweepPoint:
    sigma: float
    seed: int
    p_miss: np.ndarray
    gamma: np.ndarray
    zeta_curve: np.ndarray
    zeta_se: np.ndarray
    slopes: Dict
    lb: float
    ub: float
    eta_lower: float


def sweep_seed(master_seed: int, index: int) -> int:
    return seeding.derived_seed(master_seed, seeding.STREAM_SWEEP, index)


def run_sigma(cfg: ExperimentConfig, sigma: float, index: int, bound: bool = False) -> SweepPoint:
    """H0/H1 batches, miss series and slopes for one noise level."""
    params = cfg.params.replace(sigma=sigma)
    seed = sweep_seed(cfg.seed, index)
    b0 = run_batch(params, "H0", cfg.T, cfg.n_runs, seed, cfg.threads, cfg.init_mode)
    b1 = run_batch(params, "H1", cfg.T, cfg.n_runs, seed, cfg.threads, cfg.init_mode)
    p_miss, gamma = p_miss_series(b0, b1, cfg.alpha)
    zeta, zeta_se = exponent_curve(b0)
    slopes = bootstrap_slopes(b0, b1, cfg.alpha, ("full", TAIL_FRACTION), cfg.n_boot, seed)
    eta = math.nan
    if bound:
        eta = solve_bound(params, cfg.budget, cfg.bound_mode, cfg.refine, cfg.seed, cfg.threads).eta_lower
    return SweepPoint(sigma, seed, p_miss, gamma, zeta, zeta_se, slopes,
                      guaranteed_bound(params), params.mu2 ** 2 / (2 * sigma ** 2), eta)


def _slope_cells(point: SweepPoint, window):
    fit, se = point.slopes[window]
    if fit is None:
        return [math.nan, se, 0]
    return [fit.slope, se, fit.t_max]


def _tail_mean(values: np.ndarray, t_lo: int) -> float:
    return float(np.mean(values[t_lo - 1:]))


def _write_sweep(cfg: ExperimentConfig, points: List[SweepPoint], out: Path, meta: dict) -> List[Path]:
    pm_rows = []
    for pt in points:
        for t in range(1, cfg.T + 1):
            pm_rows.append([pt.sigma, t, pt.p_miss[t - 1], pt.gamma[t - 1]])
    slope_rows = []
    for pt in points:
        full = _slope_cells(pt, "full")
        tail = _slope_cells(pt, TAIL_FRACTION)
        slope_rows.append([pt.sigma, full[0], full[1], tail[0], tail[1], full[2],
                           pt.lb, pt.ub, pt.eta_lower, pt.zeta_curve[-1], pt.zeta_se[-1]])
    return [
        write_csv(out / "pmiss.csv", ["sigma", "t", "p_miss", "gamma_star_log"], pm_rows, meta),
        write_csv(out / "slopes.csv",
                  ["sigma", "slope", "slope_se", "slope_tail", "slope_tail_se", "t_max",
                   "lb", "ub", "eta_lower", "zeta_hat", "zeta_se"], slope_rows, meta),
    ]


def _sandwich(points: List[SweepPoint]) -> List[dict]:
    rows = []
    for pt in points:
        fit, se = pt.slopes["full"]
        slope = math.nan if fit is None else fit.slope
        rows.append({"sigma": pt.sigma, "slope": slope, "slope_se": se, "lb": pt.lb, "ub": pt.ub,
                     "inside": bool(pt.lb - 2 * se <= slope <= pt.ub + 2 * se),
                     "excess_over_lb": slope - pt.lb})
    return rows


def _fig1_summary(cfg: ExperimentConfig, pt: SweepPoint) -> dict:
    t_lo = int(math.ceil(TAIL_FRACTION * cfg.T))
    t = np.arange(1, cfg.T + 1)
    with np.errstate(divide="ignore"):
        miss_rate = -np.log(pt.p_miss) / t
    return {
        "zeta_hat": float(pt.zeta_curve[-1]), "zeta_se": float(pt.zeta_se[-1]),
        "tail_window": [t_lo, cfg.T],
        "tail_mean_neg_log_lrt_over_t": _tail_mean(pt.zeta_curve, t_lo),
        "tail_mean_neg_log_pmiss_over_t": _tail_mean(miss_rate, t_lo),
    }


def _dishwasher_summary(cfg: ExperimentConfig, points: List[SweepPoint]) -> List[dict]:
    rows = []
    for pt in points:
        zero = np.flatnonzero(pt.p_miss == 0)
        rows.append({"sigma": pt.sigma,
                     "first_t_pmiss_zero": int(zero[0]) + 1 if zero.size else None,
                     "p_miss_at_t10": float(pt.p_miss[min(9, cfg.T - 1)])})
    return rows


def reproduce(preset: str, scale_factor: float = 0.1, out_dir=None, threads: int = 1,
              seed: Optional[int] = None, overrides=(), config: Optional[ExperimentConfig] = None) -> List[Path]:
    """Run one preset end to end and write its CSV/JSON files.

    ``scale_factor`` multiplies the full-size run count.  Nothing is read
    from the network or from external datasets.
    """
    if config is None:
        extra = [f"run.scale={scale_factor}", f"run.threads={threads}"]
        if seed is not None:
            extra.append(f"run.seed={seed}")
        config = parse_config(None, list(overrides) + extra, preset=preset)
    cfg = config
    out = Path(out_dir) if out_dir is not None else cfg.output_dir / cfg.preset
    meta = metadata(cfg, n_runs=cfg.n_runs, T=cfg.T)
    with_bound = cfg.preset in ("fig1", "fig_mu1zero")
    points = [run_sigma(cfg, s, i, bound=with_bound) for i, s in enumerate(cfg.sigmas())]
    files = _write_sweep(cfg, points, out, meta)

    summary = {"preset": cfg.preset, "sandwich": _sandwich(points)}
    if cfg.preset == "fig1":
        summary["convergence"] = _fig1_summary(cfg, points[0])
        summary["zeta_lower"] = points[0].eta_lower + points[0].lb
        pt = points[0]
        t = np.arange(1, cfg.T + 1)
        with np.errstate(divide="ignore"):
            rate = -np.log(pt.p_miss) / t
        files.append(write_csv(out / "convergence.csv",
                               ["t", "neg_log_pmiss_over_t", "neg_log_lrt_over_t", "neg_log_lrt_se"],
                               zip(t, rate, pt.zeta_curve, pt.zeta_se), meta))
    if cfg.preset == "fig_mu1zero":
        rows = []
        for pt in points:
            d = detectability(cfg.params.replace(sigma=pt.sigma))
            fit, se = pt.slopes[TAIL_FRACTION]
            rows.append({"sigma": pt.sigma, "eta_lower": pt.eta_lower,
                         "slope_tail": None if fit is None else fit.slope, "slope_tail_se": se,
                         "zeta_hat": float(pt.zeta_curve[-1]),
                         "entropy": d.lhs, "long_run_snr": d.rhs, "undetectable": d.undetectable})
        summary["tightness"] = rows
    if cfg.preset == "fig_dishwasher":
        summary["detection_delay"] = _dishwasher_summary(cfg, points)
    files.append(write_json(out / "summary.json", summary, meta))
    return files


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IngestReport:
    log_lrt: np.ndarray
    gamma: np.ndarray
    alarms: np.ndarray
    first_crossing: Optional[int]
    decision_at_end: bool
    n_calibration: int

    def to_dict(self) -> dict:
        return {"T": int(self.log_lrt.size), "first_crossing": self.first_crossing,
                "decision_at_end": self.decision_at_end, "final_log_lrt": float(self.log_lrt[-1]),
                "final_gamma_log": float(self.gamma[-1]), "n_calibration": self.n_calibration}


def calibrate(params: ModelParams, T: int, alpha: float, n_calibration: int, seed: int,
              threads: int = 1, mode="model") -> np.ndarray:
    """Per-``t`` log-thresholds from synthetic H0 runs."""
    master = seeding.derived_seed(seed, seeding.STREAM_CALIBRATION, 0)
    b0 = run_batch(params, "H0", T, n_calibration, master, threads, mode)
    return alarm_thresholds(b0, alpha)


def ingest_trace(x, params: ModelParams, alpha: float, n_calibration: int = 10_000, seed: int = 0,
                 threads: int = 1, mode="model", gamma: Optional[np.ndarray] = None) -> IngestReport:
    """Score a raw trace (baseline ``mu0`` included) against calibrated thresholds.

    ``decision_at_end`` is the fixed-horizon test at the last sample, whose
    false-alarm rate is ``alpha``.  ``first_crossing`` scans all ``t`` and so
    alarms more often under H0.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ModelError("trace must be a non-empty vector")
    if gamma is None:
        gamma = calibrate(params, x.size, alpha, n_calibration, seed, threads, mode)
    log_lrt = run_trajectory(params, x, mode)
    alarms = log_lrt >= gamma
    hits = np.flatnonzero(alarms)
    first = int(hits[0]) + 1 if hits.size else None
    return IngestReport(log_lrt, gamma, alarms, first, bool(alarms[-1]), n_calibration)
