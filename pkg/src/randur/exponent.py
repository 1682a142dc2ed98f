"""Error exponent of the likelihood-ratio test: estimates and lower bounds.

The Neyman-Pearson miss exponent equals ``lim -(1/t) E_0[log L_t]``, the
top Lyapunov exponent of the random matrix product that drives the
likelihood recursion.  It is estimated here by simulation and bounded from
below by a large-deviations problem over duration types.

Types are parametrised by a pair of duration distributions ``(w1, w2)``:
``nu_m = c * w_m`` with ``c = 1 / (q.w1 + q.w2)``, which maps the product of
two simplices onto the limiting type set exactly.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import seeding
from .combinatorics import entropy
from .errors import ModelError
from .model import ModelParams, TypeVector
from .montecarlo import run_batch

PAPER_FAITHFUL = "paper-faithful"
MASS_WEIGHTED = "mass-weighted"
MODES = (PAPER_FAITHFUL, MASS_WEIGHTED)
THETA_FLOOR = 1e-9
SEARCH_CHUNK = 10_000
_DETECT_RTOL = 1e-12


@dataclass(frozen=True)
class ExponentEstimate:
    zeta_hat: float
    std_error: float
    t_used: int
    n_runs: int
    per_run_values: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Detectability:
    lhs: float
    rhs: float
    undetectable: bool


@dataclass(frozen=True)
class BoundResult:
    eta_lower: float
    zeta_lower: float
    argmin_nu: Optional[TypeVector]
    argmin_xi: float
    feasible_points_evaluated: int
    mode: str
    budget: int = 0
    seed: int = 0
    shortcut: bool = False
    flagged: bool = False
    trace: List[Tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "eta_lower": self.eta_lower,
            "zeta_lower": self.zeta_lower,
            "argmin_nu": None if self.argmin_nu is None else self.argmin_nu.nu.tolist(),
            "argmin_xi": self.argmin_xi,
            "mode": self.mode,
            "budget": self.budget,
            "seed": self.seed,
            "feasible_points_evaluated": self.feasible_points_evaluated,
            "shortcut": self.shortcut,
            "flagged": self.flagged,
        }


# ---------------------------------------------------------------------------
# simulation estimate
# ---------------------------------------------------------------------------

def estimate_error_exponent(params: ModelParams, T: int, n_runs: int, seed: int,
                            threads: int = 1, keep_runs: bool = False) -> ExponentEstimate:
    """Mean of ``-(1/T) log L_T`` over ``n_runs`` H0 streams."""
    if T < 1 or n_runs < 1:
        raise ModelError("T and n_runs must be >= 1")
    batch = run_batch(params, "H0", T, n_runs, seed, threads=threads)
    values = -batch.log_lrt[:, -1] / T
    se = float(values.std(ddof=1) / math.sqrt(n_runs)) if n_runs > 1 else 0.0
    return ExponentEstimate(float(values.mean()), se, T, n_runs, values if keep_runs else None)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def guaranteed_bound(params: ModelParams) -> float:
    """Exponent guaranteed by the always-present level ``mu1``."""
    return params.mu1 ** 2 / (2 * params.sigma ** 2)


def _q(delta: int) -> np.ndarray:
    return np.arange(1, delta + 1, dtype=float)


def detectability(params: ModelParams) -> Detectability:
    """Entropy of the duration process against its long-run SNR (``mu1 = 0``).

    When the entropy side wins, the lower bound on the exponent is zero.
    """
    if params.mu1 != 0:
        raise ModelError("detectability condition needs mu1 = 0; use solve_bound for mu1 > 0")
    q = _q(params.delta)
    lhs = entropy(params.p1.probs) + entropy(params.p2.probs)
    frac2 = float(q @ params.p2.probs) / float(q @ params.p1.probs + q @ params.p2.probs)
    rhs = frac2 * params.mu2 ** 2 / (2 * params.sigma ** 2)
    return Detectability(lhs, rhs, lhs >= rhs * (1 - _DETECT_RTOL))


def critical_sigma_uniform(delta: int, mu: float) -> float:
    """Noise level at which uniform-duration processes become undetectable."""
    if int(delta) != delta or delta < 2:
        raise ModelError("critical sigma needs an integer delta >= 2 (delta = 1 is always detectable)")
    if not mu > 0:
        raise ModelError("mu must be > 0")
    return mu / (2 * math.sqrt(2 * math.log(delta)))


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

def _simplex_draws(rng: np.random.Generator, n: int, delta: int) -> np.ndarray:
    if delta == 1:
        return np.ones((n, 1))
    cuts = np.sort(rng.random((n, delta - 1)), axis=1)
    return np.diff(cuts, axis=1, prepend=0.0, append=1.0)


def sample_types(delta: int, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """``n`` shape pairs ``(w1, w2)`` drawn uniformly from the simplex."""
    w1 = _simplex_draws(rng, n, delta)
    w2 = _simplex_draws(rng, n, delta)
    return w1, w2


def type_from_shapes(w1, w2) -> TypeVector:
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    w1 = w1 / w1.sum()
    w2 = w2 / w2.sum()
    q = _q(w1.size)
    c = 1.0 / (q @ w1 + q @ w2)
    return TypeVector(np.vstack([c * w1, c * w2]))


def sample_type(delta: int, rng: np.random.Generator) -> TypeVector:
    w1, w2 = sample_types(delta, 1, rng)
    return type_from_shapes(w1[0], w2[0])


# ---------------------------------------------------------------------------
# objective
# ---------------------------------------------------------------------------

def _entropy_rows(w: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, w * np.log(w), 0.0)
    return -terms.sum(axis=1)


def _kl_rows(w: np.ndarray, p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, w * np.log(w / p), 0.0)
    return np.maximum(terms.sum(axis=1), 0.0)


def _shape_terms(w1, w2, params: ModelParams, mode: str):
    """KL sum, entropy sum and state-2 occupation for rows of shapes."""
    q = _q(params.delta)
    c = 1.0 / (w1 @ q + w2 @ q)
    theta2 = c * (w2 @ q)
    kl = _kl_rows(w1, params.p1.probs) + _kl_rows(w2, params.p2.probs)
    h = _entropy_rows(w1) + _entropy_rows(w2)
    if mode == MASS_WEIGHTED:
        kl = c * kl
        h = c * h
    elif mode != PAPER_FAITHFUL:
        raise ModelError(f"unknown bound mode {mode!r}")
    return kl, h, theta2


def _inner_xi(h, theta2, params: ModelParams):
    gap = params.mu2 - params.mu1
    return np.minimum(theta2 * gap, params.sigma * np.sqrt(2 * theta2 * h))


def _reduced_values(w1, w2, params: ModelParams, mode: str) -> np.ndarray:
    """Objective after minimising over the Gaussian coordinate in closed form.

    The quadratic term becomes ``(sqrt(R) - sqrt(H))^2`` when the entropy
    constraint binds and vanishes otherwise, with ``R`` the type's expected
    SNR gain ``theta2 * (mu2 - mu1)^2 / (2 sigma^2)``.
    """
    kl, h, theta2 = _shape_terms(w1, w2, params, mode)
    gap = params.mu2 - params.mu1
    var2 = 2 * params.sigma ** 2
    r = theta2 * gap ** 2 / var2
    quad = np.maximum(np.sqrt(r) - np.sqrt(h), 0.0) ** 2
    values = kl + quad + theta2 * params.mu1 * gap / params.sigma ** 2
    return np.where(theta2 < THETA_FLOOR, np.inf, values)


def bound_objective(nu, xi: float, params: ModelParams, mode: str = PAPER_FAITHFUL):
    """Objective and entropy-constraint feasibility at ``(nu, xi)``."""
    tv = nu if isinstance(nu, TypeVector) else TypeVector(nu)
    if tv.delta != params.delta:
        raise ModelError("type dimension does not match delta")
    if not tv.in_polytope(1e-9):
        raise ModelError("type is outside the limiting type set")
    theta2 = tv.theta2
    if theta2 < THETA_FLOOR:
        return math.inf, False
    w1 = tv.nu[0][None, :] / max(tv.nu[0].sum(), np.finfo(float).tiny)
    w2 = tv.nu[1][None, :] / tv.nu[1].sum()
    kl, h, _ = _shape_terms(w1, w2, params, mode)
    gap = params.mu2 - params.mu1
    value = (float(kl[0])
             + theta2 / (2 * params.sigma ** 2) * (xi / theta2 - gap) ** 2
             + theta2 * params.mu1 * gap / params.sigma ** 2)
    feasible = float(h[0]) >= xi ** 2 / (2 * theta2 * params.sigma ** 2)
    return value, bool(feasible)


def reduced_objective(nu, params: ModelParams, mode: str = PAPER_FAITHFUL):
    """``(value, feasible)`` of the form with the entropy cap ``H <= R``.

    Only meaningful for ``mu1 = 0``: value ``D + D + (sqrt(H) - sqrt(R))^2``,
    feasible when the type's entropy does not exceed its expected SNR.
    """
    tv = nu if isinstance(nu, TypeVector) else TypeVector(nu)
    w1 = tv.nu[0][None, :] / tv.nu[0].sum()
    w2 = tv.nu[1][None, :] / tv.nu[1].sum()
    kl, h, theta2 = _shape_terms(w1, w2, params, mode)
    r = theta2 * params.mu2 ** 2 / (2 * params.sigma ** 2)
    value = float(kl[0] + (np.sqrt(h[0]) - np.sqrt(r[0])) ** 2)
    return value, bool(h[0] <= r[0])


# ---------------------------------------------------------------------------
# solver
# ---------------------------------------------------------------------------

def _vanishing_point(params: ModelParams, mode: str):
    """The zero-cost type (``nu`` proportional to the pmfs) if it is feasible."""
    if params.mu1 != 0:
        return None
    w1 = params.p1.probs[None, :]
    w2 = params.p2.probs[None, :]
    kl, h, theta2 = _shape_terms(w1, w2, params, mode)
    r = theta2 * params.mu2 ** 2 / (2 * params.sigma ** 2)
    if mode == PAPER_FAITHFUL:
        if not detectability(params).undetectable:
            return None
    elif not h[0] >= r[0] * (1 - _DETECT_RTOL):
        return None
    return type_from_shapes(params.p1.probs, params.p2.probs), float(theta2[0] * params.mu2)


def _search_chunk(params: ModelParams, mode: str, seed: int, index: int, size: int):
    rng = seeding.generator(seed, seeding.STREAM_TYPE_SEARCH, index)
    w1, w2 = sample_types(params.delta, size, rng)
    values = _reduced_values(w1, w2, params, mode)
    finite = np.isfinite(values)
    if not finite.any():
        return math.inf, None, None, 0
    k = int(np.argmin(np.where(finite, values, np.inf)))
    return float(values[k]), w1[k], w2[k], int(finite.sum())


def _refine(w1, w2, value, params: ModelParams, mode: str, steps=(1e-3, 1e-4, 1e-5, 1e-6),
            max_sweeps: int = 2000):
    """Coordinate perturbation descent on the shape pair."""
    w = np.vstack([w1, w2]).astype(float)
    delta = params.delta
    if delta == 1:
        return w[0], w[1], value

    def evaluate(cand):
        return float(_reduced_values(cand[0][None, :], cand[1][None, :], params, mode)[0])

    for h in steps:
        for _ in range(max_sweeps):
            improved = False
            for m in range(2):
                for d in range(delta):
                    for sign in (1.0, -1.0):
                        cand = w.copy()
                        cand[m, d] = max(cand[m, d] + sign * h, 0.0)
                        cand[m] /= cand[m].sum()
                        val = evaluate(cand)
                        if val < value:
                            w, value, improved = cand, val, True
            if not improved:
                break
    return w[0], w[1], value


def solve_bound(params: ModelParams, budget: int = 100_000, mode: str = PAPER_FAITHFUL,
                refine: bool = True, seed: int = 0, threads: int = 1,
                chunk: int = SEARCH_CHUNK) -> BoundResult:
    """Random-search lower bound on the miss exponent.

    Samples ``budget`` types, evaluates each with the Gaussian coordinate
    minimised in closed form, keeps the smallest value and optionally polishes
    it by local descent.  ``mu1 = 0`` processes that fail detectability
    return zero immediately at the vanishing point.
    """
    if budget < 1:
        raise ModelError("budget must be >= 1")
    if mode not in MODES:
        raise ModelError(f"unknown bound mode {mode!r}")
    floor = guaranteed_bound(params)
    vanishing = _vanishing_point(params, mode)
    if vanishing is not None:
        nu, xi = vanishing
        return BoundResult(0.0, floor, nu, xi, 0, mode, budget, seed, shortcut=True, trace=[(0, 0.0)])

    sizes = [min(chunk, budget - lo) for lo in range(0, budget, chunk)]
    jobs = list(enumerate(sizes))

    def work(job):
        return _search_chunk(params, mode, seed, job[0], job[1])

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    best, best_w1, best_w2, evaluated, trace = math.inf, None, None, 0, []
    done = 0
    for (value, w1, w2, n_ok), size in zip(results, sizes):
        done += size
        evaluated += n_ok
        if value < best:
            best, best_w1, best_w2 = value, w1, w2
        trace.append((done, best))

    if best_w1 is None:
        return BoundResult(0.0, floor, None, math.nan, 0, mode, budget, seed, flagged=True, trace=trace)
    if refine:
        best_w1, best_w2, best = _refine(best_w1, best_w2, best, params, mode)
        trace.append((done, best))
    nu = type_from_shapes(best_w1, best_w2)
    _, h, theta2 = _shape_terms(best_w1[None, :] / best_w1.sum(), best_w2[None, :] / best_w2.sum(), params, mode)
    xi = float(_inner_xi(h, theta2, params)[0])
    eta = max(best, 0.0)
    return BoundResult(eta, eta + floor, nu, xi, evaluated, mode, budget, seed, trace=trace)
