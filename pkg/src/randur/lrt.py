"""Exact likelihood ratio for the random duration model.

The likelihood ratio ``L_t`` is a linear function of a ``2*delta`` state
vector.  Entry ``(m, d)`` of the state collects the contribution of every
path whose current phase is state ``m`` and has lasted ``d`` samples so far.
One time step multiplies the state by ``D_k M_0``: a diagonal of per-state
likelihood factors times a constant sparse transition matrix (shift within
each block plus a rank-one "phase completed" term between the blocks).

All entry points take raw observations and remove the baseline ``mu0``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ModelError, NumericGuardError
from .model import ENUMERATION_GUARD, ModelParams, enumerate_sequences, sequence_log_probability


class InitMode(str, enum.Enum):
    """How the recursion is seeded at ``t = 1``.

    ``MODEL`` only admits paths starting in state 1 (the model's own
    assumption); ``PAPER`` also seeds the state-2 block, which lets paths
    start in state 2.
    """

    MODEL = "model"
    PAPER = "paper"

    @classmethod
    def parse(cls, value) -> "InitMode":
        if isinstance(value, cls):
            return value
        aliases = {"model-consistent": "model", "paper-literal": "paper"}
        value = aliases.get(str(value), str(value))
        try:
            return cls(value)
        except ValueError:
            raise ModelError(f"unknown init mode {value!r}") from None


def f_m(x, m: int, params: ModelParams):
    """Per-sample log likelihood ratio of state ``m`` against noise."""
    mu = params.level(m)
    return (mu * np.asarray(x) - 0.5 * mu * mu) / (params.sigma ** 2)


@dataclass(frozen=True)
class TransitionStructure:
    """Constant part of the step matrix and the readout vector."""

    m0: np.ndarray
    p_plus: np.ndarray
    delta: int

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.m0))


def lower_shift(delta: int) -> np.ndarray:
    return np.eye(delta, k=-1)


def build_structure(params: ModelParams) -> TransitionStructure:
    delta = params.delta
    e1 = np.zeros(delta)
    e1[0] = 1.0
    a0 = lower_shift(delta)
    m0 = np.block([
        [a0, np.outer(e1, params.p2.probs)],
        [np.outer(e1, params.p1.probs), a0],
    ])
    m0.setflags(write=False)
    p_plus = np.concatenate([params.p1.tail, params.p2.tail])
    p_plus.setflags(write=False)
    return TransitionStructure(m0, p_plus, delta)


@dataclass(frozen=True)
class LrtState:
    lam: np.ndarray
    log_scale: float
    t: int
    init_mode: InitMode = InitMode.MODEL


def _normalised(vec: np.ndarray, log_scale: float, t: int, mode: InitMode) -> LrtState:
    norm = vec.sum()
    if not norm > 0:
        raise NumericGuardError(f"likelihood state vanished at t={t}")
    lam = vec / norm
    lam.setflags(write=False)
    return LrtState(lam, log_scale + math.log(norm), t, mode)


def init_state(params: ModelParams, x1: float, mode=InitMode.MODEL) -> LrtState:
    mode = InitMode.parse(mode)
    y = x1 - params.mu0
    f1, f2 = float(f_m(y, 1, params)), float(f_m(y, 2, params))
    top = max(f1, f2)
    vec = np.zeros(2 * params.delta)
    vec[0] = math.exp(f1 - top)
    if mode is InitMode.PAPER:
        vec[params.delta] = math.exp(f2 - top)
    return _normalised(vec, top, 1, mode)


def step(state: LrtState, x: float, structure: TransitionStructure, params: ModelParams) -> LrtState:
    """Advance by one observation using the block-sparse form of ``M_0``."""
    if state.t < 1:
        raise ModelError("state must be initialised first")
    delta = structure.delta
    y = x - params.mu0
    f1, f2 = float(f_m(y, 1, params)), float(f_m(y, 2, params))
    top = max(f1, f2)
    a, b = math.exp(f1 - top), math.exp(f2 - top)
    lam = state.lam
    nxt = np.empty_like(lam)
    nxt[0] = a * float(lam[delta:] @ params.p2.probs)
    nxt[1:delta] = a * lam[: delta - 1]
    nxt[delta] = b * float(lam[:delta] @ params.p1.probs)
    nxt[delta + 1:] = b * lam[delta: 2 * delta - 1]
    return _normalised(nxt, state.log_scale + top, state.t + 1, state.init_mode)


def step_dense(state: LrtState, x: float, structure: TransitionStructure, params: ModelParams) -> LrtState:
    """Reference step through the explicit ``D_k M_0`` matrix product."""
    y = x - params.mu0
    f1, f2 = float(f_m(y, 1, params)), float(f_m(y, 2, params))
    top = max(f1, f2)
    diag = np.repeat([math.exp(f1 - top), math.exp(f2 - top)], structure.delta)
    a_k = np.diag(diag) @ structure.m0
    return _normalised(a_k @ state.lam, state.log_scale + top, state.t + 1, state.init_mode)


def log_likelihood_ratio(state: LrtState, structure: TransitionStructure) -> float:
    return math.log(float(structure.p_plus @ state.lam)) + state.log_scale


def run_trajectory_stepwise(params: ModelParams, x, mode=InitMode.MODEL) -> np.ndarray:
    """``log L_t`` for ``t = 1..len(x)`` through the single-state API."""
    x = np.asarray(x, dtype=float)
    structure = build_structure(params)
    state = init_state(params, x[0], mode)
    out = np.empty(x.size)
    out[0] = log_likelihood_ratio(state, structure)
    for k in range(1, x.size):
        state = step(state, x[k], structure, params)
        out[k] = log_likelihood_ratio(state, structure)
    return out


def run_batch_trajectories(params: ModelParams, x, mode=InitMode.MODEL, backend=None,
                           renorm_every: int = 1) -> np.ndarray:
    """``log L_t`` for every row of a ``(J, T)`` observation matrix."""
    mode = InitMode.parse(mode)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ModelError("observations must be a non-empty (runs x time) matrix")
    if params.mu1 == 0.0 and params.mu2 == 0.0:
        # identical hypotheses: L_t = 1 exactly, skip the rounding of the recursion
        return np.zeros_like(x)
    y = x - params.mu0 if params.mu0 != 0.0 else x
    try:
        return kernels.lrt_batch(
            y, params.mu1, params.mu2, params.sigma,
            params.p1.probs, params.p2.probs, params.p1.tail, params.p2.tail,
            paper_init=mode is InitMode.PAPER, renorm_every=renorm_every, backend=backend,
        )
    except FloatingPointError as exc:
        raise NumericGuardError(str(exc)) from exc


def run_trajectory(params: ModelParams, x, mode=InitMode.MODEL, backend=None) -> np.ndarray:
    """``log L_t`` for ``t = 1..len(x)`` of a single observation stream."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ModelError("observations must be a non-empty vector")
    return run_batch_trajectories(params, x[None, :], mode, backend)[0]


def oracle_log_lrt(params: ModelParams, x, guard: int = ENUMERATION_GUARD) -> float:
    """``log L_t`` by summing over every feasible state path (log-sum-exp)."""
    x = np.asarray(x, dtype=float)
    t = x.size
    y = x - params.mu0
    f1 = f_m(y, 1, params)
    f2 = f_m(y, 2, params)
    terms = []
    for seq in enumerate_sequences(params.delta, t, guard):
        log_p = sequence_log_probability(params, seq)
        if log_p == -math.inf:
            continue
        states = seq.states
        terms.append(log_p + float(np.where(states == 1, f1, f2).sum()))
    if not terms:
        return -math.inf
    terms = np.array(terms)
    top = terms.max()
    return float(top + math.log(np.exp(terms - top).sum()))
