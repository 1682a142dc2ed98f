"""Two-state random duration signal model.

A hidden state path alternates between state 1 and state 2, starting in
state 1.  Each phase (maximal run of one state) lasts a random number of
samples drawn i.i.d. from a per-state pmf on ``{1, ..., delta}``.  Under H1
the observations are Gaussian around the level of the current state; under
H0 they are pure noise.  Both may carry a common baseline offset ``mu0``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from .combinatorics import count_sequences
from .errors import ModelError, NumericGuardError

ENUMERATION_GUARD = 10**7
_SUM_TOL = 1e-12


class Hypothesis(enum.IntEnum):
    H0 = 0
    H1 = 1

    @classmethod
    def parse(cls, value) -> "Hypothesis":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ModelError(f"unknown hypothesis {value!r}") from None
        return cls(int(value))


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DurationPmf:
    """Distribution of phase durations on ``{1, ..., delta}``.

    ``probs[d - 1]`` is the probability that a phase lasts exactly ``d``
    samples.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen_array(self.probs)
        if p.ndim != 1 or p.size == 0:
            raise ModelError("duration pmf must be a non-empty vector")
        if np.any(~np.isfinite(p)) or np.any(p < 0):
            raise ModelError("duration pmf entries must be finite and >= 0")
        if abs(p.sum() - 1.0) > _SUM_TOL:
            raise ModelError(f"duration pmf sums to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, delta: int) -> "DurationPmf":
        if delta < 1:
            raise ModelError("delta must be >= 1")
        return cls(np.full(delta, 1.0 / delta))

    @property
    def delta(self) -> int:
        return self.probs.size

    @property
    def tail(self) -> np.ndarray:
        """Tail sums ``p^+_d = p_d + ... + p_delta`` (probability D >= d)."""
        return self.probs[::-1].cumsum()[::-1]

    @property
    def cdf(self) -> np.ndarray:
        return self.probs.cumsum()

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.probs > 0))

    @property
    def mean(self) -> float:
        """Expected duration ``q^T p``."""
        return float(np.dot(np.arange(1, self.delta + 1), self.probs))

    def __eq__(self, other):
        return isinstance(other, DurationPmf) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class ModelParams:
    """A full problem instance.

    ``mu0`` is a baseline offset shared by both hypotheses; the detector
    removes it before evaluating the likelihood ratio.
    """

    delta: int
    p1: DurationPmf
    p2: DurationPmf
    mu1: float
    mu2: float
    sigma: float
    mu0: float = 0.0

    def __post_init__(self):
        if int(self.delta) != self.delta or self.delta < 1:
            raise ModelError(f"delta must be a positive integer, got {self.delta!r}")
        object.__setattr__(self, "delta", int(self.delta))
        for name in ("p1", "p2"):
            pmf = getattr(self, name)
            if not isinstance(pmf, DurationPmf):
                pmf = DurationPmf(pmf)
                object.__setattr__(self, name, pmf)
            if pmf.delta != self.delta:
                raise ModelError(f"{name} has length {pmf.delta}, expected delta={self.delta}")
        for name in ("mu1", "mu2", "sigma", "mu0"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ModelError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if not self.sigma > 0:
            raise ModelError("sigma must be > 0")
        # Equal levels are admitted: they are the degenerate test cases.
        if not self.mu2 >= self.mu1 >= 0:
            raise ModelError("levels must satisfy mu2 >= mu1 >= 0")

    @classmethod
    def uniform(cls, delta: int, mu1: float, mu2: float, sigma: float, mu0: float = 0.0) -> "ModelParams":
        pmf = DurationPmf.uniform(delta)
        return cls(delta, pmf, pmf, mu1, mu2, sigma, mu0)

    def replace(self, **changes) -> "ModelParams":
        fields_ = dict(delta=self.delta, p1=self.p1, p2=self.p2, mu1=self.mu1,
                       mu2=self.mu2, sigma=self.sigma, mu0=self.mu0)
        fields_.update(changes)
        return ModelParams(**fields_)

    @property
    def p_min(self) -> float:
        return float(min(self.p1.probs.min(), self.p2.probs.min()))

    def pmf(self, state: int) -> DurationPmf:
        if state == 1:
            return self.p1
        if state == 2:
            return self.p2
        raise ModelError(f"state must be 1 or 2, got {state!r}")

    def level(self, state: int) -> float:
        return self.mu1 if state == 1 else self.mu2

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "p1": [float(v) for v in self.p1.probs],
            "p2": [float(v) for v in self.p2.probs],
            "mu1": self.mu1,
            "mu2": self.mu2,
            "sigma": self.sigma,
            "mu0": self.mu0,
        }


@dataclass(frozen=True)
class PhaseSequence:
    """A realised state path stored phase by phase.

    ``censored`` is true when the final phase was cut off by the observation
    horizon, i.e. its true duration exceeds the stored one.
    """

    phases: Tuple[Tuple[int, int], ...]
    censored: bool = False

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple((int(s), int(d)) for s, d in self.phases))

    @property
    def total_length(self) -> int:
        return sum(d for _, d in self.phases)

    @property
    def states(self) -> np.ndarray:
        """Per-sample states ``s_1 .. s_t``."""
        if not self.phases:
            return np.zeros(0, dtype=np.int8)
        st, du = zip(*self.phases)
        return np.repeat(np.array(st, dtype=np.int8), du)

    def validate(self, delta: int) -> None:
        if not self.phases:
            raise ModelError("empty phase sequence")
        for i, (state, duration) in enumerate(self.phases):
            expected = 1 if i % 2 == 0 else 2
            if state != expected:
                raise ModelError(f"phase {i} has state {state}; states must alternate starting from 1")
            if not 1 <= duration <= delta:
                raise ModelError(f"phase {i} has duration {duration} outside [1, {delta}]")

    @classmethod
    def from_states(cls, states: Sequence[int], censored: bool = False) -> "PhaseSequence":
        """Split a per-sample state path into maximal runs."""
        states = np.asarray(states)
        if states.size == 0:
            raise ModelError("empty state path")
        change = np.flatnonzero(np.diff(states)) + 1
        starts = np.concatenate(([0], change))
        ends = np.concatenate((change, [states.size]))
        return cls(tuple(zip(states[starts].tolist(), (ends - starts).tolist())), censored)

    def to_csv_rows(self) -> list:
        last = len(self.phases) - 1
        return [(i, s, d, int(self.censored and i == last)) for i, (s, d) in enumerate(self.phases)]


@dataclass(frozen=True)
class SequenceStats:
    n_md: np.ndarray
    tau1: int
    tau2: int
    n1: int
    n2: int
    last_state: int
    last_duration: int

    @property
    def t(self) -> int:
        return self.tau1 + self.tau2


@dataclass(frozen=True)
class TypeVector:
    """Per-duration phase fractions ``nu[m - 1, d - 1] = N_md / t``."""

    nu: np.ndarray

    def __post_init__(self):
        nu = _frozen_array(self.nu)
        if nu.ndim != 2 or nu.shape[0] != 2:
            raise ModelError("type vector must be a 2 x delta matrix")
        if np.any(nu < 0):
            raise ModelError("type vector entries must be >= 0")
        object.__setattr__(self, "nu", nu)

    @property
    def delta(self) -> int:
        return self.nu.shape[1]

    @property
    def q(self) -> np.ndarray:
        return np.arange(1, self.delta + 1, dtype=float)

    @property
    def theta1(self) -> float:
        return float(self.q @ self.nu[0])

    @property
    def theta2(self) -> float:
        return float(self.q @ self.nu[1])

    @property
    def masses(self) -> Tuple[float, float]:
        return float(self.nu[0].sum()), float(self.nu[1].sum())

    def in_polytope(self, tol: float = 1e-12) -> bool:
        """Membership in the limiting type set (equal masses, unit time)."""
        m1, m2 = self.masses
        return abs(m1 - m2) <= tol and abs(self.theta1 + self.theta2 - 1.0) <= tol


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _draw_phases(params: ModelParams, t: int, rng: np.random.Generator):
    """Inverse-CDF duration draws for up to ``t`` phases.

    Always consumes exactly ``t`` uniforms so the stream position after the
    call does not depend on the realised path.
    """
    if t < 1:
        raise ModelError("t must be >= 1")
    u = rng.random(t)
    last = params.delta - 1
    d1 = np.minimum(np.searchsorted(params.p1.cdf, u[0::2], side="right"), last) + 1
    d2 = np.minimum(np.searchsorted(params.p2.cdf, u[1::2], side="right"), last) + 1
    durations = np.empty(t, dtype=np.int64)
    durations[0::2] = d1
    durations[1::2] = d2
    ends = durations.cumsum()
    n_phases = int(np.searchsorted(ends, t, side="left")) + 1
    durations = durations[:n_phases]
    censored = bool(ends[n_phases - 1] > t)
    durations[-1] -= ends[n_phases - 1] - t
    return durations, censored


def sample_phase_sequence(params: ModelParams, t: int, rng: np.random.Generator) -> PhaseSequence:
    durations, censored = _draw_phases(params, t, rng)
    states = [1 if i % 2 == 0 else 2 for i in range(durations.size)]
    return PhaseSequence(tuple(zip(states, durations.tolist())), censored)


def sample_state_path(params: ModelParams, t: int, rng: np.random.Generator) -> np.ndarray:
    """Per-sample states (int8 array of 1s and 2s) for one path of length ``t``."""
    durations, _ = _draw_phases(params, t, rng)
    states = np.ones(durations.size, dtype=np.int8)
    states[1::2] = 2
    return np.repeat(states, durations)


def sample_observations(
    params: ModelParams, hypothesis, t: int, rng: np.random.Generator
) -> Tuple[np.ndarray, Optional[PhaseSequence]]:
    """Draw ``t`` observations under the given hypothesis.

    Under H1 the phase path is drawn first, then the noise; the path is
    returned alongside the observations.
    """
    hypothesis = Hypothesis.parse(hypothesis)
    if t < 1:
        raise ModelError("t must be >= 1")
    if hypothesis is Hypothesis.H0:
        return params.mu0 + params.sigma * rng.standard_normal(t), None
    truth = sample_phase_sequence(params, t, rng)
    levels = np.where(truth.states == 1, params.mu1, params.mu2)
    x = params.mu0 + levels + params.sigma * rng.standard_normal(t)
    return x, truth


# ---------------------------------------------------------------------------
# sequence statistics and probabilities
# ---------------------------------------------------------------------------

def compute_stats(seq: PhaseSequence, delta: Optional[int] = None) -> SequenceStats:
    if delta is None:
        delta = max(d for _, d in seq.phases)
    seq.validate(delta)
    n_md = np.zeros((2, delta), dtype=np.int64)
    for state, duration in seq.phases:
        n_md[state - 1, duration - 1] += 1
    q = np.arange(1, delta + 1)
    last_state, last_duration = seq.phases[-1]
    n_md.setflags(write=False)
    return SequenceStats(
        n_md=n_md,
        tau1=int(q @ n_md[0]),
        tau2=int(q @ n_md[1]),
        n1=int(n_md[0].sum()),
        n2=int(n_md[1].sum()),
        last_state=last_state,
        last_duration=last_duration,
    )


def sequence_type(seq: PhaseSequence, delta: Optional[int] = None) -> TypeVector:
    stats = compute_stats(seq, delta)
    return TypeVector(stats.n_md / stats.t)


def _xlogy_counts(counts: np.ndarray, probs: np.ndarray) -> float:
    mask = counts > 0
    if np.any(probs[mask] == 0):
        return -np.inf
    return float(np.dot(counts[mask], np.log(probs[mask])))


def sequence_log_probability(params: ModelParams, seq: PhaseSequence) -> float:
    """``log P(S^t = s^t)`` under H1.

    Completed phases contribute their pmf value, the final phase the tail
    probability of lasting at least its observed length.
    """
    stats = compute_stats(seq, params.delta)
    completed = stats.n_md.copy()
    m, o = stats.last_state - 1, stats.last_duration - 1
    completed[m, o] -= 1
    tail = params.pmf(stats.last_state).tail[o]
    if tail == 0:
        return -np.inf
    return (_xlogy_counts(completed[0], params.p1.probs)
            + _xlogy_counts(completed[1], params.p2.probs)
            + float(np.log(tail)))


def sequence_probability(params: ModelParams, seq: PhaseSequence) -> float:
    return float(np.exp(sequence_log_probability(params, seq)))


def sequence_log_probability_prime(params: ModelParams, seq: PhaseSequence) -> float:
    """Log of the proxy that treats the final phase as complete."""
    stats = compute_stats(seq, params.delta)
    return _xlogy_counts(stats.n_md[0], params.p1.probs) + _xlogy_counts(stats.n_md[1], params.p2.probs)


def sequence_probability_prime(params: ModelParams, seq: PhaseSequence) -> float:
    return float(np.exp(sequence_log_probability_prime(params, seq)))


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def enumerate_sequences(delta: int, t: int, guard: int = ENUMERATION_GUARD) -> Iterator[PhaseSequence]:
    """Yield every feasible sequence of length ``t`` exactly once.

    Feasibility assumes strictly positive pmfs: every composition of ``t``
    into parts of size at most ``delta`` is a possible phase layout.
    """
    if delta < 1 or t < 1:
        raise ModelError("delta and t must be >= 1")
    total = count_sequences(delta, t).value
    if total > guard:
        raise NumericGuardError(f"enumeration of C_t = {total} sequences exceeds guard {guard}")

    parts: list = []

    def rec(remaining: int):
        if remaining == 0:
            yield PhaseSequence(tuple((1 if i % 2 == 0 else 2, d) for i, d in enumerate(parts)))
            return
        for d in range(1, min(delta, remaining) + 1):
            parts.append(d)
            yield from rec(remaining - d)
            parts.pop()

    yield from rec(t)
