"""Counting feasible state sequences and their types.

Sequences of length ``t`` correspond one-to-one with ordered compositions of
``t`` into parts of size at most ``delta`` (the phase durations), so their
number obeys the generalized Fibonacci recursion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np

from .errors import ModelError

# Exact integers are kept up to this horizon; beyond it only logs.
EXACT_LIMIT = 64


@dataclass(frozen=True)
class Count:
    value: int | None
    log: float


@dataclass(frozen=True)
class CountTable:
    """``C_0 .. C_T`` for one ``delta``; ``counts[t]`` is exact for ``t <= EXACT_LIMIT``."""

    delta: int
    counts: Tuple[int | None, ...]
    log_counts: np.ndarray

    def __getitem__(self, t: int) -> Count:
        return Count(self.counts[t], float(self.log_counts[t]))


@lru_cache(maxsize=64)
def count_table(delta: int, t_max: int) -> CountTable:
    if delta < 1:
        raise ModelError("delta must be >= 1")
    if t_max < 0:
        raise ModelError("t_max must be >= 0")
    exact_top = min(t_max, max(EXACT_LIMIT, 0))
    exact = [1]
    for t in range(1, exact_top + 1):
        exact.append(sum(exact[max(0, t - delta):t]))
    logs = np.empty(t_max + 1)
    logs[: exact_top + 1] = [math.log(c) for c in exact]
    for t in range(exact_top + 1, t_max + 1):
        window = logs[max(0, t - delta):t]
        top = window.max()
        logs[t] = top + math.log(np.exp(window - top).sum())
    counts = tuple(exact) + (None,) * (t_max - exact_top)
    return CountTable(delta, counts, logs)


def count_sequences(delta: int, t: int) -> Count:
    """Number of feasible sequences of length ``t`` (exact below the limit)."""
    if t < 1:
        raise ModelError("t must be >= 1")
    if t <= EXACT_LIMIT:
        value = count_table(delta, t).counts[t]
        return Count(value, math.log(value))
    return count_table(delta, t)[t]


def count_sequences_exact(delta: int, t: int) -> int:
    """Exact ``C_t`` at any horizon (arbitrary precision, O(t * delta))."""
    if t < 0:
        raise ModelError("t must be >= 0")
    window = [0] * (delta - 1) + [1]
    for _ in range(t):
        window = window[1:] + [sum(window)]
    return window[-1]


def growth_rate_psi(delta: int, tol: float = 1e-12) -> float:
    """Unique positive root of ``x^delta - x^(delta-1) - ... - 1``.

    Found by bisection on ``[1, 2]``; the polynomial is negative at 1 for
    ``delta >= 2`` and positive at 2.
    """
    if delta < 1:
        raise ModelError("delta must be >= 1")
    if delta == 1:
        return 1.0

    def poly(x: float) -> float:
        return x**delta - sum(x**k for k in range(delta))

    lo, hi = 1.0, 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if poly(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _as_counts(nu, t: int | None) -> np.ndarray:
    arr = np.asarray(getattr(nu, "nu", nu), dtype=float)
    if t is not None:
        arr = arr * t
    counts = np.rint(arr)
    if np.any(np.abs(arr - counts) > 1e-9) or np.any(counts < 0):
        raise ModelError("type counts nu_md * t must be non-negative integers")
    return counts.astype(np.int64)


def _multinomial(parts) -> int:
    total = 0
    result = 1
    for k in parts:
        total += int(k)
        result *= math.comb(total, int(k))
    return result


def count_type_sequences(nu, t: int | None = None) -> Count:
    """Number of feasible sequences of length ``t`` whose type is ``nu``.

    ``nu`` is either a 2 x delta array of fractions (together with ``t``) or,
    with ``t=None``, a 2 x delta array of integer phase counts.
    """
    counts = _as_counts(nu, t)
    n1, n2 = int(counts[0].sum()), int(counts[1].sum())
    if n1 - n2 not in (0, 1):
        raise ModelError(f"phase counts {n1}, {n2} cannot alternate starting from state 1")
    if t is not None:
        q = np.arange(1, counts.shape[1] + 1)
        if int(q @ counts[0] + q @ counts[1]) != t:
            raise ModelError("type does not account for exactly t samples")
    value = _multinomial(counts[0]) * _multinomial(counts[1])
    return Count(value, math.log(value))


def entropy(lam, convention: str = "normalized") -> float:
    """Shannon entropy of the normalized vector.

    ``mass-weighted`` scales the normalized entropy by the total mass, which
    is the exponent that Stirling's formula attaches to a multinomial count.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ModelError("entropy needs a non-negative vector")
    mass = lam.sum()
    if not mass > 0:
        raise ModelError("entropy of the zero vector is undefined")
    w = lam[lam > 0] / mass
    h = float(-np.dot(w, np.log(w)))
    if convention == "normalized":
        return h
    if convention == "mass-weighted":
        return float(mass) * h
    raise ModelError(f"unknown entropy convention {convention!r}")


def kl_divergence(lam, p) -> float:
    """Relative entropy of the normalized ``lam`` against pmf ``p``.

    Returns ``inf`` when ``lam`` puts mass where ``p`` has none.
    """
    lam = np.asarray(lam, dtype=float)
    p = np.asarray(getattr(p, "probs", p), dtype=float)
    mass = lam.sum()
    if not mass > 0:
        raise ModelError("KL divergence of the zero vector is undefined")
    w = lam / mass
    mask = w > 0
    if np.any(p[mask] == 0):
        return math.inf
    return max(0.0, float(np.dot(w[mask], np.log(w[mask] / p[mask]))))
