"""Finite-state Markov chains: validation, stationary law, t-step marginals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BadInitial, NotPrimitive, NotStochastic

STOCH_TOL = 1e-12
ZERO_ENTRY = 1e-15


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MarkovChain:
    """Transition matrix ``P`` together with the law ``pi0`` of the first state."""

    P: np.ndarray
    pi0: np.ndarray
    states: tuple = field(default=())

    @property
    def m(self) -> int:
        return self.P.shape[0]

    def with_initial(self, pi0) -> "MarkovChain":
        return validate_chain(self.P, pi0, self.states)


def check_distribution(p, size: int | None = None, tol: float = STOCH_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (size is not None and p.size != size):
        raise BadInitial(f"expected a length-{size} probability vector, got shape {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise BadInitial("probability vector has negative or non-finite entries")
    if abs(p.sum() - 1.0) > tol:
        raise BadInitial(f"probability vector sums to {p.sum()!r}")
    return p


def primitivity_exponent(P) -> int | None:
    """Smallest k with P^k entrywise positive, or None if k would exceed (m-1)^2 + 1.

    Works on the zero pattern only, so the answer is exact.
    """
    pattern = np.asarray(P) > ZERO_ENTRY
    m = pattern.shape[0]
    power = pattern.copy()
    for k in range(1, (m - 1) ** 2 + 2):
        if power.all():
            return k
        power = (power.astype(np.int64) @ pattern.astype(np.int64)) > 0
    return None


def validate_chain(P, pi0, states: Sequence = ()) -> MarkovChain:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
        raise NotStochastic(f"P must be square with at least 2 states, got shape {P.shape}")
    m = P.shape[0]
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise NotStochastic("P has negative or non-finite entries")
    rows = P.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > STOCH_TOL):
        raise NotStochastic(f"row sums of P deviate from 1: {rows}")
    if primitivity_exponent(P) is None:
        raise NotPrimitive("chain is not irreducible and aperiodic (no positive power of P)")
    pi0 = check_distribution(pi0, m)
    states = tuple(states) if len(states) else tuple(range(m))
    if len(states) != m:
        raise NotStochastic(f"{len(states)} state labels for a {m}-state chain")
    return MarkovChain(_frozen(P), _frozen(pi0), states)


def stationary(chain: MarkovChain) -> np.ndarray:
    """Unique pi with pi P = pi, from the balance equations with one replaced by sum(pi) = 1."""
    m = chain.m
    A = chain.P.T - np.eye(m)
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def matrix_power(P, k: int) -> np.ndarray:
    """P^k by repeated squaring, renormalizing rows after every multiply."""
    P = np.asarray(P, dtype=float)
    result = np.eye(P.shape[0])
    base = P.copy()
    while k > 0:
        if k & 1:
            result = result @ base
            result /= result.sum(axis=1, keepdims=True)
        k >>= 1
        if k:
            base = base @ base
            base /= base.sum(axis=1, keepdims=True)
    return result


def t_step_distribution(chain: MarkovChain, tau: int) -> np.ndarray:
    """Law of the state at time tau + 1, i.e. pi0 P^tau."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau == 0:
        return np.array(chain.pi0)
    p = chain.pi0 @ matrix_power(chain.P, tau)
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def delta_tau(chain: MarkovChain, tau: int) -> float:
    """l1 distance between pi0 P^tau and the stationary law."""
    return float(np.abs(t_step_distribution(chain, tau) - stationary(chain)).sum())


def chain_from_json(doc: dict) -> MarkovChain:
    try:
        P, pi0 = doc["P"], doc["pi0"]
    except KeyError as exc:
        raise NotStochastic(f"chain document missing field {exc}") from None
    return validate_chain(P, pi0, doc.get("states", ()))
