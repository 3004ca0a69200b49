"""Block sources: the law of the first T chain states, and its projections.

Sequences are indexed lexicographically, first coordinate most significant,
so ``probs.reshape((m,) * L)[s]`` is the probability of sequence ``s``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .chain import MarkovChain, t_step_distribution
from .distortion import DistortionSpec, hamming
from .errors import BlockTooLarge, OutOfRange, ShapeMismatch

DEFAULT_BUDGET = 65536
MATERIALIZE_LIMIT = 4096


class Origin(NamedTuple):
    pi: tuple
    T: int
    tau: int


def seq_index(s, m: int) -> int:
    idx = 0
    for sym in s:
        sym = int(sym)
        if not 0 <= sym < m:
            raise OutOfRange(f"symbol {sym} outside [0, {m})")
        idx = idx * m + sym
    return idx


def seq_decode(index: int, m: int, L: int) -> tuple:
    if not 0 <= index < m**L:
        raise OutOfRange(f"index {index} outside [0, {m}^{L})")
    out = []
    for _ in range(L):
        index, r = divmod(index, m)
        out.append(r)
    return tuple(reversed(out))


def all_sequences(m: int, L: int) -> np.ndarray:
    """(m^L, L) array whose row i is the sequence with index i."""
    return np.indices((m,) * L).reshape(L, -1).T


@dataclass(frozen=True, eq=False)
class BlockSource:
    m: int
    L: int
    probs: np.ndarray
    spec: DistortionSpec
    origin: Origin | None = field(default=None)

    @property
    def shape(self) -> tuple:
        return (self.m,) * self.L

    @property
    def size(self) -> int:
        return self.probs.size

    @property
    def factors(self) -> list:
        """Per-coordinate distortion matrices; the block distortion is their sum."""
        return [self.spec.d] * self.L

    def pair_distortion(self, i: int, j: int) -> float:
        s = seq_decode(i, self.m, self.L)
        t = seq_decode(j, self.m, self.L)
        return float(self.spec.d[list(s), list(t)].sum())

    def distortion_matrix(self) -> np.ndarray:
        if self.size > MATERIALIZE_LIMIT:
            raise BlockTooLarge(
                f"{self.size} super-symbols; use pair_distortion beyond {MATERIALIZE_LIMIT}"
            )
        seqs = all_sequences(self.m, self.L)
        return self.spec.d[seqs[:, None, :], seqs[None, :, :]].sum(axis=-1)

    def coordinate_marginal(self, j: int) -> np.ndarray:
        t = self.probs.reshape(self.shape)
        axes = tuple(a for a in range(self.L) if a != j)
        return t.sum(axis=axes)

    def key(self) -> tuple:
        return (self.m, self.L, self.probs.tobytes(), self.spec.d.tobytes())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["seq", "index", "prob"])
            for i, row in enumerate(all_sequences(self.m, self.L)):
                w.writerow(["".join(map(str, row)), i, f"{self.probs[i]:.12g}"])


def _build(start, P, L, spec, origin, budget) -> BlockSource:
    m = P.shape[0]
    if L < 1:
        raise OutOfRange("block length must be >= 1")
    if m**L > budget:
        raise BlockTooLarge(f"{m}^{L} = {m**L} super-symbols exceeds budget {budget}")
    probs = np.array(start, dtype=float)
    last = np.arange(m)
    for _ in range(L - 1):
        probs = (probs[:, None] * P[np.tile(last, probs.size // m)]).reshape(-1)
    probs.setflags(write=False)
    return BlockSource(m, L, probs, spec if spec is not None else hamming(m), origin)


def block_distribution(
    chain: MarkovChain, T: int, spec: DistortionSpec | None = None, budget: int = DEFAULT_BUDGET
) -> BlockSource:
    """Law of (X_1, ..., X_T) with X_1 ~ pi0."""
    return _build(chain.pi0, chain.P, T, spec, Origin(tuple(chain.pi0), T, 0), budget)


def projected_distribution(
    chain: MarkovChain,
    T: int,
    tau: int,
    spec: DistortionSpec | None = None,
    budget: int = DEFAULT_BUDGET,
) -> BlockSource:
    """Marginal of the length-T block on its last T - tau coordinates."""
    if not 0 <= tau < T:
        raise OutOfRange(f"tau = {tau} outside [0, {T})")
    start = t_step_distribution(chain, tau)
    return _build(start, chain.P, T - tau, spec, Origin(tuple(chain.pi0), T, tau), budget)


def l1_distance(a: BlockSource, b: BlockSource) -> float:
    if a.m != b.m or a.L != b.L:
        raise ShapeMismatch(f"sources over {a.m}^{a.L} and {b.m}^{b.L}")
    return float(np.abs(a.probs - b.probs).sum())
