"""Turning a code for the projected source into one for the full block source.

A length-(T - tau) code is applied to the last T - tau letters of a length-T
block and the first tau letters are reproduced by a fixed symbol; the
resulting per-block distortion exceeds the projected one by at most
tau * d_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import all_sequences, seq_index
from .bounds import SOLVER_TOL, BoundReport
from .distortion import DistortionSpec, block_distortion
from .errors import BadTau, ShapeMismatch
from .rdsolver import AdditiveSource, rd_at_distortion


def project(s, tau: int) -> tuple:
    s = tuple(s)
    if not 0 <= tau < len(s):
        raise BadTau(f"tau = {tau} outside [0, {len(s)})")
    return s[tau:]


def extend(t, tau: int, fill: int = 0) -> tuple:
    if tau < 0:
        raise BadTau(f"tau = {tau} < 0")
    return (fill,) * tau + tuple(t)


@dataclass(frozen=True)
class Codebook:
    """Block code on length-L sequences over an m-letter alphabet.

    ``encoder[i]`` is the codeword index for the sequence with lexicographic
    index i; ``codewords[k]`` is the reproduction for index k.
    """

    m: int
    L: int
    rate_bits: float
    encoder: np.ndarray
    codewords: np.ndarray

    def __post_init__(self):
        if self.encoder.shape != (self.m**self.L,):
            raise ShapeMismatch("encoder must be defined on all m^L inputs")
        n = 2 ** math.floor(self.rate_bits)
        if len(self.codewords) > n or self.encoder.max() >= len(self.codewords):
            raise ShapeMismatch(f"more than 2^floor(R) = {n} codewords in use")

    def encode(self, s) -> int:
        return int(self.encoder[seq_index(s, self.m)])

    def decode(self, k: int) -> tuple:
        return tuple(int(x) for x in self.codewords[k])

    def reproduce(self, s) -> tuple:
        return self.decode(self.encode(s))


def identity_codebook(m: int, L: int) -> Codebook:
    n = m**L
    return Codebook(m, L, math.log2(n) if n > 1 else 0.0, np.arange(n), all_sequences(m, L))


def random_codebook(
    m: int, L: int, rate_bits: float, rng: np.random.Generator, spec: DistortionSpec | None = None
) -> Codebook:
    """Uniformly drawn codewords; inputs go to the nearest codeword under ``spec``,
    or to a uniformly drawn index when no distortion is given."""
    n = 2 ** math.floor(rate_bits)
    codewords = rng.integers(0, m, size=(n, L))
    seqs = all_sequences(m, L)
    if spec is None:
        encoder = rng.integers(0, n, size=len(seqs))
    else:
        cost = spec.d[seqs[:, None, :], codewords[None, :, :]].sum(axis=-1)
        encoder = cost.argmin(axis=1)
    return Codebook(m, L, float(rate_bits), encoder, codewords)


def transformed_code_distortion(
    spec: DistortionSpec, code: Codebook, s, tau: int, fill: int = 0
) -> tuple[float, float]:
    """(full, projected) distortion of the extended code on block ``s``.

    ``projected`` is the distortion of ``code`` on the last T - tau letters;
    ``full`` is that of the extended reproduction on all of ``s``.
    """
    s = tuple(s)
    if code.L != len(s) - tau:
        raise ShapeMismatch(f"code length {code.L} != T - tau = {len(s) - tau}")
    tail = project(s, tau)
    rep = code.reproduce(tail)
    projected = block_distortion(spec, tail, rep)
    full = block_distortion(spec, s, extend(rep, tau, fill))
    return full, projected


def product_source(joint, d_a, d_b) -> AdditiveSource:
    """i.i.d. pairs (A, B) with law ``joint[a, b]`` and distortion d_a + d_b."""
    joint = np.asarray(joint, dtype=float)
    d_a, d_b = np.asarray(d_a, float), np.asarray(d_b, float)
    if joint.shape != (d_a.shape[0], d_b.shape[0]):
        raise ShapeMismatch(f"joint {joint.shape} vs distortions {d_a.shape}, {d_b.shape}")
    return AdditiveSource(joint.reshape(-1), [d_a, d_b])


def marginal_source(joint_source: AdditiveSource) -> AdditiveSource:
    d_a, d_b = joint_source.factors
    pa = joint_source.probs.reshape(d_a.shape[0], d_b.shape[0]).sum(axis=1)
    return AdditiveSource(pa, [d_a])


def check_marginal_dominance(joint_source: AdditiveSource, D: float, tol: float = SOLVER_TOL) -> BoundReport:
    """R_A(D) <= R_(A,B)(D) for a pair source with additive distortion."""
    r_a = rd_at_distortion(marginal_source(joint_source), D).R
    r_ab = rd_at_distortion(joint_source, D).R
    return BoundReport("marginal_dominance", r_a, r_ab, True, "", tol, {"D": D})
