"""Per-letter distortion measures and their additive block extension."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, NegativeEntry, NonzeroDiagonal, OutOfRange, ZeroOffDiagonal


@dataclass(frozen=True)
class DistortionSpec:
    d: np.ndarray
    d_max: float
    d_min: float

    @property
    def m(self) -> int:
        return self.d.shape[0]


def make_distortion(d) -> DistortionSpec:
    """Validate a square distortion matrix with zero diagonal and positive off-diagonal."""
    d = np.array(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise OutOfRange(f"distortion matrix must be square, got shape {d.shape}")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise NegativeEntry("distortion matrix has negative or non-finite entries")
    if np.any(np.diag(d) != 0):
        raise NonzeroDiagonal("d(x, x) must be 0 for every x")
    off = d[~np.eye(d.shape[0], dtype=bool)]
    if np.any(off <= 0):
        raise ZeroOffDiagonal("d(x, y) must be > 0 for x != y")
    d.setflags(write=False)
    return DistortionSpec(d, float(off.max()), float(off.min()))


def hamming(m: int) -> DistortionSpec:
    return make_distortion(1.0 - np.eye(m))


def block_distortion(spec: DistortionSpec, s, t) -> float:
    s = np.asarray(s, dtype=int)
    t = np.asarray(t, dtype=int)
    if s.shape != t.shape:
        raise LengthMismatch(f"sequences of lengths {s.size} and {t.size}")
    if s.size and (s.min() < 0 or t.min() < 0 or max(s.max(), t.max()) >= spec.m):
        raise OutOfRange("symbol outside the alphabet")
    return float(spec.d[s, t].sum())


def distortion_from_json(value, m: int) -> DistortionSpec:
    if isinstance(value, str):
        if value.lower() != "hamming":
            raise OutOfRange(f"unknown distortion name {value!r}")
        return hamming(m)
    spec = make_distortion(value)
    if spec.m != m:
        raise OutOfRange(f"distortion matrix is {spec.m}x{spec.m}, chain has {m} states")
    return spec
