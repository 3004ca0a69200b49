"""Numerical checks of the inequalities relating block, projected and
stationary-start rate-distortion functions, and the convergence experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .blocks import DEFAULT_BUDGET, block_distribution, projected_distribution
from .chain import MarkovChain, delta_tau, stationary
from .distortion import DistortionSpec
from .errors import DomainError
from .rdsolver import DEFAULT_TOL, RDCurve, RDPoint, rd_at_distortion

EXACT_TOL = 1e-9
SOLVER_TOL = 1e-6


@dataclass(frozen=True)
class BoundReport:
    name: str
    lhs: float
    rhs: float
    preconditions_met: bool
    reason: str = ""
    tol: float = EXACT_TOL
    context: dict = field(default_factory=dict, compare=False)

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.preconditions_met and self.margin >= -self.tol


def _gated(name, reason, tol, context, rhs=math.nan) -> BoundReport:
    return BoundReport(name, math.nan, rhs, False, reason, tol, context)


class RateCache:
    """Memoized R(D) in bits, keyed on source contents and distortion level."""

    def __init__(self, tol: float = DEFAULT_TOL):
        self.tol = tol
        self._rates: dict = {}
        self._curves: dict = {}

    def point(self, source, D: float) -> RDPoint:
        key = (source.key(), float(D))
        if key not in self._rates:
            self._rates[key] = rd_at_distortion(source, float(D), self.tol)
            self._curves.setdefault(source.key(), (source, {}))[1][float(D)] = self._rates[key]
        return self._rates[key]

    def rate(self, source, D: float) -> float:
        return self.point(source, D).R

    def curves(self) -> list:
        """Every source queried so far, with its computed points as an RDCurve."""
        out = []
        for source, pts in self._curves.values():
            Ds = sorted(pts)
            out.append((source, RDCurve([pts[d] for d in Ds], getattr(source, "origin", None))))
        return out

    def __len__(self) -> int:
        return len(self._rates)


def k_constant(spec: DistortionSpec, m: int) -> float:
    """Constant of the initial-distribution bound, in bits (reproduction alphabet = source alphabet)."""
    return 7.0 * (spec.d_max / spec.d_min) * (2.0 * math.log2(m))


def delta_condition(delta: float, spec: DistortionSpec) -> bool:
    return delta <= 4.0 * spec.d_min / spec.d_max


def xlog1overx(delta: float) -> float:
    if delta < 0 or delta > 1:
        raise DomainError(f"delta log(1/delta) needs delta in [0, 1], got {delta}")
    if delta == 0:
        return 0.0
    return -delta * math.log2(delta)


def check_initial_dist_bound(
    chain: MarkovChain,
    spec: DistortionSpec,
    T: int,
    tau: int,
    D: float,
    tol: float = SOLVER_TOL,
    cache: RateCache | None = None,
    budget: int = DEFAULT_BUDGET,
    pi_label: str = "",
) -> BoundReport:
    """|R_Q'((T-tau)D) - R_Q((T-tau)D)| / (T-tau) <= K delta log(1/delta).

    Q' and Q are the laws of the last T - tau block coordinates when the chain
    starts from pi0 and from the stationary law. Gated (not failed) unless
    delta satisfies delta_condition and delta <= 1.
    """
    ctx = dict(T=T, tau=tau, D=D, pi_label=pi_label)
    name = "initial_dist"
    if not (0 <= tau < T) or not D > 0:
        return _gated(name, "requires T > tau >= 0 and D > 0", tol, ctx)
    delta = delta_tau(chain, tau)
    ctx["delta"] = delta
    if not delta_condition(delta, spec):
        return _gated(name, f"delta = {delta:.6g} > 4 d_min/d_max", tol, ctx)
    if delta > 1:
        return _gated(name, f"delta = {delta:.6g} > 1", tol, ctx)
    cache = RateCache() if cache is None else cache
    rhs = k_constant(spec, chain.m) * xlog1overx(delta)
    L = T - tau
    q_init = projected_distribution(chain, T, tau, spec, budget)
    q_stat = projected_distribution(chain.with_initial(stationary(chain)), T, tau, spec, budget)
    lhs = abs(cache.rate(q_init, L * D) - cache.rate(q_stat, L * D)) / L
    return BoundReport(name, lhs, rhs, True, "", tol, ctx)


def check_sandwich(
    chain: MarkovChain,
    spec: DistortionSpec,
    T: int,
    tau: int,
    D: float,
    tol: float = SOLVER_TOL,
    cache: RateCache | None = None,
    budget: int = DEFAULT_BUDGET,
    pi_label: str = "",
) -> tuple[BoundReport, BoundReport]:
    """R_J(TD) <= R_X(TD) <= R_J(TD - tau d_max), as a (lower, upper) pair.

    The upper half is reported with preconditions_met = False when
    TD <= tau d_max.
    """
    ctx = dict(T=T, tau=tau, D=D, pi_label=pi_label)
    cache = RateCache() if cache is None else cache
    X = block_distribution(chain, T, spec, budget)
    J = projected_distribution(chain, T, tau, spec, budget)
    r_x = cache.rate(X, T * D)
    lower = BoundReport("sandwich_lower", cache.rate(J, T * D), r_x, True, "", tol, ctx)
    shifted = T * D - tau * spec.d_max
    if shifted <= 0:
        upper = _gated("sandwich_upper", "PreconditionFailed: TD <= tau d_max", tol, ctx)
    else:
        upper = BoundReport("sandwich_upper", r_x, cache.rate(J, shifted), True, "", tol, ctx)
    return lower, upper


def check_shift_gap(
    chain: MarkovChain,
    spec: DistortionSpec,
    T: int,
    tau: int,
    D: float,
    tol: float = SOLVER_TOL,
    cache: RateCache | None = None,
    budget: int = DEFAULT_BUDGET,
    pi_label: str = "",
) -> tuple[BoundReport, BoundReport]:
    """Cost of lowering the projected source's distortion level by tau d_max.

    Returns two reports on the same left side R_J(TD - tau d_max) - R_J(TD):
    ``shift_gap`` compares it with tau d_max log m, and ``shift_gap_convex``
    with the convexity bound (K0 / a)(a' - a) where K0 = (T - tau) log m,
    a = TD - tau d_max and a' = TD.
    """
    ctx = dict(T=T, tau=tau, D=D, pi_label=pi_label)
    a = T * D - tau * spec.d_max
    if a <= 0:
        reason = "PreconditionFailed: TD <= tau d_max"
        return (_gated("shift_gap", reason, tol, ctx), _gated("shift_gap_convex", reason, tol, ctx))
    cache = RateCache() if cache is None else cache
    J = projected_distribution(chain, T, tau, spec, budget)
    lhs = cache.rate(J, a) - cache.rate(J, T * D)
    log_m = math.log2(chain.m)
    k0 = (T - tau) * log_m
    return (
        BoundReport("shift_gap", lhs, tau * spec.d_max * log_m, True, "", tol, ctx),
        BoundReport("shift_gap_convex", lhs, k0 / a * (tau * spec.d_max), True, "", tol, ctx),
    )


def check_normalization(
    chain: MarkovChain,
    spec: DistortionSpec,
    T: int,
    tau: int,
    D: float,
    cache: RateCache | None = None,
    budget: int = DEFAULT_BUDGET,
    pi_label: str = "",
) -> BoundReport:
    """|1/(T-tau) - 1/T| R_X(TD) <= tau / (T (T-tau)) * T log m."""
    ctx = dict(T=T, tau=tau, D=D, pi_label=pi_label)
    if not 0 <= tau < T:
        return _gated("normalization", "requires T > tau >= 0", EXACT_TOL, ctx)
    cache = RateCache() if cache is None else cache
    r_x = cache.rate(block_distribution(chain, T, spec, budget), T * D)
    lhs = abs(1.0 / (T - tau) - 1.0 / T) * r_x
    rhs = tau / (T * (T - tau)) * T * math.log2(chain.m)
    return BoundReport("normalization", lhs, rhs, True, "", EXACT_TOL, ctx)


def check_convex_gap(curve: RDCurve, K0: float, tol: float = EXACT_TOL, context=None) -> BoundReport:
    """R(a) - R(a') <= (K0 / a)(a' - a) over all grid pairs a < a'; reports the tightest pair."""
    D, R = curve.D, curve.R
    ctx = dict(context or {})
    if len(D) < 2:
        return BoundReport("convex_gap", 0.0, 0.0, True, "fewer than two points", tol, ctx)
    i, j = np.triu_indices(len(D), k=1)
    lhs = R[i] - R[j]
    rhs = K0 / D[i] * (D[j] - D[i])
    k = int(np.argmin(rhs - lhs))
    ctx.update(a=float(D[i[k]]), a_prime=float(D[j[k]]))
    return BoundReport("convex_gap", float(lhs[k]), float(rhs[k]), True, "", tol, ctx)


@dataclass(frozen=True)
class ConvergenceRow:
    T: int
    pi_label: str
    F: float
    gap: float


@dataclass(frozen=True)
class ConvergenceTable:
    rows: list

    def gaps(self, label: str) -> dict:
        return {r.T: r.gap for r in self.rows if r.pi_label == label}

    def values(self, label: str) -> dict:
        return {r.T: r.F for r in self.rows if r.pi_label == label}


def convergence_experiment(
    chain: MarkovChain,
    spec: DistortionSpec,
    initials: dict,
    D: float,
    T_list: Iterable[int],
    cache: RateCache | None = None,
    budget: int = DEFAULT_BUDGET,
    stationary_label: str = "pi",
) -> ConvergenceTable:
    """F(T, pi') = R(TD) / T for each initial law, and its distance to F(T, pi).

    ``initials`` maps labels to initial distributions; the stationary law is
    added under ``stationary_label``.
    """
    cache = RateCache() if cache is None else cache
    pi = stationary(chain)
    laws = {stationary_label: pi, **{k: np.asarray(v, float) for k, v in initials.items()}}
    rows = []
    for T in sorted(set(T_list)):
        F = {
            label: cache.rate(block_distribution(chain.with_initial(law), T, spec, budget), T * D) / T
            for label, law in laws.items()
        }
        for label in sorted(F):
            rows.append(ConvergenceRow(T, label, F[label], abs(F[label] - F[stationary_label])))
    return ConvergenceTable(rows)


@dataclass(frozen=True)
class SweepCase:
    label: str
    chain: MarkovChain
    spec: DistortionSpec
    spec_label: str = ""


def run_case(
    case: SweepCase,
    initials: dict,
    T_max: int,
    D_list: Iterable[float],
    budget: int = DEFAULT_BUDGET,
    tol: float = SOLVER_TOL,
) -> list:
    """All bound checks for one chain and distortion, every T <= T_max and tau < T."""
    cache = RateCache()
    reports = []
    for pi_label, law in initials.items():
        chain = case.chain.with_initial(law)
        for T in range(1, T_max + 1):
            for tau in range(T):
                for D in D_list:
                    kw = dict(cache=cache, budget=budget, pi_label=pi_label)
                    reports.extend(check_sandwich(chain, case.spec, T, tau, D, tol, **kw))
                    reports.append(check_initial_dist_bound(chain, case.spec, T, tau, D, tol, **kw))
                    reports.extend(check_shift_gap(chain, case.spec, T, tau, D, tol, **kw))
                    reports.append(check_normalization(chain, case.spec, T, tau, D, **kw))
    for source, curve in cache.curves():
        k0 = source.L * math.log2(source.m)
        ctx = dict(L=source.L, pi=getattr(source.origin, "pi", None))
        reports.append(check_convex_gap(curve, k0, context=ctx))
    for r in reports:
        r.context.update(chain=case.label, distortion=case.spec_label)
    return reports


def summarize(reports: list) -> dict:
    gated = sum(not r.preconditions_met for r in reports)
    passed = sum(r.passed for r in reports)
    return {"total": len(reports), "passed": passed, "gated": gated}
