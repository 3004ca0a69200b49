"""Rate-distortion functions of finite i.i.d. (vector) sources.

Sources are anything exposing ``probs`` (flat, lexicographic) and
``factors`` (one distortion matrix per coordinate, rows indexed by source
letters and columns by reproduction letters). The distortion between two
super-symbols is the sum of the per-coordinate entries, so the Blahut-Arimoto
kernel exp(s * d) is a Kronecker product of small per-coordinate kernels and
is never materialized.

Rates are in bits. The slope parameter ``s`` is the kernel exponent, i.e.
dR/dD in nats per unit distortion.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import AlphabetTooLarge, InvalidCurve, NoConvergence

log = logging.getLogger(__name__)

LN2 = math.log(2.0)
LOG_DOMAIN_ABOVE = 1024
SLOPE_BRACKET = (-64.0, -1e-9)
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 20000
NEWTON_LIMIT = 4096
WARMUP_ITERS = 50
FLOOR = 1e-30
RETRY_ITERS = 20
INIT_SPREAD = 1e-8


@dataclass(frozen=True, eq=False)
class AdditiveSource:
    """Generic finite source with a distortion additive over coordinates."""

    probs: np.ndarray
    factors: list
    origin: object = None

    def key(self) -> tuple:
        return (self.probs.tobytes(),) + tuple((f.shape, f.tobytes()) for f in self.factors)


@dataclass(frozen=True)
class RDPoint:
    D: float
    R: float
    slope: float
    iters: int
    gap: float
    output: np.ndarray | None = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class RDCurve:
    points: list
    source_origin: object = None

    @property
    def D(self) -> np.ndarray:
        return np.array([p.D for p in self.points])

    @property
    def R(self) -> np.ndarray:
        return np.array([p.R for p in self.points])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["D", "R_bits", "slope", "iters", "gap"])
            for p in self.points:
                w.writerow([f"{p.D:.12g}", f"{p.R:.12g}", f"{p.slope:.12g}", p.iters, f"{p.gap:.12g}"])


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def binary_entropy(x: float) -> float:
    return entropy([x, 1.0 - x])


def _shape_in(source) -> tuple:
    return tuple(f.shape[0] for f in source.factors)


def _shape_out(source) -> tuple:
    return tuple(f.shape[1] for f in source.factors)


def coordinate_marginals(source) -> list:
    t = np.asarray(source.probs).reshape(_shape_in(source))
    L = t.ndim
    return [t.sum(axis=tuple(a for a in range(L) if a != j)) for j in range(L)]


def d_zero(source) -> float:
    """Least expected distortion with a single fixed reproduction super-symbol.

    Additivity lets the minimizing super-symbol be chosen coordinate by coordinate.
    """
    total = 0.0
    for marg, d in zip(coordinate_marginals(source), source.factors):
        total += float((marg @ d).min())
    return total


def full_distortion_matrix(source) -> np.ndarray:
    mats = source.factors
    out = np.zeros((1, 1))
    for d in mats:
        out = (out[:, None, :, None] + d[None, :, None, :]).reshape(
            out.shape[0] * d.shape[0], out.shape[1] * d.shape[1]
        )
    return out


# ---------------------------------------------------------------- kernels


def _lse_last(t):
    mx = t.max(axis=-1)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        return safe + np.log(np.exp(t - safe[..., None]).sum(axis=-1))


def _kron_apply_log(logmats, logx, shape):
    t = logx.reshape(shape)
    for axis, LM in enumerate(logmats):
        t = np.moveaxis(t, axis, -1)
        t = _lse_last(t[..., None, :] + LM)
        t = np.moveaxis(t, -1, axis)
    return t.reshape(-1)


_DMAT_CACHE: dict = {}
_DMAT_CACHE_SIZE = 4


def _cached_distortion_matrix(source) -> np.ndarray:
    key = tuple((f.shape, np.asarray(f, dtype=float).tobytes()) for f in source.factors)
    if key not in _DMAT_CACHE:
        if len(_DMAT_CACHE) >= _DMAT_CACHE_SIZE:
            _DMAT_CACHE.pop(next(iter(_DMAT_CACHE)))
        _DMAT_CACHE[key] = full_distortion_matrix(source)
    return _DMAT_CACHE[key]


class _Kernel:
    """exp(s * d) applied as a dense matrix, or factor by factor in log domain."""

    def __init__(self, source, slope: float, log_domain: bool):
        self.slope = slope
        self.log_domain = log_domain
        self.source = source
        if log_domain:
            self.d = [np.asarray(f, dtype=float) for f in source.factors]
            self.shape_in = _shape_in(source)
            self.shape_out = _shape_out(source)
            self.logK = [slope * d for d in self.d]
            self.logKT = [lk.T for lk in self.logK]
        else:
            self.dmat = _cached_distortion_matrix(source)
            self.K = np.exp(slope * self.dmat)

    def forward(self, q):
        if self.log_domain:
            return _kron_apply_log(self.logK, q, self.shape_out)
        return self.K @ q

    def backward(self, w):
        if self.log_domain:
            return _kron_apply_log(self.logKT, w, self.shape_in)
        return w @ self.K

    def expected_distortion(self, w, q):
        """sum_s w(s) sum_t K(s,t) d(s,t) q(t); w and q in the kernel's domain."""
        if not self.log_domain:
            return float(w @ ((self.K * self.dmat) @ q))
        total = 0.0
        for j, d in enumerate(self.d):
            with np.errstate(divide="ignore"):
                mats = list(self.logK)
                mats[j] = self.logK[j] + np.log(d)
            total += float(np.exp(w + _kron_apply_log(mats, q, self.shape_out)).sum())
        return total


def _default_output(source, spread: float = INIT_SPREAD) -> np.ndarray:
    """Start near the zero-rate solution: mass on the best single reproduction.

    A sliver of uniform mass keeps every reproduction reachable; at slopes
    close to 0 the iteration barely moves, so starting here is what makes
    the returned distortion approach d_zero there.
    """
    shape = _shape_out(source)
    n = int(np.prod(shape))
    best = tuple(
        int(np.argmin(marg @ d)) for marg, d in zip(coordinate_marginals(source), source.factors)
    )
    q = np.full(n, spread / n)
    q[np.ravel_multi_index(best, shape)] += 1.0 - spread
    return q


class _BAState:
    """Quantities of one alternating-minimization step evaluated at log q."""

    __slots__ = ("lq", "logZ", "w", "logc", "gap", "objective", "upper")

    def __init__(self, kern: _Kernel, p, logp, support, lq):
        self.lq = lq
        if kern.log_domain:
            logZ = kern.forward(lq)
        else:
            with np.errstate(divide="ignore"):
                logZ = np.log(kern.forward(np.exp(lq)))
        if np.any(~np.isfinite(logZ[support])) and not kern.log_domain:
            raise FloatingPointError("kernel underflow")
        self.logZ = logZ
        self.w = np.where(support, logp - logZ, -np.inf)
        if kern.log_domain:
            logc = kern.backward(self.w)
        else:
            with np.errstate(divide="ignore"):
                logc = np.log(kern.backward(np.exp(self.w)))
        self.logc = logc
        qc = np.exp(lq + logc)
        pos = qc > 0
        self.upper = float((qc[pos] * logc[pos]).sum())
        self.gap = (float(logc.max()) - self.upper) / LN2
        self.objective = -float((p[support] * logZ[support]).sum())

    def next_lq(self):
        lq = self.lq + self.logc
        return lq - _lse_last(lq)


def ba_point(
    source,
    slope: float,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    q0=None,
    log_domain: bool | None = None,
    polish: bool | None = None,
) -> RDPoint:
    """One parametric point of the rate-distortion curve by alternating minimization.

    Stops once the gap between the Blahut upper and lower bounds on R(D_s)
    drops below ``tol`` bits. The returned rate is I(X; Y) of the final test
    channel, so (D, R) is achievable and within ``gap`` of the curve.

    Plain alternating minimization crawls once the surviving reproduction
    weights span many orders of magnitude; with ``polish`` (default for up to
    NEWTON_LIMIT super-symbols) it hands over to an active-set Newton method
    on the output distribution after a short warm-up.
    """
    if not (slope < 0 and math.isfinite(slope)):
        raise ValueError(f"slope must be negative and finite, got {slope}")
    p = np.asarray(source.probs, dtype=float)
    if log_domain is None:
        log_domain = p.size > LOG_DOMAIN_ABOVE
    n_out = int(np.prod(_shape_out(source)))
    if polish is None:
        polish = max(p.size, n_out) <= NEWTON_LIMIT
    kern = _Kernel(source, slope, log_domain)
    q = _default_output(source) if q0 is None else np.asarray(q0, dtype=float)
    support = p > 0
    with np.errstate(divide="ignore"):
        logp = np.log(p)
        lq = np.log(q / q.sum())

    def evaluate(x):
        return _BAState(kern, p, logp, support, x)

    try:
        state = evaluate(lq)
        iters = 1
        warmup = WARMUP_ITERS if q0 is None else WARMUP_ITERS // 5
        budget = min(max_iters, warmup) if polish else max_iters
        while state.gap >= tol and iters < budget:
            state = evaluate(state.next_lq())
            iters += 1
        if polish and state.gap >= tol:
            newton = _NewtonPolisher(source, kern, p, support)
            while state.gap >= tol and iters < max_iters:
                nxt = newton.step(state, evaluate)
                iters += 1
                if nxt is not None:
                    state = nxt
                    continue
                # model step rejected: a few plain iterations before retrying
                for _ in range(RETRY_ITERS):
                    if state.gap < tol or iters >= max_iters:
                        break
                    state = evaluate(state.next_lq())
                    iters += 1
    except FloatingPointError:
        if log_domain:
            raise
        return ba_point(source, slope, tol, max_iters, q0, log_domain=True, polish=polish)

    if log_domain:
        D = kern.expected_distortion(state.w, state.lq)
    else:
        D = kern.expected_distortion(np.exp(state.w), np.exp(state.lq))
    R = max(0.0, (slope * D + state.objective - state.upper) / LN2)
    if state.gap >= tol:
        raise NoConvergence(
            f"gap {state.gap:.3e} bits after {iters} iterations at slope {slope}", state.gap
        )
    return RDPoint(D=D, R=R, slope=slope, iters=iters, gap=max(state.gap, 0.0),
                   output=np.exp(state.lq))


class _NewtonPolisher:
    """Active-set Newton steps for min_q -sum_x p(x) log (K q)(x) on the simplex.

    Components with tiny mass that the step would drive negative are moved to
    the boundary and the system is re-solved on the rest, so the simplex
    constraint never redistributes their (huge, fictitious) step. The
    Hessian A^T A is nearly singular when kernel columns are close to
    collinear (small |slope|), so the system is also damped Levenberg-Marquardt
    style: the ridge grows after a rejected step and shrinks after a success.
    """

    RIDGE_MIN = 1e-12
    RIDGE_MAX = 1e4
    ATTEMPTS = 8
    TINY = 1e-4
    ACTIVE_ROUNDS = 8

    def __init__(self, source, kern: _Kernel, p, support):
        self.logK = kern.slope * _cached_distortion_matrix(source)[support]
        self.half_logp = 0.5 * np.log(p[support])
        self.support = support
        self.ridge = self.RIDGE_MIN

    def _direction(self, H0, g, qf, scale):
        """Newton direction on the free block; tiny components it would drive
        negative are sent to the boundary and their mass is handed to the rest."""
        pinned = np.zeros(len(qf), dtype=bool)
        tiny = qf < self.TINY * qf.max()
        for _ in range(self.ACTIVE_ROUNDS):
            idx = np.flatnonzero(~pinned)
            out = np.flatnonzero(pinned)
            H = H0[np.ix_(idx, idx)]
            H[np.diag_indices_from(H)] += self.ridge * scale
            cho = cho_factor(H)
            ones = np.ones(len(idx))
            rhs = g[idx] + H0[np.ix_(idx, out)] @ qf[out]
            Hg = cho_solve(cho, rhs)
            H1 = cho_solve(cho, ones)
            mu = (float(ones @ Hg) - float(qf[out].sum())) / float(ones @ H1)
            delta = -qf.copy()
            delta[idx] = Hg - mu * H1
            leaving = ~pinned & tiny & (qf + delta <= 0)
            if not leaving.any():
                break
            pinned |= leaving
        return delta

    def step(self, state: _BAState, evaluate):
        q = np.exp(state.lq)
        c = np.exp(state.logc)
        free = np.flatnonzero((q > 1e-13 * q.max()) | (c > 1.0))
        # rows of sqrt(p(x)) K(x, t) / Z(x), so H = A^T A
        logA = self.logK[:, free] + (self.half_logp - state.logZ[self.support])[:, None]
        A = np.exp(logA)
        H0 = A.T @ A
        scale = max(float(np.trace(H0)) / len(free), 1e-300)
        g = c[free]
        qf = q[free]
        noise = 1e-14 * max(1.0, abs(state.objective))
        for _ in range(self.ATTEMPTS):
            try:
                delta = self._direction(H0, g, qf, scale)
            except np.linalg.LinAlgError:
                self.ridge = min(self.ridge * 100.0, self.RIDGE_MAX)
                continue
            # projected step: remaining overshoots are clipped rather than blocking
            alpha = 1.0
            for _ in range(4):
                new = q.copy()
                new[free] = np.maximum(qf + alpha * delta, FLOOR * qf)
                with np.errstate(divide="ignore"):
                    cand = evaluate(np.log(new / new.sum()))
                if cand.objective < state.objective - noise or (
                    cand.objective <= state.objective + noise and cand.gap < state.gap
                ):
                    self.ridge = max(self.ridge * 0.1, self.RIDGE_MIN)
                    return cand
                alpha *= 0.5
            if self.ridge >= self.RIDGE_MAX:
                break
            self.ridge = min(self.ridge * 100.0, self.RIDGE_MAX)
        return None


def rd_at_distortion(
    source,
    D: float,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    log_domain: bool | None = None,
    q0=None,
) -> RDPoint:
    """R(D) by a safeguarded secant search on the slope.

    When the achieved distortion cannot be brought within tolerance of D
    (a straight piece of the curve), R is read off the chord between the
    two bracketing points.
    """
    if not D > 0:
        raise ValueError("distortion level must be > 0")
    dz = d_zero(source)
    if D >= dz:
        return RDPoint(D=D, R=0.0, slope=0.0, iters=0, gap=0.0)
    dtol = max(1e-9, 1e-6 * D)

    def run(s, start):
        # In the flat zero-rate region the optimum is the default point-mass
        # start, which a spread-out warm start can take very long to reach.
        # One evaluation of the default start detects that case.
        if start is not None:
            try:
                return ba_point(source, s, tol, 1, log_domain=log_domain)
            except NoConvergence:
                pass
        try:
            return ba_point(source, s, tol, max_iters, q0=start, log_domain=log_domain)
        except NoConvergence:
            if start is None:
                raise
        log.debug("warm start stalled at slope %g; restarting cold", s)
        return ba_point(source, s, tol, max_iters, log_domain=log_domain)

    # lower end: D_s <= D; upper end: the zero-rate point (d_zero, 0) as s -> 0
    s_lo = SLOPE_BRACKET[0]
    lo = run(s_lo, q0)
    while lo.D > D:
        s_lo *= 2.0
        if s_lo < -1e6:
            raise NoConvergence(f"distortion {D} not reachable down to slope {s_lo}")
        lo = run(s_lo, lo.output)
    if abs(lo.D - D) <= dtol:
        return _finish(lo, D)
    hi = RDPoint(D=dz, R=0.0, slope=SLOPE_BRACKET[1], iters=0, gap=0.0)
    s_hi = SLOPE_BRACKET[1]
    logD = math.log(D)

    def resid(pt):
        # log D_s is close to affine in s on the steep part of the curve
        return math.log(max(pt.D, 1e-300)) - logD

    f_lo, f_hi = resid(lo), resid(hi)
    side = 0
    for _ in range(200):
        # Illinois regula falsi on log D_s - log D
        s = s_hi - f_hi * (s_hi - s_lo) / (f_hi - f_lo)
        if not (s_lo < s < s_hi):
            s = 0.5 * (s_lo + s_hi)
        start = lo.output if hi.output is None or abs(s - s_lo) < abs(s - s_hi) else hi.output
        pt = run(s, start)
        if abs(pt.D - D) <= dtol:
            return _finish(pt, D)
        f = resid(pt)
        if f < 0:
            s_lo, lo, f_lo = s, pt, f
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            s_hi, hi, f_hi = s, pt, f
            if side == 1:
                f_lo *= 0.5
            side = 1
        if s_hi - s_lo <= 1e-13 * abs(s_lo):
            break
    # straight segment between lo and hi
    t = (D - lo.D) / (hi.D - lo.D)
    R = (1.0 - t) * lo.R + t * hi.R
    return RDPoint(D=D, R=max(R, 0.0), slope=s_lo, iters=lo.iters + hi.iters, gap=max(lo.gap, hi.gap),
                   output=lo.output)


def _finish(pt: RDPoint, D: float) -> RDPoint:
    R = max(0.0, pt.R + pt.slope / LN2 * (D - pt.D))
    return RDPoint(D=D, R=R, slope=pt.slope, iters=pt.iters, gap=pt.gap, output=pt.output)


def rd_curve(source, D_grid, tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS,
             log_domain: bool | None = None) -> RDCurve:
    D_grid = np.asarray(D_grid, dtype=float)
    if np.any(D_grid <= 0) or np.any(np.diff(D_grid) <= 0):
        raise ValueError("D grid must be strictly increasing and positive")
    points = []
    q = None
    for D in D_grid:
        pt = rd_at_distortion(source, float(D), tol, max_iters, log_domain=log_domain, q0=q)
        if pt.output is not None:
            q = pt.output
        points.append(pt)
    curve = RDCurve(points, getattr(source, "origin", None))
    validate_curve(curve)
    return curve


def validate_curve(curve: RDCurve, slack: float = 1e-6) -> None:
    D, R = curve.D, curve.R
    if np.any(np.diff(R) > slack):
        raise InvalidCurve(f"rate increases along the D grid: {R}")
    for i in range(1, len(D) - 1):
        t = (D[i] - D[i - 1]) / (D[i + 1] - D[i - 1])
        chord = (1 - t) * R[i - 1] + t * R[i + 1]
        if R[i] > chord + slack:
            raise InvalidCurve(f"convexity violated at D = {D[i]}: {R[i]} > {chord}")


# ---------------------------------------------------------------- oracles


def _simplex_grid(n: int, steps: int) -> np.ndarray:
    rows = [c for c in itertools.product(range(steps + 1), repeat=n - 1) if sum(c) <= steps]
    rows = np.array(rows, dtype=float).reshape(len(rows), n - 1)
    return np.hstack([rows, steps - rows.sum(axis=1, keepdims=True)]) / steps


def brute_force_rd(source, D: float, grid_step: float = 0.01, max_channels: int = 5 * 10**7) -> float:
    """min I(X;Y) over test channels whose rows lie on a regular simplex grid.

    Independent of the alternating-minimization path; an upper bound on R(D)
    that is tight to O(grid_step).
    """
    p = np.asarray(source.probs, dtype=float)
    dmat = full_distortion_matrix(source)
    n_in, n_out = dmat.shape
    if n_in > 3 or n_out > 3:
        raise AlphabetTooLarge(f"{n_in}x{n_out} super-symbols; the oracle handles at most 3")
    steps = round(1.0 / grid_step)
    rows = _simplex_grid(n_out, steps)
    if len(rows) ** n_in > max_channels:
        raise AlphabetTooLarge(f"{len(rows)}^{n_in} channels exceeds {max_channels}")
    per_row_dist = rows @ dmat.T  # (grid, n_in): distortion of each candidate row for each input

    best = math.inf
    # enumerate the first n_in - 1 rows, vectorize over the last
    for combo in itertools.product(range(len(rows)), repeat=n_in - 1):
        base_out = np.zeros(n_out)
        base_dist = 0.0
        for i, r in enumerate(combo):
            base_out += p[i] * rows[r]
            base_dist += p[i] * per_row_dist[r, i]
        last = n_in - 1
        dist = base_dist + p[last] * per_row_dist[:, last]
        ok = dist <= D + 1e-12
        if not ok.any():
            continue
        W = rows[ok]
        out = base_out[None, :] + p[last] * W
        info = np.zeros(len(W))
        for i, r in enumerate(combo):
            if p[i] > 0:
                info += p[i] * _row_info(rows[r][None, :], out)
        if p[last] > 0:
            info += p[last] * _row_info(W, out)
        best = min(best, float(info.min()))
    return max(best, 0.0)


def _row_info(W, out):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(W > 0, W * np.log2(W / out), 0.0)
    return terms.sum(axis=1)
