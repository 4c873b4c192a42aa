"""Dirichlet series of multiplicative functions: evaluation, log-derivatives,
zero location on the 1-line, and two quadrature checks (a mean-value
inequality and a Parseval identity)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels
from .multfun import (
    MultiplicativeSpec,
    OrdinateMultiset,
    ValueTable,
    eval_range,
    f_gamma,
)
from .primes import FactorTable
from .sums import lambda_f_gamma

# psi(x) < 1.03883 x for all x > 0 (Rosser & Schoenfeld 1962)
PSI_CONSTANT = 1.03883
EPS = np.finfo(float).eps

DEFAULT_THRESHOLD = 0.05
DEFAULT_GRID_STEP = 0.01
SLOPE_OFFSETS = (10**-1.0, 10**-1.5, 10**-2.0)
SLOPE_TOL = 0.25
# slope points whose value moves by more than this between X/10 and X are unresolved
CONVERGENCE_TOL = 0.1


@dataclass
class EvalResult:
    value: complex
    truncation: int
    tail_bound: float
    heuristic: bool = False

    def contains(self, target: complex) -> bool:
        return abs(self.value - target) <= self.tail_bound


def divisor_tail_bound(D: int, sigma: float, N: int) -> float:
    """Upper bound for ``sum_{n>N} tau_D(n) n^{-sigma}``, ``sigma > 1``.

    Uses ``sum_{n<=u} tau_D(n) <= u (1 + log u)^{D-1}`` and partial summation:
    ``sigma * int_N^inf u^{-sigma} (1 + log u)^{D-1} du`` in closed form.
    """
    if sigma <= 1:
        raise ValueError("tail bound needs sigma > 1")
    D = max(int(D), 1)
    L = 1.0 + math.log(N)
    s1 = sigma - 1.0
    total = 0.0
    for j in range(D):
        total += math.perm(D - 1, j) * L ** (D - 1 - j) / s1 ** (j + 1)
    return sigma * N ** (1.0 - sigma) * total


def prime_power_tail_bound(sigma: float, N: int) -> float:
    """Upper bound for ``sum_{n>N} Lambda(n) n^{-sigma}``."""
    if sigma <= 1:
        raise ValueError("tail bound needs sigma > 1")
    return PSI_CONSTANT * sigma * N ** (1.0 - sigma) / (sigma - 1.0)


def _values_for(spec: MultiplicativeSpec, N: int, table: FactorTable, values: ValueTable | None) -> ValueTable:
    if values is not None:
        if values.limit < N:
            raise ValueError(f"value table limit {values.limit} < N={N}")
        return values
    return eval_range(spec, N, table)


def evaluate_L(spec: MultiplicativeSpec, s: complex, N: int, table: FactorTable,
               values: ValueTable | None = None) -> EvalResult:
    """``sum_{n<=N} f(n) n^{-s}`` with a rigorous tail bound for ``Re s > 1``
    (valid whenever ``|f| <= tau_D``, ``D = spec.declared_D``)."""
    s = complex(s)
    if s.real <= 1:
        raise ValueError("evaluate_L needs Re(s) > 1; use evaluate_L_on_line on the 1-line")
    table.check_range(N, "N")
    F = _values_for(spec, N, table, values)
    val = complex(kernels.dirichlet_sum(F.values, s.real, s.imag, int(N)))
    if spec.declared_D == 0:
        tail = 0.0
    else:
        tail = divisor_tail_bound(spec.declared_D, s.real, N)
    # accumulated rounding of the finite sum
    mags = np.abs(F.values[1 : N + 1]) * np.arange(1, N + 1, dtype=np.float64) ** -s.real
    nnz = int(np.count_nonzero(mags))
    # a lone n = 1 term is exact; otherwise allow a few ulps per addition
    tail += 4 * max(nnz - 1, 0) * EPS * float(np.sum(mags))
    return EvalResult(val, int(N), tail, False)


# ---------------------------------------------------------------------------
# the 1-line


def _line_sum_prefix(prefix: np.ndarray, t: float, X: int) -> complex:
    """``S(X) X^{-1-it} + sum_{n<X} S(n) (n^{-1-it} - (n+1)^{-1-it})``: the exact
    per-unit-interval integration of ``(1+it) int_1^X S(u) u^{-2-it} du``."""
    acc = 0j
    chunk = 1 << 20
    for lo in range(1, X, chunk):
        hi = min(X - 1, lo + chunk - 1)
        n = np.arange(lo, hi + 2, dtype=np.float64)
        pw = np.exp(-(1.0 + 1j * t) * np.log(n))
        acc += np.sum(prefix[lo : hi + 1] * (pw[:-1] - pw[1:]))
    return complex(acc + prefix[X] * np.exp(-(1.0 + 1j * t) * math.log(X)))


def evaluate_L_on_line(spec: MultiplicativeSpec, gammas: OrdinateMultiset, t: float, X: int,
                       table: FactorTable, values: ValueTable | None = None) -> EvalResult:
    """Estimate ``L(1+it, f_Gamma)`` by partial summation against the prefix sums
    of ``f_Gamma`` up to ``X``. The tail estimate ``|S(X)| (1+|t|)/X`` is heuristic."""
    table.check_range(X, "X")
    F = values if values is not None else f_gamma(spec, gammas, X, table)
    val = _line_sum_prefix(F.prefix, float(t), int(X))
    tail = abs(F.prefix[X]) * (1.0 + abs(t)) / X
    return EvalResult(val, int(X), float(tail), True)


class LineEvaluator:
    """Fast ``sum_{n<=X} w_n n^{-it}`` for many ``|t| <= t_max``.

    ``n`` is grouped into bins of width ``h = 1/t_max`` in ``log n``; inside a
    bin, ``exp(-it (log n - c_b))`` is expanded to ``order`` Taylor terms, so
    the precomputation is one pass over ``[1, X]`` and each ``t`` costs
    ``O(bins * order)``.
    """

    def __init__(self, weights: np.ndarray, t_max: float, order: int = 18):
        self.N = weights.shape[0] - 1
        self.t_max = float(max(t_max, 1.0))
        self.width = 1.0 / self.t_max
        self.nbins = max(1, int(math.log(max(self.N, 2)) / self.width) + 1)
        self.order = order
        self.moments = kernels.log_moments(weights, self.width, self.nbins, order)
        self.centers = (np.arange(self.nbins) + 0.5) * self.width
        self._live = np.flatnonzero(np.any(self.moments != 0, axis=1))

    @classmethod
    def on_line(cls, F: ValueTable, t_max: float, sigma: float = 1.0, order: int = 18) -> "LineEvaluator":
        n = np.arange(F.limit + 1, dtype=np.float64)
        n[0] = 1.0
        w = F.values * n**-sigma
        w[0] = 0.0
        return cls(w, t_max, order)

    def __call__(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
        if np.any(np.abs(ts) > self.t_max * (1 + 1e-12)):
            raise ValueError(f"|t| exceeds evaluator range {self.t_max}")
        M = self.moments[self._live]
        c = self.centers[self._live]
        out = np.empty(ts.shape[0], dtype=np.complex128)
        for lo in range(0, ts.shape[0], 512):
            tt = ts[lo : lo + 512, None]
            z = -1j * tt
            acc = np.broadcast_to(M[:, self.order], (tt.shape[0], M.shape[0])).astype(np.complex128)
            for k in range(self.order - 1, -1, -1):
                acc = acc * z + M[:, k]
            out[lo : lo + 512] = np.sum(acc * np.exp(-1j * tt * c), axis=1)
        return out


# ---------------------------------------------------------------------------
# log-derivative


def log_deriv(spec: MultiplicativeSpec, s: complex, N: int, table: FactorTable,
              gammas: OrdinateMultiset | None = None) -> EvalResult:
    """``-L'/L(s, f_Gamma) = sum_{p^k <= N} Lambda_{f_Gamma}(p^k) p^{-ks}`` for ``Re s > 1``."""
    s = complex(s)
    if s.real <= 1:
        raise ValueError("log_deriv needs Re(s) > 1")
    table.check_range(N, "N")
    gammas = gammas or OrdinateMultiset()
    q, lam = lambda_f_gamma(spec, gammas, N, table)
    val = complex(kernels.sparse_poly(lam, np.log(q.astype(np.float64)), s.real, np.array([s.imag]))[0])
    D = spec.declared_D + gammas.m
    return EvalResult(val, int(N), D * prime_power_tail_bound(s.real, N), False)


# ---------------------------------------------------------------------------
# zero location


@dataclass
class ZeroCandidate:
    gamma: float
    grid_min: float
    refined_min: float
    slope: float
    profile: list[tuple[float, float]]
    drift: float = 0.0

    @property
    def multiplicity(self) -> int:
        return int(round(self.slope))

    @property
    def ambiguous(self) -> bool:
        return abs(self.slope - round(self.slope)) > SLOPE_TOL or self.drift > CONVERGENCE_TOL

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma, "multiplicity": self.multiplicity, "slope_fit": self.slope, "drift": self.drift,
            "grid_min": self.grid_min, "refined_min": self.refined_min,
            "profile": [[a, b] for a, b in self.profile],
        }


@dataclass
class ZeroReport:
    ordinates: OrdinateMultiset
    T_scanned: float
    grid_step: float
    threshold: float
    X: int
    accepted: list[ZeroCandidate] = field(default_factory=list)
    ambiguous: list[ZeroCandidate] = field(default_factory=list)
    rejected: list[ZeroCandidate] = field(default_factory=list)
    declared_D: int | None = None

    @property
    def residual_profile(self) -> list[list[tuple[float, float]]]:
        return [c.profile for c in self.accepted]

    @property
    def within_D(self) -> bool:
        return self.declared_D is None or self.ordinates.m <= self.declared_D

    def to_dict(self) -> dict:
        return {
            "ordinates": [c.to_dict() for c in self.accepted],
            "T": self.T_scanned,
            "grid_step": self.grid_step,
            "threshold": self.threshold,
            "X": self.X,
            "ambiguous": [c.to_dict() for c in self.ambiguous],
            "rejected": [c.to_dict() for c in self.rejected],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def multiplicity_slope(F: ValueTable, gamma: float, X: int, offsets: Sequence[float] = SLOPE_OFFSETS
                       ) -> tuple[float, list[tuple[float, float]], float]:
    """Slope of ``log|L(1+d+i gamma)|`` against ``log d``.

    Also returns the drift: the largest relative change of a profile value
    when the truncation drops from ``X`` to ``X/10``.
    """
    prof = []
    drift = 0.0
    for d in offsets:
        v = complex(kernels.dirichlet_sum(F.values, 1.0 + d, float(gamma), int(X)))
        v_short = complex(kernels.dirichlet_sum(F.values, 1.0 + d, float(gamma), max(1, int(X) // 10)))
        drift = max(drift, abs(v - v_short) / max(abs(v), 1e-300))
        prof.append((float(d), float(abs(v))))
    xs = np.log([d for d, _ in prof])
    ys = np.log([max(v, 1e-300) for _, v in prof])
    slope = float(np.polyfit(xs, ys, 1)[0])
    return slope, prof, float(drift)


def scan_grid(T: float, grid_step: float) -> np.ndarray:
    n = int(round(2 * T / grid_step))
    return np.linspace(-T, T, n + 1)


def zero_scan(spec: MultiplicativeSpec, T: float, grid_step: float, X: int, table: FactorTable,
              threshold: float = DEFAULT_THRESHOLD, values: ValueTable | None = None,
              map_fn: Callable = map) -> ZeroReport:
    """Locate zeros ``1 + i gamma`` of ``L(s, f)`` with ``|gamma| <= T``.

    Grid local minima of ``|L(1+it)|`` below ``threshold`` are refined, then
    classified by the slope of ``log|L(sigma + i gamma)|`` against
    ``log(sigma - 1)``: integral slopes ``k >= 1`` are zeros of multiplicity
    ``k``. Non-integral slopes, or profiles that have not settled at this
    truncation, are reported as ambiguous and left out of the multiset.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if grid_step > 0.05:
        raise ValueError("grid_step must be <= 0.05")
    table.check_range(X, "X")
    F = _values_for(spec, X, table, values)
    ev = LineEvaluator.on_line(F, T)
    ts = scan_grid(T, grid_step)
    chunks = np.array_split(ts, max(1, len(ts) // 256))
    absL = np.concatenate(list(map_fn(lambda c: np.abs(ev(c)), chunks)))

    cands = []
    for i in range(len(ts)):
        v = absL[i]
        if v >= threshold:
            continue
        left = absL[i - 1] if i > 0 else np.inf
        right = absL[i + 1] if i + 1 < len(ts) else np.inf
        if v <= left and v < right:
            cands.append(i)

    def classify(i):
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
        res = minimize_scalar(lambda t: float(abs(ev(np.array([t]))[0])), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-7})
        gamma = float(res.x)
        slope, prof, drift = multiplicity_slope(F, gamma, X)
        return ZeroCandidate(gamma, float(absL[i]), float(res.fun), slope, prof, drift)

    found = list(map_fn(classify, cands))
    rep = ZeroReport(OrdinateMultiset(), float(T), float(grid_step), float(threshold), int(X),
                     declared_D=spec.declared_D)
    pairs = []
    for c in found:
        if c.ambiguous:
            rep.ambiguous.append(c)
        elif c.multiplicity < 1:
            rep.rejected.append(c)
        else:
            rep.accepted.append(c)
            pairs.append((c.gamma, c.multiplicity))
    rep.ordinates = OrdinateMultiset.from_pairs(pairs, resolution=grid_step)
    return rep


# ---------------------------------------------------------------------------
# quadrature


def adaptive_simpson(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, rel_tol: float = 1e-6,
                     abs_tol: float = 0.0, panels: int = 64, max_rounds: int = 40) -> tuple[float, float]:
    """Composite adaptive Simpson over ``[a, b]`` with a vectorized integrand.

    Panels are refined breadth-first until each one's Richardson error
    estimate is within its width-proportional share of
    ``max(abs_tol, rel_tol * |running estimate|)``. Returns ``(integral, error_estimate)``.
    """
    if b <= a:
        return 0.0, 0.0
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1], edges[1:]
    mid = 0.5 * (lo + hi)
    fv = f(np.concatenate([lo, mid, hi[-1:]]))
    f_lo, f_mid = fv[:panels], fv[panels : 2 * panels]
    f_hi = np.concatenate([f_lo[1:], fv[-1:]])
    whole = (hi - lo) / 6 * (f_lo + 4 * f_mid + f_hi)
    done_val: list[np.ndarray] = []
    done_err: list[np.ndarray] = []
    done_key: list[np.ndarray] = []
    width = b - a
    for _ in range(max_rounds):
        if lo.size == 0:
            break
        q1, q3 = 0.5 * (lo + mid), 0.5 * (mid + hi)
        fq = f(np.concatenate([q1, q3]))
        f_q1, f_q3 = fq[: lo.size], fq[lo.size :]
        left = (mid - lo) / 6 * (f_lo + 4 * f_q1 + f_mid)
        right = (hi - mid) / 6 * (f_mid + 4 * f_q3 + f_hi)
        err = np.abs(left + right - whole) / 15
        estimate = abs(sum(float(np.sum(v)) for v in done_val) + float(np.sum(left + right)))
        tol = max(abs_tol, rel_tol * estimate)
        ok = err <= tol * (hi - lo) / width
        done_val.append((left + right + (left + right - whole) / 15)[ok])
        done_err.append(err[ok])
        done_key.append(lo[ok])
        nk = ~ok
        lo, mid, hi = lo[nk], mid[nk], hi[nk]
        f_lo, f_mid, f_hi, f_q1, f_q3 = f_lo[nk], f_mid[nk], f_hi[nk], f_q1[nk], f_q3[nk]
        left, right = left[nk], right[nk]
        # split each survivor into two panels
        lo, mid, hi = np.concatenate([lo, mid]), np.concatenate([q1[nk], q3[nk]]), np.concatenate([mid, hi])
        f_lo, f_mid, f_hi = np.concatenate([f_lo, f_mid]), np.concatenate([f_q1, f_q3]), np.concatenate([f_mid, f_hi])
        whole = np.concatenate([left, right])
    if lo.size:
        done_val.append(whole)
        done_err.append(np.full(lo.size, np.inf))
        done_key.append(lo)
    keys = np.concatenate(done_key)
    order = np.argsort(keys, kind="stable")
    vals = np.concatenate(done_val)[order]
    errs = np.concatenate(done_err)[order]
    return math.fsum(vals.tolist()), float(np.sum(errs))


def _poly_abs2(coeffs: np.ndarray, sigma: float):
    n = np.arange(1, coeffs.shape[0] + 1, dtype=np.float64)
    nz = np.flatnonzero(coeffs)
    w = coeffs[nz].astype(np.complex128)
    logs = np.log(n[nz])

    def f(ts):
        return np.abs(kernels.sparse_poly(w, logs, sigma, np.ascontiguousarray(ts, dtype=np.float64))) ** 2

    return f


@dataclass
class MeanValueResult:
    lhs: float
    rhs: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.slack

    def __iter__(self):
        return iter((self.lhs, self.rhs))


def montgomery_check(a: Sequence[complex], b: Sequence[float], sigma: float, T: float,
                     rel_tol: float = 1e-6) -> MeanValueResult:
    """``int_{-T}^T |A(sigma+it)|^2 dt`` against ``3 int_{-T}^T |B(sigma+it)|^2 dt``
    for Dirichlet polynomials with coefficients ``a_n, b_n`` (list index ``n - 1``)."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("coefficient lists differ in length")
    if np.any(np.abs(a) > b * (1 + 1e-12)):
        raise ValueError("coefficient domination |a_n| <= b_n violated")
    if sigma <= 1:
        raise ValueError("sigma must exceed 1")
    rhs_int, rerr = adaptive_simpson(_poly_abs2(b, sigma), -T, T, rel_tol)
    rhs = 3 * rhs_int
    lhs, lerr = adaptive_simpson(_poly_abs2(a, sigma), -T, T, rel_tol=0, abs_tol=rel_tol * rhs_int)
    return MeanValueResult(lhs, rhs, 3 * rerr + lerr + rel_tol * rhs)


@dataclass
class ParsevalResult:
    lhs: float
    rhs: float
    tail_beyond_X: float
    quad_error: float
    cf_estimate: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0:
            return 1.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs

    def __iter__(self):
        return iter((self.lhs, self.rhs))

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio, "tail_beyond_X": self.tail_beyond_X,
                "quad_error": self.quad_error, "cf_estimate": self.cf_estimate}


def lambda_step_integral(q: np.ndarray, lam: np.ndarray, X: int, alpha: float) -> tuple[float, float]:
    """``int_1^X |S(t)|^2 t^{-alpha} dt`` for the step function ``S(t) = sum_{q<=t} lam``,
    integrated exactly on each step; also returns the constant tail ``int_X^inf``."""
    keep = q <= X
    q, lam = q[keep].astype(np.float64), lam[keep]
    S2 = np.abs(np.cumsum(lam)) ** 2
    ends = np.concatenate([q[1:], [float(X)]])
    seg = (q ** (1 - alpha) - ends ** (1 - alpha)) / (alpha - 1)
    body = math.fsum((S2 * seg).tolist())
    tail = float(S2[-1]) * X ** (1 - alpha) / (alpha - 1) if S2.size else 0.0
    return body, tail


def parseval_ratio(spec: MultiplicativeSpec, gammas: OrdinateMultiset, x: float, T_big: float, X: int,
                   table: FactorTable, rel_tol: float = 1e-6) -> ParsevalResult:
    """Both sides of the Parseval identity for ``S(t, Lambda_{f_Gamma})`` at ``c = 1 + 1/log x``.

    ``lhs = int_1^X |S(t)|^2 t^{-3-2/log x} dt``; ``rhs = (1/2pi) int_{|t|<=T_big}
    |L'/L(c+it)|^2 / (c^2+t^2) dt`` with ``L'/L`` truncated at ``X``.
    """
    table.check_range(X, "X")
    c = 1.0 + 1.0 / math.log(x)
    q, lam = lambda_f_gamma(spec, gammas, X, table)
    lhs, tailX = lambda_step_integral(q, lam, X, 2 * c + 1)
    nz = np.flatnonzero(lam)
    if nz.size == 0:
        return ParsevalResult(0.0, 0.0, 0.0, 0.0, 0.0)
    w, logs = lam[nz], np.log(q[nz].astype(np.float64))

    def integrand(ts):
        P = kernels.sparse_poly(w, logs, c, np.ascontiguousarray(ts))
        return np.abs(P) ** 2 / (c * c + ts * ts)

    integral, err = adaptive_simpson(integrand, -T_big, T_big, rel_tol, panels=max(64, int(8 * T_big)))
    rhs = integral / (2 * math.pi)
    # C_f(T) diagnostic on a coarse box right of the 1-line
    tt = np.linspace(-min(T_big, 50.0), min(T_big, 50.0), 201)
    cf = max(float(np.max(np.abs(kernels.sparse_poly(w, logs, sg, tt)) ** 2)) for sg in (c, 1.25, 1.5, 2.0))
    return ParsevalResult(lhs, rhs, tailX, err / (2 * math.pi), cf)


def parseval_closed_form(q: np.ndarray, lam: np.ndarray, c: float) -> float:
    """``(1/2pi) int_R |sum lam_j q_j^{-c-it}|^2/(c^2+t^2) dt
    = (1/2c) sum_{i,j} w_i conj(w_j) exp(-c |log q_i - log q_j|)``, ``w = lam q^{-c}``."""
    logs = np.log(q.astype(np.float64))
    w = lam * np.exp(-c * logs)
    total = 0.0
    for lo in range(0, w.shape[0], 2048):
        blk = np.exp(-c * np.abs(logs[lo : lo + 2048, None] - logs[None, :]))
        total += float(np.real(np.sum((w[lo : lo + 2048, None] * np.conj(w)[None, :]) * blk)))
    return total / (2 * c)

