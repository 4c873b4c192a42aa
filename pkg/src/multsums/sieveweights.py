"""Upper and lower combinatorial sieve weights (beta-sieve truncation of mu).

For squarefree ``d = p_1 p_2 ... p_r`` with ``p_1 > p_2 > ... > p_r`` in the
prime set ``P``, write ``y = z^u`` for the level. ``lambda_plus(d) = mu(d)``
when ``p_1 ... p_{m-1} p_m^(beta+1) <= y`` for every odd ``m <= r`` and zero
otherwise; ``lambda_minus`` imposes the same test at every even ``m``.

Each condition only looks at a prefix of the descending factorization, so
both supports are closed under dropping the smallest prime. That closure is
what makes ``1 * lambda_minus <= 1_{(n, P)=1} <= 1 * lambda_plus`` hold
combinatorially; :func:`sandwich_check` verifies it exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .multfun import MultiplicativeSpec
from .primes import FactorTable

DEFAULT_BETA = 2
DEFAULT_CAP = 5_000_000


class SupportCapError(RuntimeError):
    """Weight support grew past the configured cap."""


def _level(z: float, u: float) -> int:
    """Largest integer ``<= z^u``, exact when both are integers."""
    if float(z).is_integer() and float(u).is_integer():
        return int(z) ** int(u)
    return math.floor(float(z) ** float(u))


@dataclass(frozen=True, eq=False)
class SieveSystem:
    """Sparse weights on squarefree ``d | prod P``.

    Arrays are stored in DFS preorder, so ``parent[i] < i`` and
    ``d[i] = d[parent[i]] * last[i]``; entry 0 is ``d = 1``.
    """

    z: float
    u: float
    primes: tuple[int, ...]
    beta: int
    level: int
    d: np.ndarray = field(repr=False)
    lambda_plus: np.ndarray = field(repr=False)
    lambda_minus: np.ndarray = field(repr=False)
    parent: np.ndarray = field(repr=False)
    last: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.d.shape[0])

    def weights(self, sign: int) -> np.ndarray:
        return self.lambda_plus if sign > 0 else self.lambda_minus

    def as_dict(self, sign: int) -> dict[int, int]:
        w = self.weights(sign)
        nz = np.flatnonzero(w)
        return dict(zip(self.d[nz].tolist(), w[nz].tolist()))

    def multiplicative_values(self, spec: MultiplicativeSpec) -> np.ndarray:
        """``spec(d)`` for every stored ``d`` (squarefree, so one prime value each)."""
        pv = {p: spec(p, 1) for p in self.primes}
        out = np.empty(self.size, dtype=np.complex128)
        out[0] = 1.0
        for i in range(1, self.size):
            out[i] = out[self.parent[i]] * pv[int(self.last[i])]
        return out

    def to_csv(self) -> str:
        order = np.argsort(self.d, kind="stable")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["d", "lambda_plus", "lambda_minus"])
        for i in order.tolist():
            w.writerow([int(self.d[i]), int(self.lambda_plus[i]), int(self.lambda_minus[i])])
        return buf.getvalue()


def build_weights(z: float, u: float, P: Sequence[int] | None = None, beta: int = DEFAULT_BETA,
                  cap: int = DEFAULT_CAP) -> SieveSystem:
    """Enumerate the beta-sieve supports by descending-prime DFS."""
    if z < 2:
        raise ValueError("z must be >= 2")
    if u < 1:
        raise ValueError("u must be >= 1")
    if P is None:
        from .primes import build_factor_table
        P = build_factor_table(max(2, math.floor(z))).primes_upto(z).tolist()
    P = sorted({int(p) for p in P}, reverse=True)
    if any(p > z or p < 2 for p in P):
        raise ValueError("P must consist of primes <= z")
    y = _level(z, u)
    e = beta + 1

    ds, lp, lm, par, last = [1], [1], [1], [-1], [0]
    # stack entries: (index, d, r, plus_alive, minus_alive, next prime position)
    stack = [(0, 1, 0, True, True, 0)]
    while stack:
        idx, d, r, ap, am, start = stack.pop()
        m = r + 1
        children = []
        for j in range(start, len(P)):
            p = P[j]
            ok = d * p**e <= y
            cp = ap and (ok or m % 2 == 0)
            cm = am and (ok or m % 2 == 1)
            if not (cp or cm):
                continue
            dd = d * p
            if dd > y:
                raise AssertionError(f"support element {dd} exceeds level {y}")
            sign = -1 if m % 2 else 1
            ds.append(dd)
            lp.append(sign if cp else 0)
            lm.append(sign if cm else 0)
            par.append(idx)
            last.append(p)
            if len(ds) > cap:
                raise SupportCapError(
                    f"sieve support exceeds cap {cap} at z={z}, u={u}; use a smaller u or z"
                )
            children.append((len(ds) - 1, dd, m, cp, cm, j + 1))
        # reversed so the smallest-index child is expanded first (plain preorder)
        stack.extend(reversed(children))

    return SieveSystem(
        z=float(z), u=float(u), primes=tuple(sorted(P)), beta=int(beta), level=y,
        d=np.array(ds, dtype=np.int64),
        lambda_plus=np.array(lp, dtype=np.int64),
        lambda_minus=np.array(lm, dtype=np.int64),
        parent=np.array(par, dtype=np.int64),
        last=np.array(last, dtype=np.int64),
    )


@dataclass
class SandwichReport:
    N: int
    violations: list[tuple[int, int, int, int]]  # (n, lower, indicator, upper)
    n_violations: int
    support_plus: int
    support_minus: int

    @property
    def passed(self) -> bool:
        return self.n_violations == 0

    def to_dict(self) -> dict:
        return {
            "N": self.N, "passed": self.passed, "n_violations": self.n_violations,
            "violations": [list(v) for v in self.violations],
            "support_plus": self.support_plus, "support_minus": self.support_minus,
        }


def coprime_indicator(primes: Sequence[int], N: int) -> np.ndarray:
    """``1_{(n, prod primes) = 1}`` on ``[0..N]`` as int64 (index 0 is 0)."""
    ind = np.ones(N + 1, dtype=np.int64)
    ind[0] = 0
    for p in primes:
        ind[p::p] = 0
    return ind


def divisor_sums(sys: SieveSystem, sign: int, N: int) -> np.ndarray:
    """``(1 * lambda)(n)`` for ``n <= N`` in exact integers."""
    w = sys.weights(sign)
    nz = np.flatnonzero(w)
    keep = nz[sys.d[nz] <= N]
    return kernels.divisor_scatter(sys.d[keep], w[keep], int(N))


def sandwich_check(sys: SieveSystem, N: int, table: FactorTable | None = None,
                   keep: int = 20) -> SandwichReport:
    """Exact check of ``1*lambda_minus <= indicator <= 1*lambda_plus`` on ``[1, N]``."""
    if table is not None:
        table.check_range(N, "N")
    lo = divisor_sums(sys, -1, N)
    hi = divisor_sums(sys, +1, N)
    ind = coprime_indicator(sys.primes, N)
    bad = np.flatnonzero((lo[1:] > ind[1:]) | (ind[1:] > hi[1:])) + 1
    return SandwichReport(
        N=int(N),
        violations=[(int(n), int(lo[n]), int(ind[n]), int(hi[n])) for n in bad[:keep]],
        n_violations=int(bad.size),
        support_plus=int(np.count_nonzero(sys.lambda_plus)),
        support_minus=int(np.count_nonzero(sys.lambda_minus)),
    )


def sifted_count_bounds(sys: SieveSystem, N: int) -> tuple[int, int, int]:
    """``(sum lambda_minus(d) [N/d], #{n <= N coprime to P}, sum lambda_plus(d) [N/d])``."""
    q = N // sys.d
    lower = int(np.dot(sys.lambda_minus, q))
    upper = int(np.dot(sys.lambda_plus, q))
    count = int(coprime_indicator(sys.primes, N).sum())
    return lower, count, upper


@dataclass(frozen=True)
class MomentResult:
    sieved: float
    mobius: float
    scale: float

    @property
    def difference(self) -> float:
        return abs(self.sieved - self.mobius)

    @property
    def C_fit(self) -> float:
        return self.difference / self.scale if self.scale > 0 else 0.0

    def __iter__(self):
        return iter((self.sieved, self.mobius, self.scale))


def _nu_at_primes(nu: MultiplicativeSpec, primes: Sequence[int]) -> np.ndarray:
    vals = np.array([nu(p, 1) for p in primes], dtype=np.complex128)
    if np.any(np.abs(vals.imag) > 0):
        raise ValueError(f"nu={nu.name} must be real on P")
    vals = vals.real
    ps = np.asarray(primes, dtype=np.float64)
    if np.any(vals < 0) or np.any(vals >= ps):
        raise ValueError(f"nu={nu.name} must satisfy 0 <= nu(p) < p on P")
    return vals


def mobius_moment(primes: Sequence[int], nu_p: np.ndarray, r: int) -> float:
    """``sum_{d | prod P} mu(d) nu(d) (log d)^r / d`` via power series in ``x``.

    The sum is ``r!`` times the ``x^r`` coefficient of
    ``prod_p (1 - nu(p)/p * exp(x log p))``.
    """
    poly = np.zeros(r + 1)
    poly[0] = 1.0
    k = np.arange(r + 1)
    fact = np.array([math.factorial(i) for i in range(r + 1)], dtype=np.float64)
    for p, v in zip(primes, nu_p):
        lg = math.log(p)
        factor = -(v / p) * lg**k / fact
        factor[0] += 1.0
        poly = np.convolve(poly, factor)[: r + 1]
    return float(poly[r] * fact[r])


def moment_compare(sys: SieveSystem, nu: MultiplicativeSpec, r: int, sign: int = +1) -> MomentResult:
    """Compare the truncated moment against the full Mobius moment."""
    if r < 0:
        raise ValueError("r must be >= 0")
    nu_p = _nu_at_primes(nu, sys.primes)
    nu_d = sys.multiplicative_values(nu).real
    w = sys.weights(sign).astype(np.float64)
    d = sys.d.astype(np.float64)
    terms = w * nu_d * np.log(d) ** r / d
    sieved = math.fsum(terms.tolist())
    mobius = mobius_moment(sys.primes, nu_p, r)
    u = sys.u
    scale = math.log(sys.z) ** r * u ** (-u / 2) * float(np.prod(1.0 - nu_p / np.asarray(sys.primes, float)))
    return MomentResult(sieved=sieved, mobius=mobius, scale=scale)
