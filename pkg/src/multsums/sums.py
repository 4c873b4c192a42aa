"""Partial, sifted and prime sums, the hyperbola method, and the identity and
inequality checks built on them."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .multfun import (
    MultiplicativeSpec,
    OrdinateMultiset,
    ValueTable,
    dirichlet_inverse,
    eval_range,
    f_gamma,
    lambda_of,
    omega_power,
    prime_power_phase,
)
from .primes import FactorTable, build_factor_table, mertens_product, sifted_mask

DEFAULT_GRID = (10**3, 10**4, 10**5, 10**6, 10**7)


def fmt17(v: float) -> str:
    return format(float(v), ".17g")


@dataclass
class SumGrid:
    x_points: list[int]
    values: list[complex]
    label: str = ""

    def __post_init__(self):
        if len(self.x_points) != len(self.values):
            raise ValueError("x_points and values differ in length")
        if any(b <= a for a, b in zip(self.x_points, self.x_points[1:])):
            raise ValueError("x_points must be strictly increasing")

    def abs(self) -> np.ndarray:
        return np.abs(np.asarray(self.values, dtype=np.complex128))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re", "im", "abs"])
        for x, v in zip(self.x_points, self.values):
            w.writerow([x, fmt17(v.real), fmt17(v.imag), fmt17(abs(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, label: str = "") -> "SumGrid":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls([int(r["x"]) for r in rows], [complex(float(r["re"]), float(r["im"])) for r in rows], label)


# ---------------------------------------------------------------------------
# plain sums


def partial_sum(F: ValueTable, x: int) -> complex:
    if x > F.limit:
        raise ValueError(f"x={x} beyond table limit {F.limit}")
    return complex(F.prefix[max(0, int(x))])


def sifted_sum(F: ValueTable, z: float, x: int, table: FactorTable) -> complex:
    """Sum of ``F[n]`` over ``n <= x`` with ``P^-(n) > z``; ``n = 1`` always counts."""
    if x > min(F.limit, table.limit):
        raise ValueError(f"x={x} beyond table limits")
    if z < 2:
        return partial_sum(F, x)
    mask = sifted_mask(table, z, x)
    return complex(np.sum(F.values[: x + 1][mask]))


def _prime_values(spec: MultiplicativeSpec, table: FactorTable, x: int) -> tuple[np.ndarray, np.ndarray]:
    p = table.primes_upto(x)
    return spec.table(p, 1)[:, 1], table.log_primes[: p.shape[0]]


def prime_log_sum(spec: MultiplicativeSpec, x: int, table: FactorTable) -> complex:
    table.check_range(x, "x")
    fp, lp = _prime_values(spec, table, x)
    return complex(np.sum(fp * lp))


def discrepancy_terms(spec: MultiplicativeSpec, gammas: OrdinateMultiset, x: int,
                      table: FactorTable) -> np.ndarray:
    """``(f(p) + sum_gamma p^{i gamma}) log p`` for each prime ``p <= x``."""
    table.check_range(x, "x")
    p = table.primes_upto(x)
    fp, lp = _prime_values(spec, table, x)
    g = fp.copy()
    for gamma in gammas.expanded():
        g = g + prime_power_phase(p, 1, gamma)
    return g * lp


def discrepancy(spec: MultiplicativeSpec, gammas: OrdinateMultiset, x: int, table: FactorTable) -> complex:
    """``sum_{p<=x} (f(p) + sum_gamma p^{i gamma}) log p``."""
    return complex(np.sum(discrepancy_terms(spec, gammas, x, table)))


def discrepancy_grid(spec: MultiplicativeSpec, gammas: OrdinateMultiset, x_grid: Sequence[int],
                     table: FactorTable) -> SumGrid:
    xs = [int(x) for x in x_grid]
    terms = discrepancy_terms(spec, gammas, max(xs), table)
    cum = np.concatenate([[0j], np.cumsum(terms)])
    idx = np.searchsorted(table.primes, xs, side="right")
    return SumGrid(xs, [complex(cum[i]) for i in idx], f"discrepancy[{spec.name}]")


def lambda_f_gamma(spec: MultiplicativeSpec, gammas: OrdinateMultiset, x: int, table: FactorTable):
    """``Lambda_{f_Gamma}`` at every prime power ``<= x`` as ``(q, value)`` arrays, built from
    ``Lambda_f`` plus ``sum_gamma Lambda(n) n^{i gamma}``."""
    q, p, k = table.prime_powers
    cnt = int(np.searchsorted(q, x, side="right"))
    q, p, k = q[:cnt], p[:cnt], k[:cnt]
    amax = int(k.max()) if cnt else 1
    lam = lambda_of(spec, x, amax, primes=table.primes_upto(x))
    vals = lam.values[np.searchsorted(lam.primes, p), k]
    logp = np.log(p.astype(np.float64))
    for gamma in gammas.expanded():
        vals = vals + logp * prime_power_phase(p, k, gamma)
    return q, vals


def lambda_partial_sum(spec: MultiplicativeSpec, gammas: OrdinateMultiset, x: int, table: FactorTable) -> complex:
    """``S(x, Lambda_{f_Gamma})``."""
    table.check_range(x, "x")
    _, vals = lambda_f_gamma(spec, gammas, x, table)
    return complex(np.sum(vals))


# ---------------------------------------------------------------------------
# hyperbola method and Moebius inversion


def hyperbola_sum(F: ValueTable, G: ValueTable, x: int, split: int) -> complex:
    """``sum_{n<=x} (F*G)(n)`` split at ``a <= split``, ``b <= x/split``."""
    x, split = int(x), int(split)
    if x > min(F.limit, G.limit):
        raise ValueError(f"x={x} beyond table limits")
    if not 1 <= split <= x:
        raise ValueError("need 1 <= split <= x")
    a = np.arange(1, split + 1)
    b = np.arange(1, x // split + 1)
    first = np.sum(F.values[1 : split + 1] * G.prefix[x // a])
    second = np.sum(G.values[1 : x // split + 1] * F.prefix[x // b])
    return complex(first + second - F.prefix[split] * G.prefix[x // split])


def inversion_recover(G: Callable[[float], complex], h: MultiplicativeSpec, x: float,
                      table: FactorTable | None = None) -> complex:
    """``F(x) = sum_{n<=x} h^{-1}(n) G(x/n)``."""
    n_max = math.floor(x)
    if n_max < 1:
        return 0j
    if table is None or table.limit < n_max:
        table = build_factor_table(max(2, n_max))
    hinv = eval_range(dirichlet_inverse(h), n_max, table).values
    return complex(sum(hinv[n] * G(x / n) for n in range(1, n_max + 1) if hinv[n] != 0))


def convolve_step(h: MultiplicativeSpec, F0: Callable[[float], complex], table: FactorTable | None = None):
    """``G(x) = sum_{n<=x} h(n) F0(x/n)`` as a callable (used to build round trips)."""
    hv = np.zeros(1, dtype=np.complex128)

    def G(x: float) -> complex:
        nonlocal hv
        n_max = math.floor(x)
        if n_max < 1:
            return 0j
        if n_max >= hv.shape[0]:
            tab = table if table is not None and table.limit >= n_max else build_factor_table(max(2, n_max))
            hv = eval_range(h, n_max, tab).values
        return complex(sum(hv[n] * F0(x / n) for n in range(1, n_max + 1) if hv[n] != 0))

    return G


# ---------------------------------------------------------------------------
# the recursion identity


def recursion_check(spec: MultiplicativeSpec, gammas: OrdinateMultiset, x: int, table: FactorTable,
                    samples: int = 24) -> float:
    """Max over sampled ``x' <= x`` of
    ``|sum f_G(n) log n - sum Lambda_{f_G}(n) S(x'/n, f_G)|``."""
    x = int(x)
    table.check_range(x, "x")
    FG = f_gamma(spec, gammas, x, table)
    logn = np.log(np.maximum(np.arange(x + 1), 1).astype(np.float64))
    lhs_cum = np.cumsum(FG.values * logn)
    q, lam = lambda_f_gamma(spec, gammas, x, table)
    pts = sorted({int(v) for v in np.geomspace(1, x, samples)} | {x})
    worst = 0.0
    for xp in pts:
        cnt = int(np.searchsorted(q, xp, side="right"))
        rhs = np.sum(lam[:cnt] * FG.prefix[xp // q[:cnt]])
        worst = max(worst, abs(lhs_cum[xp] - rhs))
    return float(worst)


# ---------------------------------------------------------------------------
# inequality checks


def lattice_count_bound(a: Sequence[float], y: float, max_enum: int = 10**7) -> tuple[int, float]:
    """Count ``nu in N^k`` (all ``nu_j >= 1``) with ``sum a_j nu_j <= y``, against
    ``(y + sum a_j)^k / (k! prod a_j)``."""
    a = [float(v) for v in a]
    if not a or any(v <= 0 for v in a):
        raise ValueError("need a nonempty list of positive reals")
    if y < 0:
        raise ValueError("y must be >= 0")
    k = len(a)
    if math.prod(max(1.0, y / v) for v in a) > max_enum:
        raise ValueError("brute-force enumeration too large")
    bound = (y + sum(a)) ** k / (math.factorial(k) * math.prod(a))
    eps = 1e-12 * max(1.0, y)

    def count(j: int, rem: float) -> int:
        if j == k:
            return 1
        total = 0
        nu = 1
        tail = sum(a[j + 1 :])  # every later coordinate needs at least one step
        while a[j] * nu + tail <= rem + eps:
            total += count(j + 1, rem - a[j] * nu)
            nu += 1
        return total

    return count(0, y), bound


class NegativeValueError(ValueError):
    pass


def halasz_ratio(spec: MultiplicativeSpec, x: int, table: FactorTable, F: ValueTable | None = None) -> float:
    """``S(x) / (x exp(sum_{p<=x} (f(p) - 1)/p))`` for real nonnegative ``f``."""
    table.check_range(x, "x")
    F = F if F is not None else eval_range(spec, x, table)
    v = F.values[1 : x + 1]
    if np.any(np.abs(v.imag) > 1e-12) or np.any(v.real < -1e-12):
        raise NegativeValueError(f"{spec.name} is not real and nonnegative on [1, {x}]")
    p = table.primes_upto(x)
    fp = spec.table(p, 1)[:, 1].real
    expo = np.sum((fp - 1.0) / p)
    return float(F.prefix[x].real / (x * math.exp(expo)))


def sifted_power_sum_check(t: float, z: float, x: int, table: FactorTable) -> tuple[complex, complex, float]:
    """``sum_{n<=x, P^-(n)>z} n^{it}`` against ``x^{1+it}/(1+it) prod_{p<=z}(1-1/p)``."""
    if not x >= z >= 2:
        raise ValueError("need x >= z >= 2")
    table.check_range(x, "x")
    n = np.flatnonzero(sifted_mask(table, z, x))
    if t == 0:
        lhs = complex(n.shape[0])
    else:
        lhs = 0j
        for lo in range(0, n.shape[0], 1 << 21):
            lhs += complex(np.sum(np.exp(1j * t * np.log(n[lo : lo + (1 << 21)].astype(np.float64)))))
    s = complex(1.0, t)
    main = complex(np.exp(s * math.log(x)) / s * mertens_product(z, table))
    return lhs, main, abs(lhs - main) / abs(main)


@dataclass
class FitResult:
    D: int
    coefficients: list[float]
    x_grid: list[int]
    sums: list[float]
    residuals: list[float] = field(default_factory=list)

    @property
    def relative_residuals(self) -> list[float]:
        return [abs(r) / x for r, x in zip(self.residuals, self.x_grid)]


def dk_omega_fit(D: int, x_grid: Sequence[int], table: FactorTable) -> FitResult:
    """Weighted least-squares fit of ``S(x)/x`` against ``sum_{i<D} a_i (log x)^i`` where
    ``S(x) = sum_{n<=x, (n, k_D)=1} D^{Omega(n)}`` and ``k_D = prod_{p<=D^3} p``."""
    D = int(D)
    if D < 1:
        raise ValueError("D must be >= 1")
    xs = [int(v) for v in x_grid]
    xmax = max(xs)
    table.check_range(xmax, "x")
    if D**3 >= table.limit or D**3 >= min(xs):
        raise ValueError(f"D={D}: k_D needs primes up to {D**3}, too large for this grid/table")
    F = eval_range(omega_power(D), xmax, table)
    mask = sifted_mask(table, D**3, xmax)
    cum = np.cumsum(np.where(mask, F.values.real, 0.0))
    S = np.array([cum[x] for x in xs])
    logs = np.log(np.array(xs, dtype=np.float64))
    V = np.vander(logs, D, increasing=True)
    y = S / np.array(xs, dtype=np.float64)
    # the error term is O(x^{1/2+eps}), so weight each ratio by sqrt(x)
    w = np.sqrt(np.array(xs, dtype=np.float64))
    coef, *_ = np.linalg.lstsq(V * w[:, None], y * w, rcond=None)
    resid = (y - V @ coef) * np.array(xs, dtype=np.float64)
    return FitResult(D, coef.tolist(), xs, S.tolist(), resid.tolist())


def euler_phi(d: int) -> int:
    out, n, p = d, d, 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            out -= out // p
        p += 1
    if n > 1:
        out -= out // n
    return out


def coprime_partial_sum(F: ValueTable, d: int, x: int) -> complex:
    """``sum_{n<=x, (n,d)=1} F[n]``."""
    n = np.arange(1, x + 1)
    return complex(np.sum(F.values[1 : x + 1][np.gcd(n, d) == 1]))


def coprime_sum_profile(F: ValueTable, moduli: Sequence[int], x_grid: Sequence[int], A: float, D: int) -> dict:
    """Normalized ``|sum_{n<=x,(n,d)=1} f(n)| (log x)^A (phi(d)/d)^D / x`` per ``(d, x)``;
    the fitted constant is their maximum."""
    xs = [int(x) for x in x_grid]
    n = np.arange(F.limit + 1)
    rows = []
    for d in moduli:
        cum = np.cumsum(np.where(np.gcd(n, d) == 1, F.values, 0))
        for x in xs:
            val = abs(cum[x]) * math.log(x) ** A * (euler_phi(d) / d) ** D / x
            rows.append({"d": int(d), "x": x, "normalized": float(val)})
    return {"rows": rows, "C_fit": max(r["normalized"] for r in rows)}


def sifted_bound_profile(F: ValueTable, table: FactorTable, z_values: Sequence[float], x_grid: Sequence[int],
                         A: float, D: int, alpha: float = 0.5) -> dict:
    """``|sifted_sum| / (x (log z)^D / (log x)^A + x^{1 - alpha/log z} / log z)`` per ``(z, x)``."""
    rows = []
    for z in z_values:
        mask = sifted_mask(table, z, max(x_grid))
        cum = np.cumsum(np.where(mask, F.values[: mask.shape[0]], 0))
        for x in x_grid:
            if x < z:
                continue
            lz, lx = math.log(z), math.log(x)
            env = x * lz**D / lx**A + x ** (1 - alpha / lz) / lz
            rows.append({"z": float(z), "x": int(x), "normalized": float(abs(cum[x]) / env)})
    return {"rows": rows, "C_fit": max(r["normalized"] for r in rows)}


def grid_points(x_max: int, lo: int = 10**3) -> list[int]:
    return [x for x in DEFAULT_GRID if lo <= x <= x_max] or [x_max]
