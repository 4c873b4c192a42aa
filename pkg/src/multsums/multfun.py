"""Multiplicative functions given by their prime-power values.

A :class:`MultiplicativeSpec` is backed by a vectorized *table function*
``table_fn(primes, amax) -> array[len(primes), amax + 1]`` whose column ``a``
holds ``f(p^a)``; column 0 is always 1. Everything else here (dense range
evaluation, Dirichlet convolution and inversion, the ``Lambda_f`` recursion,
ordinate twists) is built on that one hook.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from . import kernels
from .primes import FactorTable

TableFn = Callable[[np.ndarray, int], np.ndarray]

IDENTITY_TOL = 1e-9


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True, eq=False)
class MultiplicativeSpec:
    name: str
    table_fn: TableFn = field(repr=False)
    declared_D: int = 1
    description: str = ""
    # optional closed form for Lambda_f on prime powers, same layout as table_fn
    lambda_fn: TableFn | None = field(default=None, repr=False)

    def table(self, p, amax: int) -> np.ndarray:
        p = np.atleast_1d(np.asarray(p, dtype=np.int64))
        out = np.asarray(self.table_fn(p, int(amax)), dtype=np.complex128)
        if out.shape != (p.shape[0], amax + 1):
            raise ValueError(f"{self.name}: table_fn returned shape {out.shape}")
        out[:, 0] = 1.0
        return out

    def value_at_prime_power(self, p, a: int):
        """``f(p^a)``; scalar in, scalar out, or vectorized over ``p``."""
        if a == 0:
            return np.ones_like(np.asarray(p), dtype=np.complex128) if np.ndim(p) else 1.0 + 0j
        col = self.table(p, a)[:, a]
        return col if np.ndim(p) else complex(col[0])

    __call__ = value_at_prime_power

    def at(self, n: int, table: FactorTable) -> complex:
        """``f(n)`` from its factorization."""
        v = 1.0 + 0j
        for p, a in table.factorize(n):
            v *= self.value_at_prime_power(p, a)
        return v


def spec_from_pp(name: str, pp: Callable[[np.ndarray, int], np.ndarray], declared_D: int = 1,
                 description: str = "") -> MultiplicativeSpec:
    """Build a spec from a per-exponent rule ``pp(primes, a) -> values``."""

    def table_fn(p, amax):
        out = np.empty((p.shape[0], amax + 1), dtype=np.complex128)
        out[:, 0] = 1.0
        for a in range(1, amax + 1):
            out[:, a] = pp(p, a)
        return out

    return MultiplicativeSpec(name, table_fn, declared_D, description)


@dataclass
class ValueTable:
    """Dense values ``f(1..limit)`` plus prefix sums; index 0 is padding."""

    limit: int
    values: np.ndarray = field(repr=False)
    prefix: np.ndarray = field(repr=False)
    label: str = ""

    @classmethod
    def from_values(cls, values: np.ndarray, label: str = "") -> "ValueTable":
        values = np.asarray(values, dtype=np.complex128)
        values[0] = 0.0
        return cls(values.shape[0] - 1, values, np.cumsum(values), label)

    def S(self, u: float) -> complex:
        """Partial sum up to real ``u`` (zero below 1)."""
        if u < 1:
            return 0j
        k = math.floor(u)
        if k > self.limit:
            raise ValueError(f"u={u} beyond table limit {self.limit}")
        return complex(self.prefix[k])


@dataclass(frozen=True)
class OrdinateMultiset:
    """Sorted ``(gamma, multiplicity)`` pairs."""

    ordinates: tuple[tuple[float, int], ...] = ()

    @classmethod
    def of(cls, gammas: Iterable[float] = (), resolution: float = 1e-6) -> "OrdinateMultiset":
        return cls.from_pairs([(float(g), 1) for g in gammas], resolution)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, int]], resolution: float = 1e-6) -> "OrdinateMultiset":
        merged: list[list] = []
        for g, k in sorted((float(g), int(k)) for g, k in pairs):
            if k <= 0:
                continue
            if merged and g - merged[-1][0] <= resolution:
                # multiplicity-weighted mean keeps the merge order-independent
                g0, k0 = merged[-1]
                merged[-1] = [(g0 * k0 + g * k) / (k0 + k), k0 + k]
            else:
                merged.append([g, k])
        return cls(tuple((g, k) for g, k in merged))

    @property
    def m(self) -> int:
        return sum(k for _, k in self.ordinates)

    def expanded(self) -> list[float]:
        return [g for g, k in self.ordinates for _ in range(k)]

    def __len__(self):
        return self.m

    def __iter__(self):
        return iter(self.expanded())

    def to_list(self) -> list[dict]:
        return [{"gamma": g, "multiplicity": k} for g, k in self.ordinates]


@dataclass
class PrimePowerMap:
    """Values on prime powers ``p^a`` with ``p <= p_max`` and ``1 <= a <= a_max``."""

    primes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # shape (len(primes), a_max + 1); column 0 unused
    label: str = ""

    @property
    def a_max(self) -> int:
        return self.values.shape[1] - 1

    def __getitem__(self, key: tuple[int, int]) -> complex:
        p, a = key
        i = int(np.searchsorted(self.primes, p))
        if i >= self.primes.shape[0] or self.primes[i] != p or not 1 <= a <= self.a_max:
            raise KeyError(key)
        return complex(self.values[i, a])

    def __contains__(self, key) -> bool:
        try:
            self[key]
        except KeyError:
            return False
        return True

    def items(self):
        for i, p in enumerate(self.primes.tolist()):
            for a in range(1, self.a_max + 1):
                yield (p, a), complex(self.values[i, a])

    def dense(self, x: int) -> np.ndarray:
        """Array ``g[0..x]`` holding the map at prime powers ``<= x`` and 0 elsewhere."""
        out = np.zeros(x + 1, dtype=np.complex128)
        for a in range(1, self.a_max + 1):
            cnt = int(np.searchsorted(self.primes, int(round(x ** (1.0 / a))) + 1, side="right"))
            q = self.primes[:cnt] ** a
            keep = np.flatnonzero(q <= x)
            out[q[keep]] = self.values[keep, a]
        return out


# ---------------------------------------------------------------------------
# basic specs


def prime_power_phase(p, a, gamma: float) -> np.ndarray:
    """``p^{i a gamma}``. Shared by twists and discrepancy sums so exact
    cancellations stay exact."""
    return np.exp(1j * ((a * gamma) * np.log(np.asarray(p, dtype=np.float64))))


def epsilon() -> MultiplicativeSpec:
    return MultiplicativeSpec(
        "epsilon", lambda p, amax: np.zeros((p.shape[0], amax + 1), dtype=np.complex128), 0,
        "Dirichlet convolution identity")


def ones() -> MultiplicativeSpec:
    return spec_from_pp("ones", lambda p, a: np.ones(p.shape[0]), 1, "constant 1 (tau_1)")


def moebius() -> MultiplicativeSpec:
    def table_fn(p, amax):
        out = np.zeros((p.shape[0], amax + 1), dtype=np.complex128)
        if amax >= 1:
            out[:, 1] = -1.0
        return out

    return MultiplicativeSpec("moebius", table_fn, 1, "Moebius function")


def liouville() -> MultiplicativeSpec:
    return spec_from_pp("liouville", lambda p, a: np.full(p.shape[0], (-1.0) ** a), 1,
                        "Liouville function")


def tau_k(k: int) -> MultiplicativeSpec:
    """k-fold divisor function: ``tau_k(p^a) = C(a + k - 1, k - 1)``."""
    k = int(k)
    if k < 1:
        raise ValueError("tau_k needs k >= 1")
    return spec_from_pp(f"tau_k:{k}", lambda p, a: np.full(p.shape[0], float(math.comb(a + k - 1, k - 1))),
                        k, f"{k}-fold divisor function")


def power_series_coeffs(kappa: float, amax: int) -> np.ndarray:
    """Coefficients of ``(1 - X)^kappa`` up to ``X^amax``."""
    c = np.empty(amax + 1)
    c[0] = 1.0
    for a in range(1, amax + 1):
        c[a] = c[a - 1] * (a - 1 - kappa) / a
    return c


def tau_minus_kappa(kappa: float) -> MultiplicativeSpec:
    """Coefficients of ``zeta(s)^{-kappa} = prod_p (1 - p^{-s})^kappa``."""
    kappa = float(kappa)

    def table_fn(p, amax):
        return np.broadcast_to(power_series_coeffs(kappa, amax), (p.shape[0], amax + 1)).astype(np.complex128)

    return MultiplicativeSpec(f"tau_minus_kappa:{kappa!r}", table_fn, max(1, math.ceil(abs(kappa))),
                              f"coefficients of zeta^(-{kappa})")


def legendre_symbol(a: np.ndarray, q: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64) % q
    residues = np.zeros(q, dtype=np.int8)
    residues[(np.arange(1, q, dtype=np.int64) ** 2) % q] = 1
    chi = np.where(residues[a] == 1, 1, -1)
    return np.where(a == 0, 0, chi)


def legendre_chi(q: int) -> MultiplicativeSpec:
    """Quadratic character mod an odd prime ``q``, completely multiplicative."""
    q = int(q)
    if q < 3 or any(q % d == 0 for d in range(2, math.isqrt(q) + 1)):
        raise ValueError(f"legendre_chi needs an odd prime modulus, got {q}")
    return spec_from_pp(f"legendre_chi:{q}", lambda p, a: legendre_symbol(p, q).astype(np.float64) ** a, 1,
                        f"Legendre symbol mod {q}")


def omega_power(base: float) -> MultiplicativeSpec:
    """``n -> base^{Omega(n)}``."""
    return spec_from_pp(f"omega_power:{base!r}", lambda p, a: np.full(p.shape[0], float(base) ** a),
                        max(1, math.ceil(abs(base))), f"{base}^Omega(n)")


# ---------------------------------------------------------------------------
# spec-level operations


def convolve_specs(f: MultiplicativeSpec, g: MultiplicativeSpec, name: str | None = None) -> MultiplicativeSpec:
    """Dirichlet convolution at the prime-power level: ``(f*g)(p^k) = sum_j f(p^j) g(p^{k-j})``."""

    def table_fn(p, amax):
        F = f.table(p, amax)
        G = g.table(p, amax)
        out = np.zeros_like(F)
        for k in range(amax + 1):
            out[:, k] = np.sum(F[:, : k + 1] * G[:, k::-1], axis=1)
        return out

    return MultiplicativeSpec(name or f"product:{f.name}:{g.name}", table_fn, f.declared_D + g.declared_D,
                              f"({f.name}) * ({g.name})")


def dirichlet_inverse(spec: MultiplicativeSpec) -> MultiplicativeSpec:
    """``g(p^k) = -sum_{j=1}^k f(p^j) g(p^{k-j})``."""

    def table_fn(p, amax):
        F = spec.table(p, amax)
        out = np.zeros_like(F)
        out[:, 0] = 1.0
        for k in range(1, amax + 1):
            out[:, k] = -np.sum(F[:, 1 : k + 1] * out[:, k - 1 :: -1], axis=1)
        return out

    return MultiplicativeSpec(f"inverse:{spec.name}", table_fn, spec.declared_D, f"Dirichlet inverse of {spec.name}")


def twist(spec: MultiplicativeSpec, gamma: float) -> MultiplicativeSpec:
    """``n -> f(n) n^{i gamma}``."""
    gamma = float(gamma)

    def table_fn(p, amax):
        F = spec.table(p, amax)
        for a in range(1, amax + 1):
            F[:, a] = F[:, a] * prime_power_phase(p, a, gamma)
        return F

    def lambda_fn(p, amax):
        # Lambda of a twist is the twisted Lambda; exact, unlike rerunning the recursion
        lam = lambda_of(spec, int(p[-1]) if p.size else 1, amax, primes=p).values
        for a in range(1, amax + 1):
            lam[:, a] = lam[:, a] * prime_power_phase(p, a, gamma)
        return lam

    return MultiplicativeSpec(f"twist:{spec.name}:{gamma!r}", table_fn, spec.declared_D,
                              f"{spec.name} twisted by n^(i{gamma})", lambda_fn)


def tau_gamma_spec(gammas: OrdinateMultiset) -> MultiplicativeSpec:
    """``tau_Gamma(p^j) = h_j(p^{i gamma_1}, ..., p^{i gamma_m})``; epsilon for empty Gamma."""
    gs = gammas.expanded()

    def table_fn(p, amax):
        c = np.zeros((p.shape[0], amax + 1), dtype=np.complex128)
        c[:, 0] = 1.0
        for g in gs:
            z = prime_power_phase(p, 1, g)
            # multiply by the geometric series 1/(1 - z X)
            for j in range(1, amax + 1):
                c[:, j] = c[:, j] + z * c[:, j - 1]
        return c

    label = ",".join(f"{g!r}" for g in gs)
    return MultiplicativeSpec(f"tau_gamma:{{{label}}}", table_fn, len(gs), "ordinate divisor function")


# ---------------------------------------------------------------------------
# dense tables


def _amax_for(x: int) -> int:
    return max(1, int(math.floor(math.log2(x)))) if x >= 2 else 1


def eval_range(spec: MultiplicativeSpec, x: int, table: FactorTable) -> ValueTable:
    """Dense values of ``spec`` on ``[1, x]``."""
    x = int(x)
    table.check_range(x, "x")
    if x < 1:
        raise ValueError("x must be >= 1")
    primes = table.primes_upto(x)
    pp = spec.table(primes, _amax_for(x))
    values = kernels.mult_eval(table.spf[: x + 1], primes, pp)
    return ValueTable.from_values(values, spec.name)


def dirichlet_convolve(F: ValueTable, G: ValueTable) -> ValueTable:
    if F.limit != G.limit:
        raise ValueError(f"mismatched limits {F.limit} != {G.limit}")
    return ValueTable.from_values(kernels.convolve(F.values, G.values), f"({F.label})*({G.label})")


def lambda_of(spec: MultiplicativeSpec, p_max: int, a_max: int, table: FactorTable | None = None,
              primes: np.ndarray | None = None) -> PrimePowerMap:
    """``Lambda_f`` on prime powers via ``Lambda_f(p^k) = k f(p^k) log p - sum_{j<k} Lambda_f(p^j) f(p^{k-j})``."""
    if p_max < 1 or a_max < 1:
        raise ValueError("p_max and a_max must be >= 1")
    if primes is None:
        if table is None:
            from .primes import build_factor_table

            table = build_factor_table(max(2, p_max))
        primes = table.primes_upto(p_max)
    if spec.lambda_fn is not None:
        lam = np.asarray(spec.lambda_fn(primes, int(a_max)), dtype=np.complex128)
        lam[:, 0] = 0.0
        return PrimePowerMap(primes, lam, f"Lambda[{spec.name}]")
    F = spec.table(primes, a_max)
    logp = np.log(primes.astype(np.float64))
    lam = np.zeros_like(F)
    for k in range(1, a_max + 1):
        acc = k * F[:, k] * logp
        for j in range(1, k):
            acc = acc - lam[:, j] * F[:, k - j]
        lam[:, k] = acc
    return PrimePowerMap(primes, lam, f"Lambda[{spec.name}]")


def f_gamma(spec: MultiplicativeSpec, gammas: OrdinateMultiset, x: int, table: FactorTable,
            method: str = "spec") -> ValueTable:
    """Dense ``f_Gamma = f * tau_Gamma`` on ``[1, x]``.

    ``method="spec"`` convolves at the prime-power level and evaluates once;
    ``method="table"`` convolves the two dense tables.
    """
    if method == "spec":
        return eval_range(convolve_specs(spec, tau_gamma_spec(gammas)), x, table)
    if method == "table":
        return dirichlet_convolve(eval_range(spec, x, table), eval_range(tau_gamma_spec(gammas), x, table))
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# identity residuals and class membership


def lambda_table(spec: MultiplicativeSpec, x: int, table: FactorTable) -> np.ndarray:
    """Dense ``Lambda_f[0..x]``."""
    return lambda_of(spec, x, _amax_for(x), table).dense(x)


def defining_identity_residual(spec: MultiplicativeSpec, x: int, table: FactorTable) -> float:
    """``max_n |f(n) log n - (Lambda_f * f)(n)| / (1 + |f(n)| log n)`` over ``n <= x``."""
    F = eval_range(spec, x, table)
    conv = kernels.convolve(lambda_table(spec, x, table), F.values)
    logn = np.log(np.maximum(np.arange(x + 1), 1).astype(np.float64))
    err = np.abs(F.values * logn - conv)[1:] / (1.0 + np.abs(F.values[1:]) * logn[1:])
    return float(err.max())


def inverse_identity_residual(spec: MultiplicativeSpec, x: int, table: FactorTable) -> float:
    """``max(|(f * f^{-1})(1) - 1|, max_{2<=n<=x} |(f * f^{-1})(n)|)``."""
    conv = dirichlet_convolve(eval_range(spec, x, table), eval_range(dirichlet_inverse(spec), x, table)).values
    conv[1] -= 1.0
    return float(np.abs(conv[1:]).max())


@dataclass
class ClassReport:
    spec_name: str
    D: int
    lambda_ratio: float
    lambda_worst: tuple[int, int]
    f_ratio: float
    f_worst: int
    inverse_ratio: float
    inverse_worst: int
    tol: float = IDENTITY_TOL

    @property
    def passed(self) -> bool:
        lim = 1.0 + self.tol
        return self.lambda_ratio <= lim and self.f_ratio <= lim and self.inverse_ratio <= lim

    @property
    def violations(self) -> list[str]:
        lim = 1.0 + self.tol
        out = []
        if self.lambda_ratio > lim:
            out.append(f"|Lambda_f(p^k)|/Lambda(p^k) = {self.lambda_ratio:.6g} at p^k = {self.lambda_worst}")
        if self.f_ratio > lim:
            out.append(f"|f(n)|/tau_D(n) = {self.f_ratio:.6g} at n = {self.f_worst}")
        if self.inverse_ratio > lim:
            out.append(f"|f^-1(n)|/tau_D(n) = {self.inverse_ratio:.6g} at n = {self.inverse_worst}")
        return out

    def to_dict(self) -> dict:
        return {
            "spec": self.spec_name, "D": self.D, "passed": self.passed,
            "lambda_ratio": self.lambda_ratio, "f_ratio": self.f_ratio, "inverse_ratio": self.inverse_ratio,
        }


def verify_class(spec: MultiplicativeSpec, D: int, p_max: int, a_max: int, x: int,
                 table: FactorTable) -> ClassReport:
    """Numerical membership test for F(D): ``|Lambda_f| <= D Lambda`` on checked prime
    powers, and ``|f|, |f^{-1}| <= tau_D`` on ``[1, x]``."""
    lam = lambda_of(spec, p_max, a_max, table)
    ratio = np.abs(lam.values[:, 1:]) / np.log(lam.primes.astype(np.float64))[:, None] / D
    i, a = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    tauD = eval_range(tau_k(D), x, table).values.real
    fr = np.abs(eval_range(spec, x, table).values[1:]) / tauD[1:]
    ir = np.abs(eval_range(dirichlet_inverse(spec), x, table).values[1:]) / tauD[1:]
    return ClassReport(
        spec.name, D,
        float(ratio[i, a]), (int(lam.primes[i]), int(a) + 1),
        float(fr.max()), int(np.argmax(fr)) + 1,
        float(ir.max()), int(np.argmax(ir)) + 1,
    )
