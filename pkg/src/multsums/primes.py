"""Prime sieving and the arithmetic functions that only need factorizations."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels

DEFAULT_MAX_LIMIT = 10**8


class CapacityError(ValueError):
    """Requested table size exceeds the configured memory budget."""


def max_limit() -> int:
    return int(float(os.environ.get("MULTSUMS_MAX_LIMIT", DEFAULT_MAX_LIMIT)))


@dataclass(frozen=True, eq=False)
class FactorTable:
    """Smallest-prime-factor table on ``[0, limit]``.

    ``spf[1]`` holds :data:`kernels.SPF_SENTINEL`, standing in for
    ``P^-(1) = +inf``; ``spf[0]`` is unused.
    """

    limit: int
    spf: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.spf.setflags(write=False)

    @cached_property
    def primes(self) -> np.ndarray:
        p = np.flatnonzero(self.spf[: self.limit + 1] == np.arange(self.limit + 1, dtype=np.int64))
        p = p[p >= 2].astype(np.int64)
        p.setflags(write=False)
        return p

    @cached_property
    def log_primes(self) -> np.ndarray:
        lp = np.log(self.primes.astype(np.float64))
        lp.setflags(write=False)
        return lp

    def primes_upto(self, x: float) -> np.ndarray:
        return self.primes[: np.searchsorted(self.primes, math.floor(x), side="right")]

    def check_range(self, n: int, what: str = "n") -> None:
        if n > self.limit:
            raise ValueError(f"{what}={n} exceeds factor table limit {self.limit}")

    def factorize(self, n: int) -> list[tuple[int, int]]:
        """Prime factorization of ``n`` as ``[(p, a), ...]`` with ``p`` ascending."""
        if n < 1:
            raise ValueError("n must be positive")
        self.check_range(n)
        out = []
        while n > 1:
            p = int(self.spf[n])
            a = 0
            while n % p == 0:
                n //= p
                a += 1
            out.append((p, a))
        return out

    @cached_property
    def prime_powers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All prime powers ``q = p^k <= limit`` as sorted arrays ``(q, p, k)``."""
        return prime_powers_upto(self.primes, self.limit)


def prime_powers_upto(primes: np.ndarray, x: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    qs, ps, ks = [], [], []
    k = 1
    while True:
        cnt = int(np.searchsorted(primes, int(round(x ** (1.0 / k))) + 1, side="right"))
        p = primes[:cnt]
        q = p**k
        keep = q <= x
        if not keep.any():
            break
        qs.append(q[keep])
        ps.append(p[keep])
        ks.append(np.full(int(keep.sum()), k, dtype=np.int64))
        k += 1
    if not qs:
        e = np.zeros(0, dtype=np.int64)
        return e, e, e
    q = np.concatenate(qs)
    order = np.argsort(q, kind="stable")
    return q[order], np.concatenate(ps)[order], np.concatenate(ks)[order]


def build_factor_table(x: int) -> FactorTable:
    """Sieve smallest prime factors up to ``x``."""
    x = int(x)
    if x < 2:
        raise ValueError("factor table needs x >= 2")
    if x > max_limit():
        raise CapacityError(
            f"x={x} exceeds the memory budget ({max_limit()}); raise MULTSUMS_MAX_LIMIT to allow it"
        )
    return FactorTable(limit=x, spf=kernels.spf_sieve(x))


def von_mangoldt(n: int, table: FactorTable) -> float:
    if n < 1:
        raise ValueError("n must be positive")
    table.check_range(n)
    if n == 1:
        return 0.0
    p = int(table.spf[n])
    while n % p == 0:
        n //= p
    return math.log(p) if n == 1 else 0.0


def von_mangoldt_table(table: FactorTable, x: int | None = None) -> np.ndarray:
    """Dense ``Lambda[0..x]``."""
    x = table.limit if x is None else int(x)
    table.check_range(x, "x")
    lam = np.zeros(x + 1)
    q, p, _ = table.prime_powers
    keep = q <= x
    lam[q[keep]] = np.log(p[keep].astype(np.float64))
    return lam


def chebyshev_psi(x: float, table: FactorTable) -> float:
    x = math.floor(x)
    table.check_range(x, "x")
    q, p, _ = table.prime_powers
    cnt = np.searchsorted(q, x, side="right")
    return float(np.sum(np.log(p[:cnt].astype(np.float64))))


def chebyshev_theta(x: float, table: FactorTable) -> float:
    x = math.floor(x)
    table.check_range(x, "x")
    return float(np.sum(table.log_primes[: np.searchsorted(table.primes, x, side="right")]))


def mertens_product(z: float, table: FactorTable | None = None) -> float:
    """``prod_{p <= z} (1 - 1/p)``; 1 for ``z < 2``."""
    if z < 2:
        return 1.0
    if table is None or table.limit < z:
        table = build_factor_table(max(2, math.floor(z)))
    p = table.primes_upto(z).astype(np.float64)
    # product in log space keeps the rounding independent of ordering
    return float(np.exp(np.sum(np.log1p(-1.0 / p))))


def sifted_indicator(n: int, z: float, table: FactorTable) -> bool:
    """True iff ``P^-(n) > z`` (always true for ``n = 1``)."""
    table.check_range(n)
    return bool(table.spf[n] > min(z, table.limit))


def sifted_mask(table: FactorTable, z: float, x: int | None = None) -> np.ndarray:
    """Boolean mask over ``[0..x]`` of the ``z``-rough integers (index 0 false)."""
    x = table.limit if x is None else int(x)
    table.check_range(x, "x")
    mask = table.spf[: x + 1] > min(z, table.limit)
    mask[0] = False
    return mask
