import math

import numpy as np
import pytest

from multsums import primes as pr
from multsums.kernels import SPF_SENTINEL

import oracles


def test_spf_examples(table_small):
    assert table_small.spf[12] == 2
    assert table_small.spf[49] == 7
    assert table_small.spf[97] == 97


def test_spf_sentinel(table_small):
    assert table_small.spf[1] == SPF_SENTINEL


def test_spf_invariants(table_small):
    spf = table_small.spf
    n = np.arange(2, table_small.limit + 1)
    assert np.all(n % spf[2:] == 0)
    prime_mask = np.array([oracles.is_prime(int(v)) for v in range(2, 2001)])
    assert np.array_equal(spf[2:2001] == np.arange(2, 2001), prime_mask)


def test_factorization_product(table_1e5):
    for n in range(1, table_1e5.limit + 1, 7):
        assert math.prod(p**a for p, a in table_1e5.factorize(n)) == n


def test_factorize_matches_trial(table_small):
    for n in (1, 2, 360, 9973, 9999):
        assert table_small.factorize(n) == oracles.factorize(n)


def test_build_errors():
    with pytest.raises(ValueError):
        pr.build_factor_table(1)


def test_capacity(monkeypatch):
    monkeypatch.setenv("MULTSUMS_MAX_LIMIT", "1000")
    with pytest.raises(pr.CapacityError):
        pr.build_factor_table(1001)


def test_table_immutable(table_small):
    with pytest.raises(ValueError):
        table_small.spf[5] = 3


def test_von_mangoldt(table_small):
    assert pr.von_mangoldt(8, table_small) == pytest.approx(math.log(2))
    assert pr.von_mangoldt(6, table_small) == 0
    assert pr.von_mangoldt(1, table_small) == 0
    with pytest.raises(ValueError):
        pr.von_mangoldt(table_small.limit + 1, table_small)
    dense = pr.von_mangoldt_table(table_small, 500)
    for n in range(1, 501):
        assert dense[n] == pytest.approx(oracles.von_mangoldt(n), abs=1e-15)


def test_chebyshev(table_small):
    assert pr.chebyshev_psi(1, table_small) == 0
    assert pr.chebyshev_psi(10, table_small) == pytest.approx(3 * math.log(2) + 2 * math.log(3) + math.log(5) + math.log(7))
    assert pr.chebyshev_psi(10, table_small) == pytest.approx(7.83201, abs=1e-5)
    assert pr.chebyshev_psi(100, table_small) == pytest.approx(oracles.psi(100), rel=1e-14)
    assert pr.chebyshev_theta(1000, table_small) == pytest.approx(oracles.theta(1000), rel=1e-14)


def test_psi_monotone_and_pnt(table_1e7):
    xs = np.linspace(2, 10**5, 300).astype(int)
    vals = [pr.chebyshev_psi(x, table_1e7) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert 0.9 <= pr.chebyshev_psi(10**7, table_1e7) / 10**7 <= 1.1


def test_mertens_product(table_1e6):
    assert pr.mertens_product(1) == 1
    assert pr.mertens_product(0) == 1
    assert pr.mertens_product(2) == pytest.approx(0.5)
    assert pr.mertens_product(10) == pytest.approx(8 / 35, rel=1e-14)
    z = 10**6
    assert pr.mertens_product(z, table_1e6) * math.log(z) == pytest.approx(math.exp(-0.5772156649015329), rel=0.05)


def test_sifted_indicator(table_small):
    assert pr.sifted_indicator(1, 1e6, table_small)
    assert pr.sifted_indicator(25, 3, table_small)
    assert not pr.sifted_indicator(15, 3, table_small)
    mask = pr.sifted_mask(table_small, 3, 30)
    assert np.flatnonzero(mask).tolist() == [1, 5, 7, 11, 13, 17, 19, 23, 25, 29]
