import math

import numpy as np
import pytest

from multsums import multfun as mf
from multsums import sums
from multsums.harness import CATALOG_EXAMPLES, catalog
from multsums.multfun import OrdinateMultiset
from multsums.primes import chebyshev_psi, chebyshev_theta

import oracles


def test_partial_sum(table_small):
    mu = mf.eval_range(mf.moebius(), 1000, table_small)
    assert sums.partial_sum(mu, 10) == sum(oracles.mobius(n) for n in range(1, 11)) == -1
    assert sums.partial_sum(mf.eval_range(mf.ones(), 100, table_small), 10) == 10
    assert sums.partial_sum(mf.eval_range(catalog("twist:moebius:1.0"), 100, table_small), 1) == 1
    with pytest.raises(ValueError):
        sums.partial_sum(mu, 1001)


def test_sifted_sum(table_small):
    one = mf.eval_range(mf.ones(), 1000, table_small)
    assert sums.sifted_sum(one, 3, 30, table_small) == 10
    assert sums.sifted_sum(one, 1000, 1000, table_small) == 1
    mu = mf.eval_range(mf.moebius(), 1000, table_small)
    assert sums.sifted_sum(mu, 1, 10, table_small) == sums.partial_sum(mu, 10) == -1
    brute = sum(oracles.mobius(n) for n in range(1, 1001) if n == 1 or oracles.factorize(n)[0][0] > 7)
    assert sums.sifted_sum(mu, 7, 1000, table_small) == brute


def test_prime_log_sum(table_small):
    th = math.log(2) + math.log(3) + math.log(5) + math.log(7)
    assert sums.prime_log_sum(mf.ones(), 10, table_small) == pytest.approx(th)
    assert sums.prime_log_sum(mf.moebius(), 10, table_small) == pytest.approx(-th)
    assert sums.prime_log_sum(mf.epsilon(), 10, table_small) == 0


def test_discrepancy_examples(table_1e6):
    for x in (10, 1000, 10**6):
        assert sums.discrepancy(mf.moebius(), OrdinateMultiset.of([0.0]), x, table_1e6) == 0
        g = 2.0
        assert sums.discrepancy(mf.twist(mf.moebius(), g), OrdinateMultiset.of([g]), x, table_1e6) == 0
    d = sums.discrepancy(mf.tau_minus_kappa(math.sqrt(2)), OrdinateMultiset(), 10**6, table_1e6)
    th = chebyshev_theta(10**6, table_1e6)
    assert th == pytest.approx(998484.18, abs=0.01)
    assert d == pytest.approx(-math.sqrt(2) * th, rel=1e-12)


def test_discrepancy_grid_matches_pointwise(table_1e5):
    spec = catalog("legendre_chi:5")
    grid = sums.discrepancy_grid(spec, OrdinateMultiset(), [100, 1000, 10**5], table_1e5)
    for x, v in zip(grid.x_points, grid.values):
        assert v == pytest.approx(sums.discrepancy(spec, OrdinateMultiset(), x, table_1e5), rel=1e-12, abs=1e-9)


def test_sumgrid_csv_roundtrip():
    g = sums.SumGrid([1, 10, 100], [1 + 2j, -0.1 / 3, 1e-300j], "demo")
    text = g.to_csv()
    assert text.splitlines()[0] == "x,re,im,abs"
    back = sums.SumGrid.from_csv(text)
    assert back.x_points == g.x_points and back.values == g.values
    with pytest.raises(ValueError):
        sums.SumGrid([2, 1], [0j, 0j])


def test_lambda_partial_sum(table_small):
    assert sums.lambda_partial_sum(mf.ones(), OrdinateMultiset(), 1000, table_small) == pytest.approx(
        chebyshev_psi(1000, table_small))
    assert sums.lambda_partial_sum(mf.moebius(), OrdinateMultiset(), 10, table_small) == pytest.approx(-oracles.psi(10))


@pytest.mark.parametrize("name", CATALOG_EXAMPLES)
def test_lambda_vs_discrepancy_prime_square_bound(table_small, name):
    spec = catalog(name)
    for gam in ([], [0.0]):
        G = OrdinateMultiset.of(gam)
        x = 10**4
        q, p, k = table_small.prime_powers
        n_higher = int(np.sum((q <= x) & (k >= 2)))
        diff = abs(sums.lambda_partial_sum(spec, G, x, table_small) - sums.discrepancy(spec, G, x, table_small))
        assert diff <= (spec.declared_D + G.m) * n_higher * math.log(x)


def test_hyperbola_examples(table_small):
    one = mf.eval_range(mf.ones(), 10**4, table_small)
    mu = mf.eval_range(mf.moebius(), 10**4, table_small)
    assert sums.hyperbola_sum(one, one, 100, 10) == pytest.approx(sum(len(oracles.divisors(n)) for n in range(1, 101)))
    assert sums.hyperbola_sum(one, one, 100, 10) == 482
    for x in (10, 999, 10**4):
        assert sums.hyperbola_sum(mu, one, x, math.isqrt(x)) == pytest.approx(1)
    tau3 = mf.eval_range(mf.tau_k(3), 10**4, table_small)
    direct = sums.partial_sum(mf.dirichlet_convolve(mu, tau3), 10**4)
    for split in (1, 37, 10**4):
        assert sums.hyperbola_sum(mu, tau3, 10**4, split) == pytest.approx(direct, rel=1e-9)
    with pytest.raises(ValueError):
        sums.hyperbola_sum(mu, one, 100, 0)


def test_inversion_examples(table_small):
    for x in (1, 2.5, 17, 100):
        assert sums.inversion_recover(lambda t: math.floor(t) if t >= 1 else 0, mf.ones(), x) == pytest.approx(1)
    G = lambda t: t**2 if t >= 1 else 0  # noqa: E731
    assert sums.inversion_recover(G, mf.epsilon(), 9.5) == pytest.approx(G(9.5))
    F0 = lambda t: t if t >= 1 else 0  # noqa: E731
    Gm = sums.convolve_step(mf.moebius(), F0, table_small)
    for x in (1, 50.5, 999):
        assert sums.inversion_recover(Gm, mf.moebius(), x, table_small) == pytest.approx(x, abs=1e-7)


@pytest.mark.parametrize("name,gam,tol", [("moebius", [], 1e-6), ("liouville", [0.0], 1e-6),
                                          ("tau_minus_kappa:1.4142135623730951", [], 1e-5)])
def test_recursion_examples(table_small, name, gam, tol):
    x = 10**4
    assert sums.recursion_check(catalog(name), OrdinateMultiset.of(gam), x, table_small) <= tol * x


def test_lattice_examples():
    assert sums.lattice_count_bound([1, 1], 2) == (1, 8.0)
    assert sums.lattice_count_bound([1], 0.5) == (0, 1.5)
    a, y = [math.log(2), math.log(3)], math.log(100)
    count, bound = sums.lattice_count_bound(a, y)
    brute = sum(1 for i in range(1, 8) for j in range(1, 6) if 2**i * 3**j <= 100)
    assert count == brute == oracles.lattice_count(a, y) == 9
    assert count <= bound
    with pytest.raises(ValueError):
        sums.lattice_count_bound([0.0], 1)
    with pytest.raises(ValueError):
        sums.lattice_count_bound([1e-3] * 4, 20)


def test_halasz(table_1e6):
    x = 1000
    assert sums.halasz_ratio(mf.ones(), x, table_1e6) == pytest.approx(1.0)
    r_tau = [sums.halasz_ratio(mf.tau_k(2), x, table_1e6) for x in (10**3, 10**4, 10**5, 10**6)]
    assert max(r_tau) < 2 and min(r_tau) > 0
    two_omega = mf.spec_from_pp("two_omega", lambda p, a: np.full(p.shape[0], 2.0), 2)
    r2 = [sums.halasz_ratio(two_omega, x, table_1e6) for x in (10**3, 10**4, 10**5, 10**6)]
    assert max(r2) < 2 and min(r2) > 0
    with pytest.raises(sums.NegativeValueError):
        sums.halasz_ratio(mf.moebius(), 100, table_1e6)


def test_sifted_power_sums(table_1e7):
    lhs, main, rel = sums.sifted_power_sum_check(0, 2, 10**6, table_1e7)
    odd = len(range(1, 10**6 + 1, 2))
    assert lhs == odd == 500000
    assert main == pytest.approx(5e5)
    assert rel <= 2e-6
    assert sums.sifted_power_sum_check(0, 100, 10**7, table_1e7)[2] <= 0.1
    assert sums.sifted_power_sum_check(1, 100, 10**7, table_1e7)[2] <= 0.2


def test_dk_omega_fit(table_1e6):
    grid = [10**3, 10**4, 10**5, 10**6]
    f1 = sums.dk_omega_fit(1, grid, table_1e6)
    assert f1.coefficients[0] == pytest.approx(1.0, abs=1e-3)
    assert f1.sums == grid
    f2 = sums.dk_omega_fit(2, grid, table_1e6)
    # S(x) by brute force on the smallest grid point: (n, 210) = 1, weight 2^Omega(n)
    brute = sum(2 ** sum(a for _, a in oracles.factorize(n)) for n in range(1, 1001) if math.gcd(n, 210) == 1)
    assert f2.sums[0] == brute
    rr = f2.relative_residuals
    assert rr[-1] < rr[0]
    with pytest.raises(ValueError):
        sums.dk_omega_fit(200, grid, table_1e6)


def test_sifted_sum_z1_equals_partial(table_1e5):
    for name in CATALOG_EXAMPLES:
        F = mf.eval_range(catalog(name), 10**5, table_1e5)
        assert sums.sifted_sum(F, 1, 10**5, table_1e5) == sums.partial_sum(F, 10**5)


def test_coprime_profile(table_1e7):
    F = mf.eval_range(mf.moebius(), 10**7, table_1e7)
    prof = sums.coprime_sum_profile(F, [2, 6, 30, 210], [10**4, 10**5, 10**6, 10**7], A=3, D=1)
    assert len(prof["rows"]) == 16
    assert math.isfinite(prof["C_fit"])
    assert sums.coprime_partial_sum(F, 6, 100) == sum(oracles.mobius(n) for n in range(1, 101) if math.gcd(n, 6) == 1)
    assert sums.euler_phi(210) == 48
