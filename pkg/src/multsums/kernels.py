"""Hot numeric kernels, each with a numba and a vectorized numpy variant.

The public names at the bottom of the module are bound to one variant or
the other depending on :mod:`multsums._accel`. Both variants are always
importable under their ``_nb`` / ``_np`` names so tests and the benchmark can
compare them directly.

Array conventions: index 0 is unused padding, so ``a[n]`` holds the value
at ``n`` for ``1 <= n <= limit``.
"""

import math

import numpy as np

from ._accel import HAVE_NUMBA, njit

# P^-(1) is +infinity; any value above every table limit works.
SPF_SENTINEL = np.iinfo(np.int32).max


# ---------------------------------------------------------------------------
# smallest prime factor sieve


@njit
def _spf_sieve_nb(x):
    spf = np.zeros(x + 1, dtype=np.int32)
    r = int(math.sqrt(x))
    while (r + 1) * (r + 1) <= x:
        r += 1
    while r * r > x:
        r -= 1
    for i in range(2, r + 1):
        if spf[i] == 0:
            for j in range(i * i, x + 1, i):
                if spf[j] == 0:
                    spf[j] = i
    for i in range(2, x + 1):
        if spf[i] == 0:
            spf[i] = i
    return spf


def _spf_sieve_np(x):
    spf = np.zeros(x + 1, dtype=np.int32)
    r = math.isqrt(x)
    for i in range(2, r + 1):
        if spf[i] == 0:
            sl = spf[i * i :: i]
            sl[sl == 0] = i
    idx = np.flatnonzero(spf == 0)
    idx = idx[idx >= 2]
    spf[idx] = idx
    return spf


def _finish_spf(spf):
    if spf.shape[0] > 1:
        spf[1] = SPF_SENTINEL
    return spf


# ---------------------------------------------------------------------------
# multiplicative evaluation on [1, x]


@njit
def _mult_eval_nb(spf, primes, pp_table):
    x = spf.shape[0] - 1
    out = np.zeros(x + 1, dtype=np.complex128)
    if x >= 1:
        out[1] = 1.0
    for n in range(2, x + 1):
        p = spf[n]
        q = p
        m = n // p
        a = 1
        while m % p == 0:
            m //= p
            q *= p
            a += 1
        if m == 1:
            i = np.searchsorted(primes, p)
            out[n] = pp_table[i, a]
        else:
            out[n] = out[m] * out[q]
    return out


def _mult_eval_np(spf, primes, pp_table):
    x = spf.shape[0] - 1
    out = np.zeros(x + 1, dtype=np.complex128)
    if x < 1:
        return out
    out[1] = 1.0
    if x < 2:
        return out
    done = np.zeros(x + 1, dtype=bool)
    done[1] = True
    for a in range(1, pp_table.shape[1]):
        # restrict before powering so p**a cannot overflow
        cnt = int(np.searchsorted(primes, int(round(x ** (1.0 / a))) + 1, side="right"))
        pw = primes[:cnt].astype(np.int64) ** a
        keep = np.flatnonzero(pw <= x)
        if keep.size == 0:
            break
        out[pw[keep]] = pp_table[keep, a]
        done[pw[keep]] = True
    n = np.arange(2, x + 1, dtype=np.int64)
    p = spf[2:].astype(np.int64)
    q = p.copy()
    m = n // p
    hit = np.flatnonzero(m % p == 0)
    while hit.size:
        m[hit] //= p[hit]
        q[hit] *= p[hit]
        hit = hit[m[hit] % p[hit] == 0]
    todo = np.flatnonzero(~done[2:])
    while todo.size:
        ready = done[m[todo]]
        sel = todo[ready]
        out[sel + 2] = out[m[sel]] * out[q[sel]]
        done[sel + 2] = True
        todo = todo[~ready]
    return out


# ---------------------------------------------------------------------------
# Dirichlet convolution of dense tables


@njit
def _convolve_nb(F, G):
    x = F.shape[0] - 1
    out = np.zeros(x + 1, dtype=np.complex128)
    for d in range(1, x + 1):
        fd = F[d]
        if fd == 0:
            continue
        k = 1
        n = d
        while n <= x:
            out[n] += fd * G[k]
            k += 1
            n += d
    return out


def _convolve_np(F, G):
    x = F.shape[0] - 1
    out = np.zeros(x + 1, dtype=np.complex128)
    r = math.isqrt(x)
    # pairs (d, k) with d*k <= x: d <= r by rows, d > r by columns
    for d in range(1, r + 1):
        if F[d] != 0:
            kmax = x // d
            out[d : d * kmax + 1 : d] += F[d] * G[1 : kmax + 1]
    for k in range(1, x // (r + 1) + 1):
        if G[k] != 0:
            dmax = x // k
            d = np.arange(r + 1, dmax + 1)
            out[d * k] += F[r + 1 : dmax + 1] * G[k]
    return out


# ---------------------------------------------------------------------------
# finite Dirichlet sums sum_{n<=N} v[n] n^{-s}


@njit
def _dirichlet_sum_nb(values, sigma, t, N):
    acc = 0.0 + 0.0j
    for n in range(1, N + 1):
        v = values[n]
        if v == 0:
            continue
        ln = math.log(n)
        mag = math.exp(-sigma * ln)
        ph = -t * ln
        acc += v * mag * complex(math.cos(ph), math.sin(ph))
    return acc


def _dirichlet_sum_np(values, sigma, t, N, chunk=1 << 20):
    acc = 0.0 + 0.0j
    for lo in range(1, N + 1, chunk):
        hi = min(N, lo + chunk - 1)
        ln = np.log(np.arange(lo, hi + 1, dtype=np.float64))
        acc += np.sum(values[lo : hi + 1] * np.exp(-sigma * ln) * np.exp(-1j * t * ln))
    return acc


@njit
def _sparse_poly_nb(weights, logs, sigma, ts):
    """sum_j weights[j] exp(-(sigma + i t) logs[j]) for every t in ts."""
    out = np.zeros(ts.shape[0], dtype=np.complex128)
    mags = np.empty(weights.shape[0], dtype=np.complex128)
    for j in range(weights.shape[0]):
        mags[j] = weights[j] * math.exp(-sigma * logs[j])
    for i in range(ts.shape[0]):
        t = ts[i]
        acc = 0.0 + 0.0j
        for j in range(weights.shape[0]):
            ph = -t * logs[j]
            acc += mags[j] * complex(math.cos(ph), math.sin(ph))
        out[i] = acc
    return out


def _sparse_poly_np(weights, logs, sigma, ts, chunk=256):
    mags = weights * np.exp(-sigma * logs)
    out = np.empty(ts.shape[0], dtype=np.complex128)
    for lo in range(0, ts.shape[0], chunk):
        tt = ts[lo : lo + chunk]
        out[lo : lo + chunk] = np.exp(-1j * np.outer(tt, logs)) @ mags
    return out


# ---------------------------------------------------------------------------
# log-binned Taylor moments for fast evaluation at many t


@njit
def _log_moments_nb(weights, width, nbins, order):
    """M[b, k] = sum_{n in bin b} weights[n] (log n - c_b)^k / k!."""
    N = weights.shape[0] - 1
    M = np.zeros((nbins, order + 1), dtype=np.complex128)
    for n in range(1, N + 1):
        w = weights[n]
        if w == 0:
            continue
        ln = math.log(n)
        b = int(ln / width)
        if b >= nbins:
            b = nbins - 1
        delta = ln - (b + 0.5) * width
        term = w
        M[b, 0] += term
        for k in range(1, order + 1):
            term = term * delta / k
            M[b, k] += term
    return M


def _log_moments_np(weights, width, nbins, order, chunk=1 << 21):
    N = weights.shape[0] - 1
    M = np.zeros((nbins, order + 1), dtype=np.complex128)
    for lo in range(1, N + 1, chunk):
        hi = min(N, lo + chunk - 1)
        n = np.arange(lo, hi + 1, dtype=np.float64)
        ln = np.log(n)
        b = np.minimum((ln / width).astype(np.int64), nbins - 1)
        delta = ln - (b + 0.5) * width
        term = weights[lo : hi + 1].astype(np.complex128)
        starts = np.flatnonzero(np.r_[True, b[1:] != b[:-1]])
        bins = b[starts]
        M[bins, 0] += np.add.reduceat(term, starts)
        for k in range(1, order + 1):
            term = term * delta / k
            M[bins, k] += np.add.reduceat(term, starts)
    return M


# ---------------------------------------------------------------------------
# divisor-sum scatter (1 * lam)(n) for sparse integer weights


@njit
def _divisor_scatter_nb(ds, ws, N):
    out = np.zeros(N + 1, dtype=np.int64)
    for i in range(ds.shape[0]):
        d = ds[i]
        w = ws[i]
        if w == 0:
            continue
        for n in range(d, N + 1, d):
            out[n] += w
    return out


def _divisor_scatter_np(ds, ws, N):
    out = np.zeros(N + 1, dtype=np.int64)
    for d, w in zip(ds.tolist(), ws.tolist()):
        if w != 0 and d <= N:
            out[d::d] += w
    return out


if HAVE_NUMBA:
    spf_sieve_raw = _spf_sieve_nb
    mult_eval = _mult_eval_nb
    convolve = _convolve_nb
    dirichlet_sum = _dirichlet_sum_nb
    sparse_poly = _sparse_poly_nb
    log_moments = _log_moments_nb
    divisor_scatter = _divisor_scatter_nb
else:
    spf_sieve_raw = _spf_sieve_np
    mult_eval = _mult_eval_np
    convolve = _convolve_np
    dirichlet_sum = _dirichlet_sum_np
    sparse_poly = _sparse_poly_np
    log_moments = _log_moments_np
    divisor_scatter = _divisor_scatter_np


def spf_sieve(x):
    return _finish_spf(spf_sieve_raw(int(x)))
