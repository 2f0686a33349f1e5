# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled store-auction kernels.

Mirrors ``_kernels_py`` exactly: same inputs, same bidder ordering, same
tie-break rule.  Uniform draws come from the caller so both backends are
fed identical random streams.
"""
import numpy as np

from libc.math cimport pow, floor

cdef enum:
    ALLPAY = 0
    FIRST = 1
    SECOND = 2


cdef inline double _bid(int fmt, bint low, int k, double theta, double top,
                        double b, int region, double mu, double u) nogil:
    cdef double base
    if fmt == ALLPAY:
        if low:
            if region == 1:
                return b
            if region == 2 and u >= 1.0 - mu:
                return b
            return pow(theta * u, k)
        base = pow(theta + (1.0 - theta) * u, k)
        if region == 3:
            return base
        return base - top + b
    if low:
        return b
    if fmt == SECOND:
        return 1.0
    base = pow(theta + (1.0 - theta) * u, k)
    if base == 0.0:
        return 1.0
    return 1.0 - top * (1.0 - b) / base


def draw_bids(int fmt, int n, double theta, double b, int region, double mu,
              const unsigned char[:] is_low, const double[:] u):
    """Inverse-transform bids for one store size; vector over draws."""
    cdef Py_ssize_t i, m = u.shape[0]
    cdef int k = n - 1
    cdef double top = pow(theta, k)
    out = np.empty(m, dtype=np.float64)
    cdef double[:] o = out
    with nogil:
        for i in range(m):
            o[i] = _bid(fmt, is_low[i] != 0, k, theta, top, b, region, mu, u[i])
    return out


def play_stores(int fmt, double theta, double b, double reserve,
                const long long[:] n_high, const long long[:] n_low,
                const double[:] u_bid, const double[:] u_tie,
                const signed char[:] region_by_n, const double[:] mu_by_n):
    """Resolve one store per replication.

    Bidders of replication ``r`` occupy a contiguous run of ``u_bid``: its
    ``n_high[r]`` high types first, then ``n_low[r]`` low types.  Returns
    per-replication seller revenue and the summed payoffs of high and of low
    buyers.
    """
    cdef Py_ssize_t reps = n_high.shape[0]
    cdef Py_ssize_t r, j, off = 0, n, nh, win, ties, pick
    cdef int k, region
    cdef double top, mu, bid, best, second, price, rev, ph, pl, tot
    revenue = np.zeros(reps, dtype=np.float64)
    high_pay = np.zeros(reps, dtype=np.float64)
    low_pay = np.zeros(reps, dtype=np.float64)
    cdef double[:] rv = revenue
    cdef double[:] hp = high_pay
    cdef double[:] lp = low_pay
    cdef Py_ssize_t max_n = 0
    for r in range(reps):
        if n_high[r] + n_low[r] > max_n:
            max_n = n_high[r] + n_low[r]
    scratch = np.empty(max(max_n, 1), dtype=np.float64)
    cdef double[:] bids = scratch

    with nogil:
        for r in range(reps):
            nh = n_high[r]
            n = nh + n_low[r]
            if n == 0:
                continue
            if n == 1:
                rv[r] = reserve
                if nh == 1:
                    hp[r] = 1.0 - reserve
                else:
                    lp[r] = 1.0 - reserve
                off += 1
                continue
            k = <int>(n - 1)
            top = pow(theta, k)
            region = region_by_n[n]
            mu = mu_by_n[n]
            best = -1.0
            second = -1.0
            ties = 0
            tot = 0.0
            for j in range(n):
                bid = _bid(fmt, j >= nh, k, theta, top, b, region, mu, u_bid[off + j])
                bids[j] = bid
                tot += bid
                if bid > best:
                    second = best
                    best = bid
                    ties = 1
                elif bid == best:
                    second = best
                    ties += 1
                elif bid > second:
                    second = bid
            pick = <Py_ssize_t>floor(u_tie[r] * ties)
            if pick >= ties:
                pick = ties - 1
            win = -1
            for j in range(n):
                if bids[j] == best:
                    if pick == 0:
                        win = j
                        break
                    pick -= 1
            ph = 0.0
            pl = 0.0
            if fmt == ALLPAY:
                rev = tot
                for j in range(n):
                    if j < nh:
                        ph -= bids[j]
                    else:
                        pl -= bids[j]
                if win < nh:
                    ph += 1.0
                else:
                    pl += 1.0
            else:
                if fmt == FIRST:
                    price = best
                else:
                    price = second if second > reserve else reserve
                rev = price
                if win < nh:
                    ph = 1.0 - price
                else:
                    pl = 1.0 - price
            rv[r] = rev
            hp[r] = ph
            lp[r] = pl
            off += n
    return revenue, high_pay, low_pay
