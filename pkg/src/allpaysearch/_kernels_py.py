"""Numpy implementation of the store-auction kernels.

Selected automatically when the compiled ``_kernels`` extension is missing.
Operation order follows the compiled loop (sequential sums over bidders,
first-index tie ordering) so both backends agree to the last bit on most
platforms.
"""
import numpy as np

ALLPAY, FIRST, SECOND = 0, 1, 2


def _bids(fmt, low, k, theta, top, b, region, mu, u):
    if fmt == ALLPAY:
        if region == 3:
            high = np.power(theta + (1.0 - theta) * u, k)
        else:
            high = np.power(theta + (1.0 - theta) * u, k) - top + b
        if region == 1:
            low_bid = np.full_like(u, b)
        elif region == 2:
            low_bid = np.where(u >= 1.0 - mu, b, np.power(theta * u, k))
        else:
            low_bid = np.power(theta * u, k)
        return np.where(low, low_bid, high)
    if fmt == SECOND:
        return np.where(low, b, 1.0)
    base = np.power(theta + (1.0 - theta) * u, k)
    with np.errstate(divide="ignore", invalid="ignore"):
        high = np.where(base == 0.0, 1.0, 1.0 - top * (1.0 - b) / base)
    return np.where(low, b, high)


def draw_bids(fmt, n, theta, b, region, mu, is_low, u):
    k = n - 1
    u = np.asarray(u, dtype=np.float64)
    return _bids(fmt, np.asarray(is_low) != 0, k, theta, theta**k, b, region, mu, u).astype(
        np.float64
    )


def play_stores(fmt, theta, b, reserve, n_high, n_low, u_bid, u_tie, region_by_n, mu_by_n):
    n_high = np.asarray(n_high, dtype=np.int64)
    n_low = np.asarray(n_low, dtype=np.int64)
    u_bid = np.asarray(u_bid, dtype=np.float64)
    u_tie = np.asarray(u_tie, dtype=np.float64)
    sizes = n_high + n_low
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1])) if sizes.size else sizes
    reps = sizes.size
    revenue = np.zeros(reps)
    high_pay = np.zeros(reps)
    low_pay = np.zeros(reps)

    single = sizes == 1
    revenue[single] = reserve
    high_pay[single & (n_high == 1)] = 1.0 - reserve
    low_pay[single & (n_low == 1)] = 1.0 - reserve

    for n in np.unique(sizes[sizes >= 2]):
        n = int(n)
        idx = np.flatnonzero(sizes == n)
        k = n - 1
        top = theta**k
        cols = np.arange(n)
        u = u_bid[offsets[idx][:, None] + cols]
        nh = n_high[idx][:, None]
        low = cols[None, :] >= nh
        bids = _bids(fmt, low, k, theta, top, b, int(region_by_n[n]), float(mu_by_n[n]), u)

        best = bids.max(axis=1)
        tied = bids == best[:, None]
        ties = tied.sum(axis=1)
        pick = np.minimum(np.floor(u_tie[idx] * ties).astype(np.int64), ties - 1)
        rank = np.cumsum(tied, axis=1) - 1
        win = np.argmax(tied & (rank == pick[:, None]), axis=1)
        win_high = win < n_high[idx]

        if fmt == ALLPAY:
            tot = np.zeros(idx.size)
            ph = np.zeros(idx.size)
            pl = np.zeros(idx.size)
            for j in range(n):
                tot = tot + bids[:, j]
            for j in range(n):
                is_h = j < n_high[idx]
                ph = np.where(is_h, ph - bids[:, j], ph)
                pl = np.where(is_h, pl, pl - bids[:, j])
            ph = np.where(win_high, ph + 1.0, ph)
            pl = np.where(win_high, pl, pl + 1.0)
            revenue[idx] = tot
        else:
            if fmt == FIRST:
                price = best
            else:
                below = np.where(tied, -1.0, bids).max(axis=1)
                second = np.where(ties >= 2, best, below)
                price = np.where(second > reserve, second, reserve)
            revenue[idx] = price
            ph = np.where(win_high, 1.0 - price, 0.0)
            pl = np.where(win_high, 0.0, 1.0 - price)
        high_pay[idx] = ph
        low_pay[idx] = pl
    return revenue, high_pay, low_pay
