"""Competitive search between stores posting auction formats.

A store posting ``(format, reserve)`` receives high and low types at Poisson
rates ``x_h`` and ``x_l``.  Buyers compare the expected utility of a visit
with their market utility ``Omega``; this module evaluates utilities and
profits, solves the visiting condition for demand, and builds the symmetric
all-pay equilibrium together with both deviation checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .auction import DegenerateCompositionError
from .poisson import DEFAULT_POLICY, SeriesPolicy, expect_over_demand, z

__all__ = [
    "MarketParams",
    "MechanismPosting",
    "DemandResponse",
    "MarketEquilibrium",
    "Deviation",
    "HypothesisViolated",
    "SubsidyRequired",
    "DeviationInfeasible",
    "store_payoffs",
    "utilities",
    "profit_direct",
    "profit_series",
    "lemma1_residual",
    "solve_demand",
    "allpay_symmetric_equilibrium",
    "standard_deviation_check",
    "allpay_deviation_from_standard",
]

FORMATS = ("standard", "allpay")
RESERVE_GRID = 2001
X_TOL = 1e-14
THETA_SCAN = 33
RATE_SCAN = 65


class HypothesisViolated(ValueError):
    """The all-pay equilibrium is only characterized for ``b > sigma``."""


class SubsidyRequired(ArithmeticError):
    """The matching all-pay deviation needs a negative reserve."""

    def __init__(self, deviation: "Deviation"):
        super().__init__(
            f"matching deviation needs reserve {deviation.r_hat:.6g} < 0 (theta_hat={deviation.theta_hat:.6g})"
        )
        self.deviation = deviation


class DeviationInfeasible(ArithmeticError):
    pass


@dataclass(frozen=True)
class MarketParams:
    lam: float
    sigma: float
    budget: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in [0, 1], got {self.sigma}")
        if not 0.0 < self.budget < 1.0:
            raise ValueError(f"b must lie in (0,1), got {self.budget}")


@dataclass(frozen=True)
class MechanismPosting:
    format: str
    reserve: float = 0.0

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.format!r}")
        if not math.isfinite(self.reserve) or not -1.0 <= self.reserve <= 1.0:
            raise ValueError(f"reserve must lie in [-1, 1], got {self.reserve}")


@dataclass(frozen=True)
class DemandResponse:
    x_h: float
    x_l: float

    def __post_init__(self):
        if not (self.x_h >= 0 and self.x_l >= 0):
            raise ValueError("arrival rates must be non-negative")

    @property
    def total(self) -> float:
        return self.x_h + self.x_l

    @property
    def theta(self) -> float:
        x = self.total
        return self.x_l / x if x > 0 else 0.0

    @classmethod
    def from_composition(cls, x: float, theta: float) -> "DemandResponse":
        return cls((1.0 - theta) * x, theta * x)


@dataclass(frozen=True)
class MarketEquilibrium:
    omega_h: float
    omega_l: float
    reserve_star: float
    profit: float
    format: str = "allpay"


class Deviation(NamedTuple):
    theta_hat: float
    r_hat: float
    profit_gain: float


def store_payoffs(fmt: str, n: int, theta: float, b: float) -> Tuple[float, float, float]:
    """``(u_h(n), u_l(n), pi(n))`` for ``n >= 2`` bidders, inlined for series use."""
    top = theta ** (n - 1)
    if fmt == "standard":
        u_h = top * (1.0 - b)
        u_l = u_h / n
    else:
        u_h = max(top - b, 0.0)
        u_l = max(top / n - b, 0.0)
    pi = 1.0 - n * ((1.0 - theta) * u_h + theta * u_l)
    return u_h, u_l, pi


def _poisson_ratio(y: float) -> float:
    """``(1 - z0(y) - z1(y)) / y`` with its limit 0 at ``y = 0``."""
    if y < 1e-3:
        return y / 2 - y**2 / 3 + y**3 / 8 - y**4 / 30
    return (-math.expm1(-y) - y * math.exp(-y)) / y


def utilities(
    post: MechanismPosting,
    demand: DemandResponse,
    b: float,
    method: str = "auto",
    policy: SeriesPolicy = DEFAULT_POLICY,
) -> Tuple[float, float]:
    """Expected utility ``(U_h, U_l)`` of visiting a store.

    Standard formats use the closed forms; all-pay (or ``method="series"``)
    sums ``z_n(x) u(n + 1)`` over the number of other customers, with a lone
    buyer paying the reserve.
    """
    x, theta, r = demand.total, demand.theta, post.reserve
    if post.format == "standard" and method in ("auto", "closed"):
        lone = z(0, x) * (1.0 - r)
        zh = z(0, demand.x_h)
        u_h = lone + zh * (1.0 - z(0, demand.x_l)) * (1.0 - b)
        u_l = lone + zh * _poisson_ratio(demand.x_l) * (1.0 - b)
        return u_h, u_l
    if method == "closed":
        raise ValueError("all-pay utilities have no closed form; use the series")

    fmt = post.format

    def series(i):
        def f(n):
            if n == 0:
                return 1.0 - r
            return store_payoffs(fmt, n + 1, theta, b)[i]

        return expect_over_demand(x, f, policy)

    if fmt == "allpay" and theta <= b:
        # every auction with company extracts the full surplus
        lone = z(0, x) * (1.0 - r)
        return lone, lone
    return series(0), series(1)


def profit_series(post: MechanismPosting, demand: DemandResponse, b: float,
                  policy: SeriesPolicy = DEFAULT_POLICY) -> float:
    """``sum_{n >= 1} z_n(x) pi(n)`` with ``pi(1) = r``."""
    theta, r = demand.theta, post.reserve

    def f(n):
        return r if n == 1 else store_payoffs(post.format, n, theta, b)[2]

    return expect_over_demand(demand.total, f, policy, start=1)


def profit_direct(post: MechanismPosting, demand: DemandResponse, b: float) -> float:
    """Expected store profit from the closed forms where they exist."""
    x, r = demand.total, post.reserve
    if x == 0.0:
        return 0.0
    if post.format == "standard":
        xh = demand.x_h
        at_b = z(0, xh) + z(1, xh) - z(0, x) - z(1, x)
        return z(1, x) * r + 1.0 - z(0, xh) - z(1, xh) + b * at_b
    if demand.theta <= b:
        return z(1, x) * r + 1.0 - z(0, x) - z(1, x)
    return profit_series(post, demand, b)


def lemma1_residual(post: MechanismPosting, demand: DemandResponse, b: float) -> float:
    """Profit minus ``1 - z0(x) - x_h U_h - x_l U_l``; zero when revenue nets out."""
    u_h, u_l = utilities(post, demand, b)
    rhs = 1.0 - z(0, demand.total) - demand.x_h * u_h - demand.x_l * u_l
    return profit_direct(post, demand, b) - rhs


def _solve_rate(post, b, theta, target, index) -> float:
    """Total demand ``x`` at composition ``theta`` with ``U_index(x) = target``.

    When ``r <= b`` every crowded payoff is below the lone buyer's ``1 - r``
    and ``U`` falls in ``x``.  Otherwise ``U`` can rise first; the largest
    crossing is returned, since beyond it extra buyers only lower ``U``.
    Returns 0 if no positive demand delivers ``target``.
    """

    def gap(x):
        return utilities(post, DemandResponse.from_composition(x, theta), b)[index] - target

    monotone = post.reserve <= b
    if monotone and gap(0.0) <= 0.0:
        return 0.0
    hi = 1.0
    while gap(hi) > 0.0:
        hi *= 2.0
        if hi > 1e4:
            raise ArithmeticError("demand bracket not found")
    lo = 0.0
    if not monotone:
        xs = np.linspace(0.0, hi, RATE_SCAN)
        above = [x for x in xs[:-1] if gap(x) > 0.0]
        if not above:
            return 0.0
        lo = above[-1]
        hi = float(xs[np.searchsorted(xs, lo) + 1])
    while hi - lo > X_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def solve_demand(post: MechanismPosting, omega_h: float, omega_l: float, b: float) -> DemandResponse:
    """Arrival rates consistent with market utilities ``(omega_h, omega_l)``.

    A type visits only if the store matches its market utility.  Corners
    (one type only) are checked first; otherwise the composition is found by
    bisection on the low types' indifference along the high types'
    indifference curve.
    """
    # with r <= b no crowd beats a lone buyer's 1 - r
    lone = 1.0 - post.reserve if post.reserve <= b else math.inf
    if lone <= omega_h and lone <= omega_l:
        return DemandResponse(0.0, 0.0)
    tol = 1e-12

    if lone > omega_h:
        x = _solve_rate(post, b, 0.0, omega_h, 0)
        if utilities(post, DemandResponse(x, 0.0), b)[1] <= omega_l + tol:
            return DemandResponse(x, 0.0)
    if lone > omega_l:
        x = _solve_rate(post, b, 1.0, omega_l, 1)
        if utilities(post, DemandResponse(0.0, x), b)[0] <= omega_h + tol:
            return DemandResponse(0.0, x)

    def low_gap(theta):
        try:
            x = _solve_rate(post, b, theta, omega_h, 0)
        except ArithmeticError:
            # high types cannot be brought down to omega_h at this mix
            return math.nan, math.nan
        return utilities(post, DemandResponse.from_composition(x, theta), b)[1] - omega_l, x

    def reachable_edge(ok, bad):
        for _ in range(60):
            mid = 0.5 * (ok + bad)
            if math.isnan(low_gap(mid)[0]):
                bad = mid
            else:
                ok = mid
        return ok

    scan = []
    for t in np.linspace(0.0, 1.0, THETA_SCAN):
        g = low_gap(t)[0]
        if math.isnan(g):
            if scan and not math.isnan(scan[-1][1]):
                edge = reachable_edge(scan[-1][0], float(t))
                scan.append((edge, low_gap(edge)[0]))
        scan.append((float(t), g))
    scan = [(t, g) for t, g in scan if not math.isnan(g)]

    for (prev_t, prev_g), (t, g) in zip(scan, scan[1:]):
        if prev_g == 0.0 or np.sign(g) != np.sign(prev_g):
            lo, hi = prev_t, t
            if prev_g == 0.0:
                hi = lo
            for _ in range(200):
                if hi - lo < 1e-15:
                    break
                mid = 0.5 * (lo + hi)
                gm, _ = low_gap(mid)
                if np.sign(gm) == np.sign(prev_g):
                    lo = mid
                else:
                    hi = mid
            theta = float(0.5 * (lo + hi))
            _, x = low_gap(theta)
            return DemandResponse.from_composition(x, theta)
    if scan and scan[-1][1] == 0.0:
        t = scan[-1][0]
        return DemandResponse.from_composition(low_gap(t)[1], t)
    raise ArithmeticError("no demand response satisfies both visiting conditions")


def _require_hypothesis(params: MarketParams):
    if not params.budget > params.sigma:
        raise HypothesisViolated(
            f"b={params.budget} <= sigma={params.sigma}: the all-pay equilibrium is not characterized"
        )


def allpay_symmetric_equilibrium(params: MarketParams) -> MarketEquilibrium:
    """Symmetric equilibrium where every store runs an all-pay auction.

    Each store gets ``lambda`` buyers with low share ``sigma``; with
    ``b > sigma`` auctions extract everything so both types earn the lone
    buyer's utility ``z0(lambda) (1 - r)``.  The seller's first-order
    condition gives ``Omega = z0(lambda)``, hence ``r* = 0``.
    """
    _require_hypothesis(params)
    lam = params.lam
    demand = DemandResponse.from_composition(lam, params.sigma)
    omega = z(0, lam)
    # the reserve that delivers Omega at the symmetric demand
    reserve = 1.0 - omega / z(0, lam)
    post = MechanismPosting("allpay", reserve)
    u_h, u_l = utilities(post, demand, params.budget)
    return MarketEquilibrium(u_h, u_l, reserve, profit_direct(post, demand, params.budget))


def standard_deviation_check(params: MarketParams, grid: int = RESERVE_GRID) -> float:
    """Best profit gain from switching one store to a standard auction.

    Scans the reserve on ``grid`` points of [0, 1], solving demand at the
    all-pay market utilities for each, then refines around the best cell.
    """
    eq = allpay_symmetric_equilibrium(params)
    b = params.budget

    def profit(r):
        post = MechanismPosting("standard", float(r))
        demand = solve_demand(post, eq.omega_h, eq.omega_l, b)
        return profit_direct(post, demand, b)

    rs = np.linspace(0.0, 1.0, grid)
    values = np.array([profit(r) for r in rs])
    i = int(np.argmax(values))
    best = values[i]
    lo, hi = rs[max(i - 1, 0)], rs[min(i + 1, grid - 1)]
    res = minimize_scalar(lambda r: -profit(r), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    best = max(best, -res.fun)
    return best - eq.profit


def _allpay_spread(lam: float, theta: float, b: float) -> float:
    """``U_h,a - U_l,a`` at total demand ``lam``; the reserve cancels."""

    def f(n):
        u_h, u_l, _ = store_payoffs("allpay", n + 1, theta, b)
        return u_h - u_l

    return expect_over_demand(lam, f, start=1)


def allpay_deviation_from_standard(params: MarketParams, r_s: float) -> Deviation:
    """Profit gain of one store switching to all-pay in a standard-format market.

    Holds total demand at ``lambda`` and finds the composition ``theta_hat``
    and reserve ``r_hat`` giving both types their standard-market utilities:
    first ``theta_hat`` from the reserve-free utility spread, then ``r_hat``
    from the low types' level.  The gain is
    ``lambda (theta_hat - sigma) (U_h,s - U_l,s)``.

    Raises
    ------
    SubsidyRequired
        When ``r_hat < 0``; the exception carries the solved deviation.
    DeviationInfeasible
        When no composition reproduces the spread.
    """
    lam, sigma, b = params.lam, params.sigma, params.budget
    if sigma in (0.0, 1.0):
        raise DegenerateCompositionError("sigma in {0, 1}: both types earn the same")
    standard = DemandResponse.from_composition(lam, sigma)
    u_hs, u_ls = utilities(MechanismPosting("standard", r_s), standard, b)
    spread = u_hs - u_ls

    lo, hi = b, 1.0
    if _allpay_spread(lam, hi, b) < spread:
        raise DeviationInfeasible("all-pay cannot reproduce the standard utility spread")
    while hi - lo > 1e-16:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _allpay_spread(lam, mid, b) < spread:
            lo = mid
        else:
            hi = mid
    theta_hat = 0.5 * (lo + hi)

    # level: z0(lam)(1 - r) + S_l(theta_hat) = U_l,s
    s_l = utilities(MechanismPosting("allpay", 0.0), DemandResponse.from_composition(lam, theta_hat), b)[1] - z(0, lam)
    r_hat = 1.0 - (u_ls - s_l) / z(0, lam)
    dev = Deviation(theta_hat, r_hat, lam * (theta_hat - sigma) * spread)
    if r_hat < 0.0:
        raise SubsidyRequired(dev)
    return dev
