import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from allpaysearch.auction import AuctionScene, allpay_payoffs, standard_payoffs
from allpaysearch.market import (
    DemandResponse,
    Deviation,
    HypothesisViolated,
    MarketParams,
    MechanismPosting,
    SubsidyRequired,
    allpay_deviation_from_standard,
    allpay_symmetric_equilibrium,
    lemma1_residual,
    profit_direct,
    profit_series,
    solve_demand,
    standard_deviation_check,
    utilities,
)
from allpaysearch.poisson import z

STD = MechanismPosting("standard", 0.2)
AP = MechanismPosting("allpay", 0.2)
E = math.exp(-1)


def brute_utility(post, demand, b, index, terms=200):
    """Direct sum over n of poisson(n; x) u(n + 1), from the per-store payoffs."""
    x, t, r = demand.total, demand.theta, post.reserve
    total = math.exp(-x) * (1 - r)
    for n in range(1, terms):
        scene = AuctionScene(n + 1, t, b)
        pay = standard_payoffs(scene) if post.format == "standard" else allpay_payoffs(scene)
        total += math.exp(n * math.log(x) - x - math.lgamma(n + 1)) * pay[index]
    return total


def test_lone_buyer_only():
    # theta <= b: every crowded all-pay store takes the whole surplus
    d = DemandResponse.from_composition(1.0, 0.3)
    u = utilities(MechanismPosting("allpay", 0.0), d, 0.5)
    assert u == pytest.approx((E, E))


def test_zero_demand():
    d = DemandResponse(0.0, 0.0)
    assert utilities(STD, d, 0.5) == pytest.approx((0.8, 0.8))
    assert profit_direct(STD, d, 0.5) == 0.0


@pytest.mark.parametrize("fmt", ["standard", "allpay"])
def test_profit_example(fmt):
    d = DemandResponse.from_composition(1.0, 0.2)
    post = MechanismPosting(fmt, 0.0)
    pi = profit_direct(post, d, 0.5)
    if fmt == "allpay":
        assert pi == pytest.approx(1 - 2 * E, abs=1e-15)
    assert pi == pytest.approx(profit_series(post, d, 0.5), abs=1e-12)


@pytest.mark.parametrize("post", [STD, AP])
@pytest.mark.parametrize("x,theta,b", [(0.5, 0.6, 0.2), (2.0, 0.9, 0.5), (5.0, 0.95, 0.1)])
def test_utilities_match_brute_force(post, x, theta, b):
    d = DemandResponse.from_composition(x, theta)
    u = utilities(post, d, b)
    assert u[0] == pytest.approx(brute_utility(post, d, b, 0), abs=1e-12)
    assert u[1] == pytest.approx(brute_utility(post, d, b, 1), abs=1e-12)


@given(st.floats(0.0, 15.0), st.floats(0.0, 1.0), st.floats(0.01, 0.99), st.floats(-1, 1))
def test_standard_closed_form_matches_series(x, theta, b, r):
    post = MechanismPosting("standard", r)
    d = DemandResponse.from_composition(x, theta)
    closed = utilities(post, d, b, method="closed")
    series = utilities(post, d, b, method="series")
    assert closed == pytest.approx(series, abs=1e-11)


@given(st.floats(0.0, 15.0), st.floats(0.0, 1.0), st.floats(0.01, 0.99), st.floats(0, 1),
       st.sampled_from(["standard", "allpay"]))
def test_profit_nets_out_utilities(x, theta, b, r, fmt):
    d = DemandResponse.from_composition(x, theta)
    assert abs(lemma1_residual(MechanismPosting(fmt, r), d, b)) <= 1e-9


@given(st.floats(0.05, 10.0), st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0, 1))
def test_allpay_dominated_at_equal_demand(x, theta, b, r):
    d = DemandResponse.from_composition(x, theta)
    s = utilities(MechanismPosting("standard", r), d, b)
    a = utilities(MechanismPosting("allpay", r), d, b)
    assert a[0] < s[0] and a[1] < s[1]
    assert profit_direct(MechanismPosting("allpay", r), d, b) > profit_direct(
        MechanismPosting("standard", r), d, b
    )


@pytest.mark.parametrize("post", [STD, AP])
def test_utilities_fall_in_demand_and_reserve(post):
    b, theta = 0.3, 0.7
    xs = np.linspace(0.1, 6, 30)
    us = np.array([utilities(post, DemandResponse.from_composition(x, theta), b) for x in xs])
    assert np.all(np.diff(us, axis=0) < 0)
    d = DemandResponse.from_composition(1.0, theta)
    rs = np.linspace(0, 1, 11)
    ur = np.array([utilities(MechanismPosting(post.format, r), d, b) for r in rs])
    assert np.all(np.diff(ur, axis=0) < 0)


def test_allpay_utilities_rise_in_low_share():
    ts = np.linspace(0.31, 0.99, 30)
    us = np.array([utilities(AP, DemandResponse.from_composition(1.0, t), 0.3) for t in ts])
    assert np.all(np.diff(us[:, 0]) > 0)
    # low types gain nothing until theta**n / (n + 1) exceeds b for some n
    assert np.all(np.diff(us[:, 1]) >= 0) and us[-1, 1] > us[0, 1]


# -- demand response ---------------------------------------------------------


def test_demand_no_visit():
    assert solve_demand(STD, 0.9, 0.9, 0.5) == DemandResponse(0.0, 0.0)


def test_demand_symmetric_allpay():
    omega = E
    d = solve_demand(MechanismPosting("allpay", 0.0), omega, omega, 0.5)
    u = utilities(MechanismPosting("allpay", 0.0), d, 0.5)
    assert u == pytest.approx((omega, omega), abs=1e-10)
    assert d.total == pytest.approx(1.0, abs=1e-9)


def test_demand_high_types_only():
    # low types demand slightly more than any crowd can give them
    post = MechanismPosting("standard", 0.0)
    d = solve_demand(post, E, 0.99, 0.5)
    assert d.x_l == 0.0
    assert d.x_h == pytest.approx(1.0, abs=1e-9)
    # along the high types' indifference curve, low types never reach 0.99
    for theta in np.linspace(0.0, 1.0, 101):
        lo, hi = 0.0, 50.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            u = utilities(post, DemandResponse.from_composition(mid, theta), 0.5)
            lo, hi = (mid, hi) if u[0] > E else (lo, mid)
        assert utilities(post, DemandResponse.from_composition(lo, theta), 0.5)[1] < 0.99


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 4.0), st.floats(0.02, 0.98), st.floats(0.05, 0.95), st.floats(0.0, 1.0),
       st.sampled_from(["standard", "allpay"]))
def test_demand_round_trip(x, theta, b, r_frac, fmt):
    # r <= b keeps utilities falling in demand, so the response is unique
    post = MechanismPosting(fmt, r_frac * b)
    omega = utilities(post, DemandResponse.from_composition(x, theta), b)
    assume(fmt == "standard" or theta > b)
    assume(omega[0] - omega[1] > 1e-6)
    d = solve_demand(post, *omega, b)
    u = utilities(post, d, b)
    if d.x_h > 0:
        assert u[0] == pytest.approx(omega[0], abs=1e-10)
    if d.x_l > 0:
        assert u[1] == pytest.approx(omega[1], abs=1e-10)
    assert u[0] <= omega[0] + 1e-10 and u[1] <= omega[1] + 1e-10
    assert d.total == pytest.approx(x, rel=1e-8)
    assert d.theta == pytest.approx(theta, abs=1e-8)


def test_demand_high_reserve_picks_falling_branch():
    # r > b: a crowd beats paying the reserve alone, so U_h first rises in x
    post = MechanismPosting("allpay", 0.5)
    omega = utilities(post, DemandResponse.from_composition(6.0, 0.9), 0.05)
    d = solve_demand(post, *omega, 0.05)
    assert utilities(post, d, 0.05) == pytest.approx(omega, abs=1e-10)
    assert d.total == pytest.approx(6.0, rel=1e-8)


# -- market equilibrium ---------------------------------------------------------


def test_symmetric_equilibrium_example():
    eq = allpay_symmetric_equilibrium(MarketParams(1.0, 0.2, 0.5))
    assert eq.reserve_star == 0.0
    assert eq.omega_h == pytest.approx(E) and eq.omega_l == pytest.approx(E)
    assert eq.profit == pytest.approx(0.26424111765711533, abs=1e-15)


def test_symmetric_equilibrium_needs_budget_above_share():
    with pytest.raises(HypothesisViolated):
        allpay_symmetric_equilibrium(MarketParams(1.0, 0.6, 0.5))


@pytest.mark.parametrize("lam,sigma,b", [(1.0, 0.2, 0.5), (2.0, 0.1, 0.9)])
def test_no_gain_from_standard_deviation(lam, sigma, b):
    assert standard_deviation_check(MarketParams(lam, sigma, b)) <= 1e-9


def test_forced_reserve_loses():
    # with r > 0 a standard store must draw fewer high types to pay Omega
    params = MarketParams(1.0, 0.2, 0.5)
    eq = allpay_symmetric_equilibrium(params)
    for r in (0.05, 0.2, 0.5):
        post = MechanismPosting("standard", r)
        d = solve_demand(post, eq.omega_h, eq.omega_l, 0.5)
        assert d.total < 1.0
        assert profit_direct(post, d, 0.5) < eq.profit


# -- switching a standard market store to all-pay ---------------------------


def test_deviation_example():
    params = MarketParams(1.0, 0.3, 0.5)
    dev = allpay_deviation_from_standard(params, 0.3)
    assert dev.theta_hat > 0.3 and dev.r_hat < 0.3 and dev.profit_gain > 0
    s = utilities(MechanismPosting("standard", 0.3), DemandResponse.from_composition(1.0, 0.3), 0.5)
    a = utilities(MechanismPosting("allpay", dev.r_hat), DemandResponse.from_composition(1.0, dev.theta_hat), 0.5)
    assert a == pytest.approx(s, abs=1e-10)


def test_deviation_gain_equals_profit_difference():
    params = MarketParams(2.0, 0.4, 0.6)
    dev = allpay_deviation_from_standard(params, 0.5)
    pi_s = profit_direct(MechanismPosting("standard", 0.5), DemandResponse.from_composition(2.0, 0.4), 0.6)
    pi_a = profit_direct(
        MechanismPosting("allpay", dev.r_hat), DemandResponse.from_composition(2.0, dev.theta_hat), 0.6
    )
    assert pi_a - pi_s == pytest.approx(dev.profit_gain, abs=1e-10)


def test_deviation_gain_vanishes_without_low_types():
    gains = [allpay_deviation_from_standard(MarketParams(1.0, s, 0.5), 0.3).profit_gain for s in (1e-2, 1e-3, 1e-4)]
    assert gains[0] > gains[1] > gains[2] > 0
    assert gains[2] < 1e-4


def test_deviation_needing_subsidy():
    with pytest.raises(SubsidyRequired) as info:
        allpay_deviation_from_standard(MarketParams(1.0, 0.3, 0.5), 0.0)
    assert isinstance(info.value.deviation, Deviation)
    assert info.value.deviation.r_hat < 0


def test_deviation_can_lose_when_budget_below_share():
    # the utility spread pins theta_hat below sigma, so keeping both
    # utilities fixed shifts demand toward high types and profit falls
    dev = allpay_deviation_from_standard(MarketParams(1.0, 0.9, 0.3), 0.5)
    assert dev.theta_hat < 0.9 and dev.r_hat >= 0
    assert dev.profit_gain < 0


def test_deviation_gain_positive_when_budget_above_share():
    for lam, sigma, b, r in itertools.product([0.5, 1, 2, 4], [0.1, 0.3, 0.5], [0.6, 0.8], [0.3, 0.5, 0.7]):
        try:
            dev = allpay_deviation_from_standard(MarketParams(lam, sigma, b), r)
        except SubsidyRequired:
            continue
        assert dev.profit_gain > 0
