"""Monte Carlo oracle for store payoffs and market-level utilities.

Replications are processed in fixed-size blocks.  Block ``i`` draws from its
own Philox stream keyed by ``(seed, i)``, so results do not depend on how
blocks are scheduled across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .auction import AuctionScene, R1, R2, classify_region, solve_atom_mu
from .bids import BidDistribution
from .market import DemandResponse, MarketParams, MechanismPosting

__all__ = [
    "SimConfig",
    "SimEstimate",
    "StoreDraws",
    "store_draws",
    "market_draws",
    "simulate_store",
    "simulate_market",
    "sample_bid",
    "z_status",
]

_REGION_CODE = {R1: 1, R2: 2, "R3": 3}
FLAG_Z = 3.0
FAIL_Z = 4.0


@dataclass(frozen=True)
class SimConfig:
    replications: int = 1_000_000
    seed: int = 0
    block_size: int = 1 << 16
    workers: int = 1
    backend: Optional[str] = None

    def __post_init__(self):
        if self.replications < 10_000:
            raise ValueError("replications must be at least 10^4")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.block_size < 1:
            raise ValueError("block_size must be positive")

    def kernel(self):
        return kernels.get_backend(self.backend) if self.backend else kernels

    def blocks(self):
        full, rest = divmod(self.replications, self.block_size)
        sizes = [self.block_size] * full + ([rest] if rest else [])
        return list(enumerate(sizes))

    def rng(self, block: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(block,))
        return np.random.Generator(np.random.Philox(ss))


class SimEstimate(NamedTuple):
    target: str
    mean: float
    std_error: float
    replications: int
    seed: int

    def z_score(self, analytic: float) -> float:
        if self.std_error == 0.0:
            return 0.0 if self.mean == analytic else math.copysign(math.inf, self.mean - analytic)
        return (self.mean - analytic) / self.std_error


def z_status(z: float) -> str:
    """``"ok"`` within 3 s.e., ``"flag"`` up to 4, ``"fail"`` beyond."""
    z = abs(z)
    if z <= FLAG_Z:
        return "ok"
    if z <= FAIL_Z:
        return "flag"
    return "fail"


def _estimate(target, samples, config) -> SimEstimate:
    n = samples.size
    if n == 0 or not np.all(np.isfinite(samples)):
        return SimEstimate(target, math.nan, math.nan, n, config.seed)
    mean = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(n))
    return SimEstimate(target, mean, se, n, config.seed)


def _allpay_tables(theta, b, max_n):
    region = np.zeros(max_n + 1, dtype=np.int8)
    mu = np.zeros(max_n + 1, dtype=np.float64)
    for n in range(2, max_n + 1):
        scene = AuctionScene(n, theta, b)
        tag = classify_region(scene).tag
        region[n] = _REGION_CODE[tag]
        if tag == R2:
            mu[n] = solve_atom_mu(scene)
    return region, mu


class StoreDraws(NamedTuple):
    """Per-replication outcomes, in block order."""

    n_high: np.ndarray
    n_low: np.ndarray
    revenue: np.ndarray
    high_pay: np.ndarray
    low_pay: np.ndarray


def _run_blocks(config: SimConfig, draw_block) -> StoreDraws:
    blocks = config.blocks()
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            parts = list(pool.map(draw_block, blocks))
    else:
        parts = [draw_block(blk) for blk in blocks]
    return StoreDraws(*(np.concatenate(col) for col in zip(*parts)))


def store_draws(scene: AuctionScene, fmt: str, config: SimConfig) -> StoreDraws:
    """Simulate ``config.replications`` auctions with ``scene.n`` bidders.

    The number of low types is binomial(n, theta); bids are drawn by inverse
    transform from the equilibrium strategies of `fmt` and ties at the top
    are split uniformly.
    """
    code = kernels.FORMAT_CODES[fmt]
    region, mu = _allpay_tables(scene.theta, scene.budget, scene.n)
    kern = config.kernel()

    def draw_block(blk):
        index, m = blk
        rng = config.rng(index)
        n_low = rng.binomial(scene.n, scene.theta, m).astype(np.int64)
        n_high = scene.n - n_low
        u_bid = rng.random(m * scene.n)
        u_tie = rng.random(m)
        rev, hp, lp = kern.play_stores(
            code, scene.theta, scene.budget, 0.0, n_high, n_low, u_bid, u_tie, region, mu
        )
        return n_high, n_low, rev, hp, lp

    return _run_blocks(config, draw_block)


def simulate_store(scene: AuctionScene, fmt: str, config: SimConfig = SimConfig()):
    """Estimate ``(u_h, u_l, pi)`` for one auction.

    Type payoffs use ``sum of type-i payoffs / E[# type-i bidders]``, which
    is unbiased for the per-bidder expectation.
    """
    d = store_draws(scene, fmt, config)
    n, t = scene.n, scene.theta
    nan = np.full(d.revenue.size, np.nan)
    u_h = d.high_pay / (n * (1 - t)) if t < 1 else nan
    u_l = d.low_pay / (n * t) if t > 0 else nan
    return (
        _estimate("u_h", u_h, config),
        _estimate("u_l", u_l, config),
        _estimate("pi", d.revenue, config),
    )


def market_draws(
    params: MarketParams, posting: MechanismPosting, demand: DemandResponse, config: SimConfig,
    rule: str = "first",
) -> StoreDraws:
    """Simulate stores with Poisson(x_h) high and Poisson(x_l) low customers.

    A lone customer buys at the reserve; larger crowds bid under the posted
    format (`rule` picks first or second price for standard postings).
    """
    fmt = "allpay" if posting.format == "allpay" else rule
    code = kernels.FORMAT_CODES[fmt]
    theta, b, r = demand.theta, params.budget, posting.reserve
    kern = config.kernel()
    tables = {}

    def draw_block(blk):
        index, m = blk
        rng = config.rng(index)
        n_high = rng.poisson(demand.x_h, m).astype(np.int64)
        n_low = rng.poisson(demand.x_l, m).astype(np.int64)
        max_n = int((n_high + n_low).max(initial=0))
        u_bid = rng.random(int((n_high + n_low).sum()))
        u_tie = rng.random(m)
        key = max(max_n, 2)
        if key not in tables:
            tables[key] = _allpay_tables(theta, b, key)
        region, mu = tables[key]
        rev, hp, lp = kern.play_stores(code, theta, b, r, n_high, n_low, u_bid, u_tie, region, mu)
        return n_high, n_low, rev, hp, lp

    return _run_blocks(config, draw_block)


def simulate_market(
    params: MarketParams, posting: MechanismPosting, demand: DemandResponse,
    config: SimConfig = SimConfig(), rule: str = "first",
):
    """Estimate ``(U_h, U_l, Pi, P(empty store))``.

    ``U_i`` is the store's total type-i payoff divided by ``x_i``; with
    Poisson arrivals this equals a visiting buyer's expected utility.
    """
    d = market_draws(params, posting, demand, config, rule)
    nan = np.full(d.revenue.size, np.nan)
    u_h = d.high_pay / demand.x_h if demand.x_h > 0 else nan
    u_l = d.low_pay / demand.x_l if demand.x_l > 0 else nan
    empty = ((d.n_high + d.n_low) == 0).astype(np.float64)
    return (
        _estimate("U_h", u_h, config),
        _estimate("U_l", u_l, config),
        _estimate("Pi", d.revenue, config),
        _estimate("empty", empty, config),
    )


def sample_bid(dist: BidDistribution, u):
    """Inverse-transform draw(s) from `dist` for uniforms ``u`` in [0, 1)."""
    return dist.inverse(u)
