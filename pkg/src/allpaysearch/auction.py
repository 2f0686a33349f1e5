"""Bidding at a single store with ``n`` customers.

Each rival is a low type (budget ``b``) with probability ``theta`` and a
high type (budget 1) otherwise; everyone values the good at 1.  Standard
auctions (first or second price) and all-pay auctions are solved in closed
form, and :func:`best_response_gap` checks any all-pay profile on a bid grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .bids import Atom, BidDistribution, FirstPriceSegment, PowerSegment

__all__ = [
    "AuctionScene",
    "Region",
    "PayoffTriple",
    "RegionError",
    "DegenerateCompositionError",
    "classify_region",
    "standard_payoffs",
    "allpay_payoffs",
    "solve_atom_mu",
    "allpay_bid_cdfs",
    "allpay_profile",
    "firstprice_high_cdf",
    "standard_bid_cdfs",
    "eu_of_bid",
    "tie_inclusive_payoff",
    "atom_payoff",
    "best_response_gap",
    "expected_bid",
]

R1, R2, R3 = "R1", "R2", "R3"

MU_TOL = 1e-12
MU_MAX_ITER = 200


class RegionError(ValueError):
    pass


class DegenerateCompositionError(ValueError):
    """theta is 0 or 1, so one buyer type never shows up."""


@dataclass(frozen=True)
class AuctionScene:
    n: int
    theta: float
    budget: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")
        if not 0.0 < self.budget < 1.0:
            raise ValueError(f"b must lie in (0,1), got {self.budget}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def k(self) -> int:
        """Number of rivals."""
        return self.n - 1

    @property
    def top(self) -> float:
        """Probability that every rival is a low type, ``theta**(n-1)``."""
        return self.theta**self.k


class Region(NamedTuple):
    tag: str
    lower_threshold: float
    upper_threshold: float


class PayoffTriple(NamedTuple):
    u_h: float
    u_l: float
    pi: float

    def surplus_residual(self, scene: AuctionScene) -> float:
        t = scene.theta
        return self.pi + scene.n * ((1 - t) * self.u_h + t * self.u_l) - 1.0


def classify_region(scene: AuctionScene) -> Region:
    hi = scene.top
    lo = hi / scene.n
    b = scene.budget
    if b < lo:
        tag = R1
    elif b < hi:
        tag = R2
    else:
        tag = R3
    return Region(tag, lo, hi)


def standard_payoffs(scene: AuctionScene) -> PayoffTriple:
    """Expected payoffs under a first- or second-price auction.

    Low types bid their budget; a high type wins at price ``b`` only when all
    rivals are low, which gives ``u_h = theta**(n-1) (1 - b)``.
    """
    n, t, b = scene.n, scene.theta, scene.budget
    top = scene.top
    u_h = top * (1.0 - b)
    u_l = u_h / n
    # probability of at most one high type among n bidders
    sale_at_b = t**n + n * top * (1.0 - t)
    pi = sale_at_b * b + 1.0 - sale_at_b
    return PayoffTriple(u_h, u_l, pi)


def allpay_payoffs(scene: AuctionScene) -> PayoffTriple:
    n, t, b = scene.n, scene.theta, scene.budget
    top = scene.top
    u_h = max(top - b, 0.0)
    u_l = max(top / n - b, 0.0)
    pi = 1.0 - n * ((1.0 - t) * u_h + t * u_l)
    return PayoffTriple(u_h, u_l, pi)


def _tie_share(mu: float, n: int) -> float:
    """``(1 - (1 - mu)**n) / mu``, accurate for small mu."""
    return -math.expm1(n * math.log1p(-mu)) / mu if mu < 1.0 else 1.0


def solve_atom_mu(scene: AuctionScene) -> float:
    """Size of the low types' atom at ``b`` in region R2.

    Solves ``b n / theta**(n-1) = (1 - (1 - mu)**n) / mu`` by bisection; the
    right side falls strictly from ``n`` to 1 on ``(0, 1]``.
    """
    region = classify_region(scene)
    if region.tag != R2:
        raise RegionError(f"the atom exists only in R2; scene is in {region.tag}")
    target = scene.budget * scene.n / scene.top

    def residual(mu):
        return target - _tie_share(mu, scene.n)

    # residual rises in mu, from target - n < 0 towards target - 1 >= 0
    if residual(1.0) <= 0.0:  # b == theta**(n-1)/n
        return 1.0
    lo, hi = 0.0, 1.0
    mid = 0.5
    for _ in range(MU_MAX_ITER):
        mid = 0.5 * (lo + hi)
        r = residual(mid)
        if r == 0.0 or mid in (lo, hi):
            break
        if r < 0.0:
            lo = mid
        else:
            hi = mid
    if abs(residual(mid)) >= MU_TOL:
        raise ArithmeticError(f"atom equation not solved: residual {residual(mid):.3e}")
    return mid


def atom_payoff(scene: AuctionScene, mu: float) -> float:
    """Payoff from bidding exactly ``b`` when low rivals hold mass ``mu`` there."""
    if not 0.0 < mu <= 1.0:
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    return scene.top * _tie_share(mu, scene.n) / scene.n - scene.budget


def _require_interior(scene: AuctionScene):
    if scene.theta in (0.0, 1.0):
        raise DegenerateCompositionError(
            f"theta={scene.theta}: only one buyer type bids; use allpay_profile"
        )


def allpay_bid_cdfs(scene: AuctionScene) -> Tuple[BidDistribution, BidDistribution]:
    """Equilibrium all-pay strategies ``(G_h, G_l)`` for interior theta."""
    _require_interior(scene)
    return allpay_profile(scene)


def allpay_profile(scene: AuctionScene) -> Tuple[BidDistribution, BidDistribution]:
    """Like :func:`allpay_bid_cdfs` but also covers theta in {0, 1}.

    An absent type gets the continuity limit of its strategy: at theta=0 the
    low CDF collapses to a point mass at 0, at theta=1 the high one to ``b``.
    """
    t, b, k = scene.theta, scene.budget, scene.k
    top = scene.top
    tag = classify_region(scene).tag

    if tag == R3:
        g_h = BidDistribution(segments=(PowerSegment(top, 1.0, k, offset=t, scale=1.0 - t),))
        if t == 0.0:
            g_l = BidDistribution.point_mass(0.0)
        else:
            g_l = BidDistribution(segments=(PowerSegment(0.0, top, k, scale=t),))
        return g_h, g_l

    if t == 1.0:
        g_h = BidDistribution.point_mass(b)
    else:
        g_h = BidDistribution(
            segments=(
                PowerSegment(b, 1.0 - top + b, k, shift=top - b, offset=t, scale=1.0 - t),
            )
        )
    if tag == R1:
        g_l = BidDistribution.point_mass(b)
    else:
        mu = solve_atom_mu(scene)
        if mu == 1.0:
            g_l = BidDistribution.point_mass(b)
        else:
            p_bar = (1.0 - mu) ** k * top
            g_l = BidDistribution(
                segments=(PowerSegment(0.0, p_bar, k, scale=t),),
                atoms=(Atom(b, mu),),
            )
    return g_h, g_l


def firstprice_high_cdf(scene: AuctionScene) -> BidDistribution:
    """High-type first-price strategy on ``[b, 1 - (1-b) theta**(n-1)]``.

    Indifference ``(theta + (1-theta) F(p))**(n-1) (1-p) = theta**(n-1) (1-b)``
    pins down F.
    """
    _require_interior(scene)
    c = (1.0 - scene.budget) * scene.top
    seg = FirstPriceSegment(scene.budget, 1.0 - c, scene.k, c, scene.theta)
    return BidDistribution(segments=(seg,))


def standard_bid_cdfs(scene: AuctionScene, rule: str = "first"):
    """``(G_h, G_l)`` for a first- or second-price auction at any theta."""
    g_l = BidDistribution.point_mass(scene.budget)
    if rule == "second" or scene.theta == 0.0:
        return BidDistribution.point_mass(1.0), g_l
    if rule != "first":
        raise ValueError(f"unknown standard rule {rule!r}")
    if scene.theta == 1.0:
        return BidDistribution.point_mass(scene.budget), g_l
    return firstprice_high_cdf(scene), g_l


def _mixture(p, g_h, g_l, theta, left=False):
    if left:
        return theta * np.asarray(g_l.eval_left(p)) + (1.0 - theta) * np.asarray(g_h.eval_left(p))
    return theta * np.asarray(g_l.eval(p)) + (1.0 - theta) * np.asarray(g_h.eval(p))


def eu_of_bid(p, g_h: BidDistribution, g_l: BidDistribution, scene: AuctionScene):
    """All-pay payoff of bidding ``p`` against ``n-1`` rivals; ``p`` must not be an atom."""
    p_arr = np.asarray(p, dtype=float)
    if np.any((g_h.atom_mass(p_arr) > 0) & (scene.theta < 1.0)) or np.any(
        (g_l.atom_mass(p_arr) > 0) & (scene.theta > 0.0)
    ):
        raise ValueError("bid sits on an atom; use atom_payoff / tie_inclusive_payoff")
    out = _mixture(p_arr, g_h, g_l, scene.theta) ** scene.k - p_arr
    return float(out) if np.ndim(p) == 0 else out


def tie_inclusive_payoff(p, g_h: BidDistribution, g_l: BidDistribution, scene: AuctionScene):
    """All-pay payoff of bidding ``p`` with ties split uniformly.

    With rivals below ``p`` w.p. ``a`` and tying w.p. ``m`` each, the win
    probability is ``((a + m)**n - a**n) / (n m)``.
    """
    p_arr = np.asarray(p, dtype=float)
    n, k = scene.n, scene.k
    le = _mixture(p_arr, g_h, g_l, scene.theta)
    lt = _mixture(p_arr, g_h, g_l, scene.theta, left=True)
    m = le - lt
    tied = m > 1e-13
    safe_m = np.where(tied, m, 1.0)
    win = np.where(tied, (le**n - lt**n) / (n * safe_m), le**k)
    out = win - p_arr
    return float(out) if np.ndim(p) == 0 else out


def _own_payoff(g, g_h, g_l, scene, quantiles):
    bids = g.inverse(quantiles)
    return float(np.mean(tie_inclusive_payoff(bids, g_h, g_l, scene)))


def best_response_gap(
    profile: Tuple[BidDistribution, BidDistribution],
    scene: AuctionScene,
    grid_size: int = 100_000,
    claimed: Optional[Tuple[float, float]] = None,
) -> Tuple[float, float]:
    """Largest gain from a pure deviation on a bid grid, per type.

    The grid is ``{j / grid_size}`` on [0, 1], with ``b`` added for both
    types and low types restricted to ``[0, b]``.  Payoffs at atoms are tie
    inclusive.  ``claimed`` defaults to the payoff each type actually earns
    from its own strategy, computed on a midpoint quantile grid of the same
    size.  For an equilibrium both gaps are at most about two grid spacings.
    """
    if grid_size < 1000:
        raise ValueError("grid_size must be at least 1000")
    g_h, g_l = profile
    b = scene.budget
    grid = np.union1d(np.linspace(0.0, 1.0, grid_size + 1), [b])
    payoff = tie_inclusive_payoff(grid, g_h, g_l, scene)
    best_h = float(payoff.max())
    best_l = float(payoff[grid <= b].max())
    if claimed is None:
        q = (np.arange(grid_size) + 0.5) / grid_size
        claimed = (_own_payoff(g_h, g_h, g_l, scene, q), _own_payoff(g_l, g_h, g_l, scene, q))
    return best_h - claimed[0], best_l - claimed[1]


def expected_bid(dist: BidDistribution, method: str = "closed") -> float:
    """Mean bid; ``method="quad"`` integrates ``lower + int (1 - G)`` numerically."""
    if method == "closed":
        return dist.mean()
    if method != "quad":
        raise ValueError(f"unknown method {method!r}")
    from scipy.integrate import quad

    lo, hi = dist.lower, dist.upper
    if hi == lo:
        return lo
    breaks = sorted(
        {s.lower for s in dist.segments}
        | {s.upper for s in dist.segments}
        | {a.location for a in dist.atoms}
    )
    breaks = [x for x in breaks if lo < x < hi]
    val, _ = quad(
        lambda p: 1.0 - dist.eval(p),
        lo,
        hi,
        points=breaks or None,
        epsabs=1e-12,
        epsrel=1e-12,
        limit=200,
    )
    return lo + val
