"""All-pay auctions with budget-constrained buyers under competitive search."""

__version__ = "0.1.0"

from .auction import (  # noqa: E402
    AuctionScene,
    PayoffTriple,
    Region,
    allpay_bid_cdfs,
    allpay_payoffs,
    allpay_profile,
    atom_payoff,
    best_response_gap,
    classify_region,
    eu_of_bid,
    expected_bid,
    firstprice_high_cdf,
    solve_atom_mu,
    standard_payoffs,
)
from .bids import BidDistribution  # noqa: E402
from .market import (  # noqa: E402
    DemandResponse,
    MarketEquilibrium,
    MarketParams,
    MechanismPosting,
    allpay_deviation_from_standard,
    allpay_symmetric_equilibrium,
    lemma1_residual,
    profit_direct,
    solve_demand,
    standard_deviation_check,
    utilities,
)
from .poisson import SeriesPolicy, expect_over_demand, z  # noqa: E402
