"""Poisson demand at a single store.

A store whose expected number of arrivals is ``x`` meets exactly ``n``
customers with probability ``z(n, x) = exp(-x) x**n / n!``.  Every expected
utility and profit in the market layer is a series over these masses, so
this module also provides a truncated expectation with an explicit tail
bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

__all__ = [
    "SeriesPolicy",
    "SeriesResult",
    "TruncationError",
    "z",
    "poisson_tail",
    "expect_over_demand",
]

# beyond these the direct product risks overflow in x**n or n!
_DIRECT_MAX_N = 30
_DIRECT_MAX_X = 50.0


class TruncationError(ArithmeticError):
    """Raised when a series hits ``max_terms`` before its tail bound."""

    def __init__(self, message: str, partial: float, residual_bound: float):
        super().__init__(message)
        self.partial = partial
        self.residual_bound = residual_bound


@dataclass(frozen=True)
class SeriesPolicy:
    tail_tolerance: float = 1e-12
    max_terms: int = 512

    def __post_init__(self):
        if not self.tail_tolerance > 0:
            raise ValueError("tail_tolerance must be positive")
        if self.max_terms < 2:
            raise ValueError("max_terms must be at least 2")


DEFAULT_POLICY = SeriesPolicy()


class SeriesResult(NamedTuple):
    value: float
    tail_bound: float
    terms: int


def _check_rate(x: float) -> float:
    x = float(x)
    if not (x >= 0 and math.isfinite(x)):
        raise ValueError(f"Poisson rate must be finite and non-negative, got {x!r}")
    return x


def z(n: int, x: float) -> float:
    """Probability that a store with arrival rate `x` meets exactly `n` customers."""
    if n < 0:
        raise ValueError(f"n must be non-negative, got {n}")
    x = _check_rate(x)
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if n <= _DIRECT_MAX_N and x <= _DIRECT_MAX_X:
        # direct form keeps z(1, x) == x * z(0, x) bit-for-bit
        return math.exp(-x) * x**n / math.factorial(n)
    return math.exp(-x + n * math.log(x) - math.lgamma(n + 1))


def poisson_tail(n: int, x: float) -> float:
    """Upper bound on P(N > n) for N ~ Poisson(x).

    Uses the geometric majorant ``z(n+1, x) / (1 - x/(n+2))`` once ``n + 2 > x``
    and the trivial bound 1 before that.
    """
    x = _check_rate(x)
    if x == 0.0:
        return 0.0
    if n + 2 <= x:
        return 1.0
    return min(1.0, z(n + 1, x) / (1.0 - x / (n + 2)))


def expect_over_demand(
    x: float,
    f: Callable[[int], float],
    policy: SeriesPolicy = DEFAULT_POLICY,
    start: int = 0,
    full_output: bool = False,
):
    """Compute ``sum_{n >= start} z(n, x) f(n)`` for a payoff map bounded by 1.

    The sum stops at the first index whose Poisson tail mass is below
    ``policy.tail_tolerance``; since ``|f| <= 1`` that mass bounds the
    truncation error.

    Parameters
    ----------
    x : float
        Expected arrivals.
    f : callable
        Integer -> payoff, ``|f(n)| <= 1``.
    policy : SeriesPolicy
        Tail tolerance and term cap.
    start : int
        First index of the sum.
    full_output : bool
        If true return a :class:`SeriesResult` instead of the bare value.

    Raises
    ------
    TruncationError
        If ``max_terms`` terms are summed and the tail is still too heavy.
    """
    x = _check_rate(x)
    if start < 0:
        raise ValueError("start must be non-negative")
    if x == 0.0:
        value = float(f(0)) if start == 0 else 0.0
        return SeriesResult(value, 0.0, 1) if full_output else value

    weight = z(start, x)
    total = 0.0
    comp = 0.0
    n = start
    for terms in range(1, policy.max_terms + 1):
        # Kahan summation; terms span many orders of magnitude
        y = weight * f(n) - comp
        t = total + y
        comp = (t - total) - y
        total = t
        tail = poisson_tail(n, x)
        if tail < policy.tail_tolerance:
            if full_output:
                return SeriesResult(total, tail, terms)
            return total
        n += 1
        weight = weight * x / n if weight > 0.0 else z(n, x)
    raise TruncationError(
        f"series over Poisson({x}) not converged after {policy.max_terms} terms",
        partial=total,
        residual_bound=poisson_tail(n - 1, x),
    )
