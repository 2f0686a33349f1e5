"""Piecewise bid distributions with atoms.

Every equilibrium strategy in the model is a mixture of point masses and
continuous pieces of the form ``G(p) = ((p + shift)**(1/k) - offset) / scale``
(all-pay) or ``G(p) = ((c / (1 - p))**(1/k) - theta) / (1 - theta)``
(first-price, high type).  Segment formulas return *global* CDF values, so a
distribution is evaluated by walking its pieces in bid order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Atom",
    "PowerSegment",
    "FirstPriceSegment",
    "BidDistribution",
    "ks_distance",
]

MASS_TOL = 1e-12


@dataclass(frozen=True)
class Atom:
    location: float
    mass: float

    def __post_init__(self):
        if not 0.0 < self.mass <= 1.0 + MASS_TOL:
            raise ValueError(f"atom mass must lie in (0, 1], got {self.mass}")


@dataclass(frozen=True)
class PowerSegment:
    """``G(p) = ((p + shift)**(1/k) - offset) / scale`` on ``[lower, upper]``."""

    lower: float
    upper: float
    k: int
    shift: float = 0.0
    offset: float = 0.0
    scale: float = 1.0

    def cdf(self, p):
        p = np.clip(p, self.lower, self.upper)
        return (np.power(p + self.shift, 1.0 / self.k) - self.offset) / self.scale

    def inverse(self, q):
        p = np.power(self.offset + self.scale * np.asarray(q, dtype=float), self.k) - self.shift
        return np.clip(p, self.lower, self.upper)

    def partial_mean(self) -> float:
        """Closed-form ``int p dG`` over the segment."""
        a = self.lower + self.shift
        c = self.upper + self.shift
        e = 1.0 + 1.0 / self.k
        head = (c**e - a**e) / ((self.k + 1) * self.scale)
        return head - self.shift * float(self.cdf(self.upper) - self.cdf(self.lower))


@dataclass(frozen=True)
class FirstPriceSegment:
    """First-price high-type CDF, from ``(theta + (1-theta) F)**k (1-p) = c``."""

    lower: float
    upper: float
    k: int
    c: float
    theta: float

    def cdf(self, p):
        p = np.clip(p, self.lower, self.upper)
        f = (np.power(self.c / (1.0 - p), 1.0 / self.k) - self.theta) / (1.0 - self.theta)
        # 1 - upper loses digits when c is tiny; the top is exactly 1 by construction
        return np.where(p >= self.upper, 1.0, f)

    def inverse(self, q):
        base = self.theta + (1.0 - self.theta) * np.asarray(q, dtype=float)
        p = 1.0 - self.c / np.power(base, self.k)
        return np.clip(p, self.lower, self.upper)

    def partial_mean(self) -> float:
        # p F | - int F dp, with int (c/(1-p))**(1/k) dp in closed form
        lo, hi, k = self.lower, self.upper, self.k
        if k == 1:
            prim = lambda p: -self.c * math.log(1.0 - p)  # noqa: E731
        else:
            e = 1.0 - 1.0 / k
            prim = lambda p: -(self.c ** (1.0 / k)) * (1.0 - p) ** e / e  # noqa: E731
        int_root = prim(hi) - prim(lo)
        int_cdf = (int_root - self.theta * (hi - lo)) / (1.0 - self.theta)
        return hi * float(self.cdf(hi)) - lo * float(self.cdf(lo)) - int_cdf


Segment = Union[PowerSegment, FirstPriceSegment]


@dataclass(frozen=True)
class BidDistribution:
    """A mixed bidding strategy: ordered continuous segments plus atoms.

    Instances are immutable and validated on construction.
    """

    segments: tuple = ()
    atoms: tuple = ()
    _pieces: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(sorted(self.segments, key=lambda s: s.lower))
        atoms = tuple(sorted(self.atoms, key=lambda a: a.location))
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "atoms", atoms)
        if not segs and not atoms:
            raise ValueError("empty distribution")
        for s0, s1 in zip(segs, segs[1:]):
            if s1.lower < s0.upper:
                raise ValueError("segments overlap")
        for a in atoms:
            for s in segs:
                if s.lower < a.location < s.upper:
                    raise ValueError(f"atom at {a.location} is interior to a segment")
        # atoms sort before a segment starting at the same bid
        pieces = sorted(
            [(a.location, 0, a) for a in atoms] + [(s.lower, 1, s) for s in segs],
            key=lambda t: (t[0], t[1]),
        )
        object.__setattr__(self, "_pieces", tuple(p[2] for p in pieces))

        running = 0.0
        for piece in self._pieces:
            if isinstance(piece, Atom):
                running += piece.mass
            else:
                start = float(piece.cdf(piece.lower))
                end = float(piece.cdf(piece.upper))
                if abs(start - running) > 1e-9 or end < start - MASS_TOL:
                    raise ValueError("segment is not continuous with the mass below it")
                running = end
        if abs(running - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {running!r} differs from 1")

    @classmethod
    def point_mass(cls, location: float) -> "BidDistribution":
        return cls(atoms=(Atom(float(location), 1.0),))

    @property
    def lower(self) -> float:
        first = self._pieces[0]
        return first.location if isinstance(first, Atom) else first.lower

    @property
    def upper(self) -> float:
        last = self._pieces[-1]
        return last.location if isinstance(last, Atom) else last.upper

    def atom_mass(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        out = np.zeros_like(p)
        for a in self.atoms:
            out = out + np.where(p == a.location, a.mass, 0.0)
        return out

    def eval(self, p):
        """Right-continuous CDF ``P(bid <= p)``; accepts scalars or arrays."""
        scalar = np.ndim(p) == 0
        p = np.asarray(p, dtype=float)
        out = np.zeros_like(p)
        running = 0.0
        for piece in self._pieces:
            if isinstance(piece, Atom):
                running += piece.mass
                out = np.where(p >= piece.location, running, out)
            else:
                inside = (p >= piece.lower) & (p < piece.upper)
                out = np.where(inside, piece.cdf(p), out)
                running = float(piece.cdf(piece.upper))
                out = np.where(p >= piece.upper, running, out)
        out = np.where(p >= self.upper, 1.0, np.clip(out, 0.0, 1.0))
        return float(out) if scalar else out

    def eval_left(self, p):
        """Left limit ``P(bid < p)``."""
        left = np.asarray(self.eval(p)) - self.atom_mass(p)
        return float(left) if np.ndim(p) == 0 else left

    def inverse(self, u):
        """Generalized inverse ``inf{p : G(p) >= u}`` for ``u`` in ``[0, 1)``."""
        scalar = np.ndim(u) == 0
        u = np.asarray(u, dtype=float)
        if np.any((u < 0.0) | (u >= 1.0)) or np.any(np.isnan(u)):
            raise ValueError("uniform draws must lie in [0, 1)")
        out = np.full_like(u, self.upper)
        todo = np.ones(u.shape, dtype=bool)
        running = 0.0
        for piece in self._pieces:
            if isinstance(piece, Atom):
                running += piece.mass
                hit = todo & (u < running)
                out = np.where(hit, piece.location, out)
            else:
                running = float(piece.cdf(piece.upper))
                hit = todo & (u < running)
                out = np.where(hit, piece.inverse(np.where(hit, u, piece.cdf(piece.lower))), out)
            todo &= ~hit
        return float(out) if scalar else out

    sample = inverse

    def mean(self) -> float:
        return sum(s.partial_mean() for s in self.segments) + sum(
            a.location * a.mass for a in self.atoms
        )

    def total_mass(self) -> float:
        mass = sum(a.mass for a in self.atoms)
        for s in self.segments:
            mass += float(s.cdf(s.upper) - s.cdf(s.lower))
        return mass


def ks_distance(samples: Sequence[float], dist: BidDistribution) -> float:
    """Kolmogorov-Smirnov distance between an empirical sample and `dist`.

    Both one-sided limits are compared at every distinct sample value, which
    keeps the statistic exact in the presence of atoms.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    values, first = np.unique(x, return_index=True)
    last = np.append(first[1:], n)
    emp_right = last / n
    emp_left = first / n
    d = np.maximum(
        np.abs(emp_right - dist.eval(values)),
        np.abs(emp_left - dist.eval_left(values)),
    )
    return float(d.max())
