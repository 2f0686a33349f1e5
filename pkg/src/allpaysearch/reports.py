"""Report builders behind the command-line interface.

Each builder returns plain dicts/lists so the CLI only handles parsing and
I/O.  Number formatting and the run manifest live here too.
"""
from __future__ import annotations

import csv
import datetime as _dt
import io
import itertools
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import __version__
from .auction import (
    AuctionScene,
    R2,
    allpay_payoffs,
    allpay_profile,
    classify_region,
    solve_atom_mu,
    standard_bid_cdfs,
    standard_payoffs,
)
from .bids import BidDistribution
from .market import (
    DemandResponse,
    HypothesisViolated,
    MarketParams,
    MechanismPosting,
    allpay_deviation_from_standard,
    allpay_symmetric_equilibrium,
    lemma1_residual,
    profit_direct,
    standard_deviation_check,
    utilities,
)
from .montecarlo import SimConfig, simulate_market, simulate_store, z_status
from .poisson import z

SWEEP_COLUMNS = [
    "index", "n", "theta", "b", "lambda", "sigma", "r",
    "region", "mu",
    "allpay_u_h", "allpay_u_l", "allpay_pi",
    "standard_u_h", "standard_u_l", "standard_pi",
    "surplus_residual_allpay", "surplus_residual_standard",
    "U_h_allpay", "U_l_allpay", "Pi_allpay",
    "U_h_standard", "U_l_standard", "Pi_standard",
    "lemma1_residual_allpay", "lemma1_residual_standard",
    "hypothesis_b_gt_sigma", "equilibrium_profit",
]

BIDCDF_COLUMNS = ["bid", "G_l", "G_h", "atom_l", "atom_h"]


def fmt_number(x) -> str:
    """17 significant digits; empty string for missing values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if not math.isfinite(x) else x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


@dataclass
class RunManifest:
    command: str
    params: Dict[str, Any]
    seed: Optional[int] = None
    version: str = __version__
    timestamp: str = field(default_factory=lambda: default_timestamp())

    def as_dict(self):
        return {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "version": self.version,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["command"], dict(d["params"]), d.get("seed"), d.get("version", __version__),
                   d["timestamp"])


def default_timestamp() -> str:
    """UTC time of the run; honours ``SOURCE_DATE_EPOCH`` for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        when = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
    else:
        when = _dt.datetime.now(tz=_dt.timezone.utc).replace(microsecond=0)
    return when.isoformat()


# -- equilibrium --------------------------------------------------------------

def _support(dist: BidDistribution) -> dict:
    return {
        "lower": dist.lower,
        "upper": dist.upper,
        "atoms": [{"location": a.location, "mass": a.mass} for a in dist.atoms],
        "mean": dist.mean(),
    }


def equilibrium_report(n: int, theta: float, b: float) -> dict:
    scene = AuctionScene(n, theta, b)
    region = classify_region(scene)
    mu = solve_atom_mu(scene) if region.tag == R2 else None
    g_h, g_l = allpay_profile(scene)
    s_h, s_l = standard_bid_cdfs(scene, "first")
    ap = allpay_payoffs(scene)
    st = standard_payoffs(scene)
    return {
        "scene": {"n": n, "theta": theta, "b": b},
        "region": region.tag,
        "thresholds": {"theta^(n-1)/n": region.lower_threshold, "theta^(n-1)": region.upper_threshold},
        "mu": mu,
        "allpay": {
            "u_h": ap.u_h, "u_l": ap.u_l, "pi": ap.pi,
            "G_h": _support(g_h), "G_l": _support(g_l),
            "surplus_residual": ap.surplus_residual(scene),
        },
        "standard": {
            "u_h": st.u_h, "u_l": st.u_l, "pi": st.pi,
            "first_price_G_h": _support(s_h), "G_l": _support(s_l),
            "surplus_residual": st.surplus_residual(scene),
        },
        "buyer_dominance": {
            "u_h_allpay_lt_standard": ap.u_h < st.u_h,
            "u_l_allpay_lt_standard": ap.u_l < st.u_l,
        },
        "revenue_dominance": ap.pi >= st.pi,
    }


# -- bid CDF table ------------------------------------------------------------

def bidcdf_rows(n: int, theta: float, b: float, points: int, rule: str = "allpay") -> List[list]:
    """Rows ``[bid, G_l, G_h, atom_l, atom_h]`` covering both supports."""
    if points < 2:
        raise ValueError("points must be at least 2")
    scene = AuctionScene(n, theta, b)
    if rule == "allpay":
        g_h, g_l = allpay_profile(scene)
    else:
        g_h, g_l = standard_bid_cdfs(scene, rule)
    lo = min(g_h.lower, g_l.lower)
    hi = max(g_h.upper, g_l.upper)
    marks = {lo, hi}
    for d in (g_h, g_l):
        marks |= {a.location for a in d.atoms}
        marks |= {s.lower for s in d.segments} | {s.upper for s in d.segments}
    grid = np.union1d(np.linspace(lo, hi, points), sorted(marks))
    rows = []
    for p, gl, gh, al, ah in zip(grid, g_l.eval(grid), g_h.eval(grid), g_l.atom_mass(grid), g_h.atom_mass(grid)):
        rows.append([p, gl, gh, al, ah])
    return rows


def write_csv(stream, columns: Sequence[str], rows: Iterable[Sequence], manifest: Optional[RunManifest]):
    if manifest is not None:
        stream.write("# manifest: " + json.dumps(_jsonable(manifest.as_dict()), sort_keys=True) + "\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt_number(v) for v in row])


def csv_text(columns, rows, manifest=None) -> str:
    buf = io.StringIO()
    write_csv(buf, columns, rows, manifest)
    return buf.getvalue()


# -- simulate -----------------------------------------------------------------

def _target_rows(estimates, analytic, perturb):
    rows = []
    for est, value in zip(estimates, analytic):
        if value is None or not math.isfinite(est.mean):
            continue
        value = value + perturb
        zs = est.z_score(value)
        rows.append({
            "target": est.target,
            "analytic": value,
            "estimate": est.mean,
            "std_error": est.std_error,
            "z": zs,
            "status": z_status(zs),
        })
    return rows


def simulate_report(fmt: str, reps: int, seed: int, n=None, theta=None, b=None,
                    lam=None, sigma=None, r=0.0, perturb=0.0, backend=None) -> dict:
    """Analytic value vs. Monte Carlo estimate for each target.

    With ``lam`` given, simulates a store facing Poisson demand
    ``(lam (1 - sigma), lam sigma)``; otherwise one auction with ``n``
    bidders and low-type probability ``theta``.
    """
    config = SimConfig(replications=reps, seed=seed, backend=backend)
    if lam is None:
        scene = AuctionScene(n, theta, b)
        est = simulate_store(scene, fmt, config)
        exact = allpay_payoffs(scene) if fmt == "allpay" else standard_payoffs(scene)
        analytic = list(exact)
        setting = {"mode": "store", "n": n, "theta": theta, "b": b}
    else:
        params = MarketParams(lam, sigma, b)
        post = MechanismPosting("allpay" if fmt == "allpay" else "standard", r)
        demand = DemandResponse.from_composition(lam, sigma)
        rule = "second" if fmt == "second" else "first"
        est = simulate_market(params, post, demand, config, rule=rule)
        u_h, u_l = utilities(post, demand, b)
        analytic = [u_h, u_l, profit_direct(post, demand, b), z(0, lam)]
        setting = {"mode": "market", "lambda": lam, "sigma": sigma, "b": b, "r": r}
    targets = _target_rows(est, analytic, perturb)
    worst = max((abs(t["z"]) for t in targets), default=0.0)
    return {
        "format": fmt,
        "setting": setting,
        "replications": reps,
        "seed": seed,
        "targets": targets,
        "max_abs_z": worst,
        "status": z_status(worst),
    }


# -- market -------------------------------------------------------------------

def deviate_report(lam: float, sigma: float, b: float, r_s: float) -> dict:
    from .market import DeviationInfeasible, SubsidyRequired

    params = MarketParams(lam, sigma, b)
    out = {"lambda": lam, "sigma": sigma, "b": b, "r_s": r_s}
    try:
        dev = allpay_deviation_from_standard(params, r_s)
        out.update(theta_hat=dev.theta_hat, r_hat=dev.r_hat, profit_gain=dev.profit_gain, status="ok")
    except SubsidyRequired as exc:
        d = exc.deviation
        out.update(theta_hat=d.theta_hat, r_hat=d.r_hat, profit_gain=d.profit_gain,
                   status="subsidy_required")
    except DeviationInfeasible as exc:
        out.update(theta_hat=None, r_hat=None, profit_gain=None, status="infeasible",
                   message=str(exc))
    return out


def market_report(lam: float, sigma: float, b: float, r_s: float = 0.3) -> dict:
    params = MarketParams(lam, sigma, b)
    report = {"lambda": lam, "sigma": sigma, "b": b}
    try:
        eq = allpay_symmetric_equilibrium(params)
    except HypothesisViolated as exc:
        report.update(status="hypothesis_violated", warning=str(exc))
        return report
    report.update(
        status="ok",
        omega_h=eq.omega_h,
        omega_l=eq.omega_l,
        reserve_star=eq.reserve_star,
        profit=eq.profit,
        standard_deviation_gain=standard_deviation_check(params),
    )
    if 0.0 < sigma < 1.0:
        report["allpay_deviation_from_standard"] = deviate_report(lam, sigma, b, r_s)
    return report


# -- sweep --------------------------------------------------------------------

def parse_axis(spec: str, cast=float) -> list:
    """``"a:b:step"`` (inclusive, empty if ``a > b``), ``"x,y,z"`` or ``"x"``."""
    spec = str(spec).strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("range step must be positive")
        if start > stop:
            return []
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [cast(round(start + i * step, 12)) for i in range(count)]
    return [cast(v) for v in spec.split(",") if v.strip()]


def sweep_row(point) -> list:
    index, n, theta, b, lam, sigma, r = point
    scene = AuctionScene(n, theta, b)
    region = classify_region(scene)
    mu = solve_atom_mu(scene) if region.tag == R2 else None
    ap = allpay_payoffs(scene)
    st = standard_payoffs(scene)
    demand = DemandResponse.from_composition(lam, theta)
    post_a = MechanismPosting("allpay", r)
    post_s = MechanismPosting("standard", r)
    ua = utilities(post_a, demand, b)
    us = utilities(post_s, demand, b)
    hyp = b > sigma
    eq_profit = allpay_symmetric_equilibrium(MarketParams(lam, sigma, b)).profit if hyp else None
    return [
        index, n, theta, b, lam, sigma, r,
        region.tag, mu,
        ap.u_h, ap.u_l, ap.pi,
        st.u_h, st.u_l, st.pi,
        ap.surplus_residual(scene), st.surplus_residual(scene),
        ua[0], ua[1], profit_direct(post_a, demand, b),
        us[0], us[1], profit_direct(post_s, demand, b),
        lemma1_residual(post_a, demand, b), lemma1_residual(post_s, demand, b),
        hyp, eq_profit,
    ]


def sweep_points(axes: dict) -> list:
    keys = ["n", "theta", "b", "lambda", "sigma", "r"]
    combos = itertools.product(*(axes[k] for k in keys))
    return [(i, *c) for i, c in enumerate(combos)]


def sweep_rows(axes: dict, workers: int = 1) -> list:
    points = sweep_points(axes)
    if workers > 1 and len(points) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(sweep_row, points, chunksize=16))
    return [sweep_row(p) for p in points]
