"""``allpay`` command-line interface.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 statistical
breach (some Monte Carlo target beyond 4 standard errors), 4 model
hypothesis not met (``b <= sigma``, or a deviation needing a subsidy).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import reports
from .montecarlo import FAIL_Z
from .reports import RunManifest

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_BREACH, EXIT_HYPOTHESIS = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _unit_open(name):
    def check(text):
        x = float(text)
        if not 0.0 < x < 1.0:
            raise UsageError(f"{name} must lie in (0,1)")
        return x

    return check


def _unit_closed(name):
    def check(text):
        x = float(text)
        if not 0.0 <= x <= 1.0:
            raise UsageError(f"{name} must lie in [0,1]")
        return x

    return check


def _validate(args):
    """Range checks, reported as usage errors."""
    checks = {
        "theta": _unit_closed("theta"),
        "sigma": _unit_closed("sigma"),
        "b": _unit_open("b"),
    }
    for name, check in checks.items():
        value = getattr(args, name, None)
        if value is not None and not isinstance(value, str):
            check(value)
    n = getattr(args, "n", None)
    if isinstance(n, int) and n < 2:
        raise UsageError("n must be at least 2")
    lam = getattr(args, "lam", None)
    if isinstance(lam, float) and not lam > 0:
        raise UsageError("lambda must be positive")
    reps = getattr(args, "reps", None)
    if reps is not None and reps < 10_000:
        raise UsageError("reps must be at least 10000")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="allpay", description=__doc__.splitlines()[0])
    p.add_argument("--timestamp", help="manifest timestamp (default: now or SOURCE_DATE_EPOCH)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_flag(sp):
        sp.add_argument("--out", help="write to this path instead of stdout")

    eq = sub.add_parser("equilibrium", help="per-store equilibrium at (n, theta, b)")
    eq.add_argument("--n", type=int, required=True)
    eq.add_argument("--theta", type=float, required=True)
    eq.add_argument("--b", type=float, required=True)
    out_flag(eq)

    cdf = sub.add_parser("bidcdf", help="CSV of the equilibrium bid CDFs")
    cdf.add_argument("--n", type=int, required=True)
    cdf.add_argument("--theta", type=float, required=True)
    cdf.add_argument("--b", type=float, required=True)
    cdf.add_argument("--points", type=int, default=101)
    cdf.add_argument("--format", choices=["allpay", "first", "second"], default="allpay")
    out_flag(cdf)

    sim = sub.add_parser("simulate", help="Monte Carlo check of payoffs")
    sim.add_argument("--format", choices=["allpay", "first", "second", "standard"], default="allpay")
    sim.add_argument("--n", type=int)
    sim.add_argument("--theta", type=float)
    sim.add_argument("--b", type=float, required=True)
    sim.add_argument("--lambda", dest="lam", type=float, help="simulate a store under Poisson demand")
    sim.add_argument("--sigma", type=float)
    sim.add_argument("--r", type=float, default=0.0)
    sim.add_argument("--reps", type=int, default=1_000_000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--backend", choices=["compiled", "python"])
    sim.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    out_flag(sim)

    mk = sub.add_parser("market", help="symmetric all-pay market equilibrium and deviations")
    mk.add_argument("--lambda", dest="lam", type=float, required=True)
    mk.add_argument("--sigma", type=float, required=True)
    mk.add_argument("--b", type=float, required=True)
    mk.add_argument("--r", type=float, default=0.3, help="reserve of the hypothetical standard market")
    out_flag(mk)

    dv = sub.add_parser("deviate", help="profit from switching to all-pay in a standard market")
    dv.add_argument("--lambda", dest="lam", type=float, required=True)
    dv.add_argument("--sigma", type=float, required=True)
    dv.add_argument("--b", type=float, required=True)
    dv.add_argument("--r", type=float, required=True)
    out_flag(dv)

    sw = sub.add_parser("sweep", help="analytic quantities and residuals over a grid")
    sw.add_argument("--n", default="2", help="start:stop:step, a,b,c or a single value")
    sw.add_argument("--theta", default="0.5")
    sw.add_argument("--b", default="0.5")
    sw.add_argument("--lambda", dest="lam", default="1")
    sw.add_argument("--sigma", default="0.2")
    sw.add_argument("--r", default="0")
    sw.add_argument("--format", choices=["csv", "json"], default="csv")
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out", required=True)

    rp = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    rp.add_argument("manifest", help="manifest JSON file or a CSV with an embedded manifest")
    rp.add_argument("--out")
    return p


_PARAM_KEYS = {
    "equilibrium": ["n", "theta", "b"],
    "bidcdf": ["n", "theta", "b", "points", "format"],
    "simulate": ["format", "n", "theta", "b", "lam", "sigma", "r", "reps", "seed", "backend", "perturb"],
    "market": ["lam", "sigma", "b", "r"],
    "deviate": ["lam", "sigma", "b", "r"],
    "sweep": ["n", "theta", "b", "lam", "sigma", "r", "format", "workers"],
}


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_report(manifest, body):
    return reports.to_json({"manifest": manifest.as_dict(), **body})


def run(args) -> int:
    cmd = args.command
    params = {k: getattr(args, k, None) for k in _PARAM_KEYS[cmd]}
    seed = params.get("seed")
    manifest = RunManifest(cmd, params, seed)
    if args.timestamp:
        manifest.timestamp = args.timestamp

    if cmd == "equilibrium":
        _emit(_json_report(manifest, reports.equilibrium_report(args.n, args.theta, args.b)), args.out)
        return EXIT_OK

    if cmd == "bidcdf":
        rows = reports.bidcdf_rows(args.n, args.theta, args.b, args.points, args.format)
        _emit(reports.csv_text(reports.BIDCDF_COLUMNS, rows, manifest), args.out)
        return EXIT_OK

    if cmd == "simulate":
        if args.lam is None and (args.n is None or args.theta is None):
            raise UsageError("simulate needs --n and --theta, or --lambda and --sigma")
        if args.lam is not None and args.sigma is None:
            raise UsageError("--lambda requires --sigma")
        body = reports.simulate_report(
            args.format, args.reps, args.seed, n=args.n, theta=args.theta, b=args.b,
            lam=args.lam, sigma=args.sigma, r=args.r, perturb=args.perturb, backend=args.backend,
        )
        _emit(_json_report(manifest, body), args.out)
        return EXIT_BREACH if body["max_abs_z"] > FAIL_Z else EXIT_OK

    if cmd == "market":
        body = reports.market_report(args.lam, args.sigma, args.b, args.r)
        _emit(_json_report(manifest, body), args.out)
        if body["status"] == "hypothesis_violated":
            sys.stderr.write(f"warning: {body['warning']}\n")
            return EXIT_HYPOTHESIS
        return EXIT_OK

    if cmd == "deviate":
        body = reports.deviate_report(args.lam, args.sigma, args.b, args.r)
        _emit(_json_report(manifest, body), args.out)
        return EXIT_OK if body["status"] == "ok" else EXIT_HYPOTHESIS

    if cmd == "sweep":
        axes = {
            "n": reports.parse_axis(args.n, int),
            "theta": reports.parse_axis(args.theta),
            "b": reports.parse_axis(args.b),
            "lambda": reports.parse_axis(args.lam),
            "sigma": reports.parse_axis(args.sigma),
            "r": reports.parse_axis(args.r),
        }
        for v in axes["n"]:
            if v < 2:
                raise UsageError("n must be at least 2")
        for v in axes["b"]:
            if not 0 < v < 1:
                raise UsageError("b must lie in (0,1)")
        rows = reports.sweep_rows(axes, args.workers)
        out = Path(args.out)
        if args.format == "csv":
            text = reports.csv_text(reports.SWEEP_COLUMNS, rows, manifest)
        else:
            records = [dict(zip(reports.SWEEP_COLUMNS, r)) for r in rows]
            text = reports.to_json({"manifest": manifest.as_dict(), "columns": reports.SWEEP_COLUMNS,
                                    "rows": records})
        out.write_text(text)
        Path(str(out) + ".manifest.json").write_text(reports.to_json(manifest.as_dict()))
        return EXIT_OK

    raise UsageError(f"unknown command {cmd}")


def _load_manifest(path: str) -> RunManifest:
    text = Path(path).read_text()
    first = text.splitlines()[0] if text else ""
    if first.startswith("# manifest: "):
        data = json.loads(first[len("# manifest: "):])
    else:
        data = json.loads(text)
        data = data.get("manifest", data)
    return RunManifest.from_dict(data)


def replay_argv(manifest: RunManifest, out=None) -> list:
    """Command line reproducing the run recorded in `manifest`."""
    flag = {"lam": "--lambda"}
    argv = ["--timestamp", manifest.timestamp, manifest.command]
    for key, value in manifest.params.items():
        if value is None or key == "perturb" and not value:
            continue
        argv += [flag.get(key, f"--{key}"), str(value)]
    if out:
        argv += ["--out", out]
    return argv


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            manifest = _load_manifest(args.manifest)
            out = args.out
            if manifest.command == "sweep" and not out:
                raise UsageError("replaying a sweep needs --out")
            args = parser.parse_args(replay_argv(manifest, out))
        _validate(args)
        return run(args)
    except UsageError as exc:
        sys.stderr.write(f"allpay: error: {exc}\n")
        return EXIT_USAGE
    except ArithmeticError as exc:
        sys.stderr.write(f"allpay: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        sys.stderr.write(f"allpay: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"allpay: I/O error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
