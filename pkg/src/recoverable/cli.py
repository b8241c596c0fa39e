"""Command line entry point: ``recoverable <group> <command> [options]``.

Every command prints one JSON document (or CSV with --csv) carrying at
least {value, method, tolerance}, and a run manifest on stderr.  Options
can also come from a ``key = value`` file (--config) or from environment
variables RECOVERABLE_<OPTION>; the command line wins over the
environment, which wins over the config file.

Exit codes: 0 success, 1 usage error, 2 precondition violation,
3 assertion or property failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from . import contours, dobrushin, dynamics, geometry, hardcore, transfer
from .gridio import read_grid
from .lattice import BoundaryRule, Configuration, Region

ENV_PREFIX = "RECOVERABLE_"
H0_LOWER = 0.3012


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_grid_spec(text: str) -> np.ndarray:
    """'lo:hi:step' (inclusive linear grid) or 'lo:hi:log[:points]' (geometric grid)."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ValueError(f"bad grid {text!r}; use lo:hi:step or lo:hi:log[:points]")
    lo, hi = float(parts[0]), float(parts[1])
    if parts[2] == "log":
        k = int(parts[3]) if len(parts) == 4 else 20
        if lo <= 0 or hi <= lo or k < 2:
            raise ValueError("log grid needs 0 < lo < hi and at least 2 points")
        return np.geomspace(lo, hi, k)
    step = float(parts[2])
    if step <= 0 or hi < lo:
        raise ValueError("linear grid needs step > 0 and lo <= hi")
    k = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(k), 12)


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (tuple, set, frozenset)):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _result(value, method: str, tolerance, **extra) -> dict:
    return {"value": value, "method": method, "tolerance": tolerance, **extra}


# transfer

def cmd_transfer_matrix(a):
    tm = transfer.build_transfer(a.m)
    states = [[s.left, s.right] for s in tm.states]
    return _result(tm.dense().astype(int).tolist(), "exact", 0, m=a.m, states=states, exact=True)


def cmd_transfer_count(a):
    c = transfer.count_mis(a.m, a.n)
    return _result(str(c), "exact", 0, m=a.m, n=a.n, exact=True, log2=math.log2(c) if c else None)


def cmd_transfer_h0_lower(a):
    c = transfer.count_mis(a.m, a.n)
    v = transfer.h0_lower(a.m, a.n, c)
    return _result(v, "exact", 0, m=a.m, n=a.n, exact=True, rounded=round(v, 4),
                   count_digits=len(str(c)))


def cmd_transfer_h0_upper(a):
    r = transfer.h0_upper(a.p, a.tol)
    return _result(r["value"], "iterative", a.tol, exact=False,
                   **{k: v for k, v in r.items() if k != "value"})


def cmd_transfer_density(a):
    v = transfer.cylinder_density(a.m, a.lam, a.h)
    return _result(v, "iterative", a.h ** 2, m=a.m, lam=a.lam, exact=False)


# dobrushin

def cmd_dobrushin_alpha(a):
    t = dobrushin.influence_table(a.beta)
    infl = [{"offset": list(o), "influence": v} for o, v in sorted(t.entries.items())]
    return _result(t.alpha, "exact", 1e-12, beta=a.beta, influences=infl)


def cmd_dobrushin_beta0(a):
    b = dobrushin.find_beta0(a.lo, a.hi, a.tol)
    return _result(b, "iterative", a.tol, lo=a.lo, hi=a.hi, alpha=dobrushin.alpha(b))


# dynamics

def _coalesce_one(args):
    w, h, beta, seed, t_max = args
    return dynamics.coalescence_experiment(w, h, beta, [seed], t_max)["times"][0]


def cmd_dynamics_mix(a):
    bound = dynamics.mixing_bound(a.width * a.height, a.beta, a.eps)
    seeds = [a.seed + k for k in range(a.seeds)]
    jobs = [(a.width, a.height, a.beta, s, a.t_max) for s in seeds]
    if a.threads > 1:
        with ProcessPoolExecutor(a.threads) as ex:
            times = list(ex.map(_coalesce_one, jobs))
    else:
        times = [_coalesce_one(j) for j in jobs]
    med = float(np.median([t if t is not None else math.inf for t in times]))
    return _result(med, "empirical", None, bound=bound, times=times, seeds=seeds,
                   timeouts=sum(t is None for t in times), within_bound=med <= bound)


def cmd_dynamics_contraction(a):
    region = Region.window(0, 0, a.width - 1, a.height - 1)
    r = dynamics.one_step_contraction(region, a.beta, a.samples, a.seed)
    return _result(r["mean"], "empirical", 3 * r["sigma"], **r,
                   within_bound=r["mean"] <= r["bound"] + 3 * r["sigma"])


def cmd_dynamics_error_prob(a):
    region = Region.window(0, 0, a.size - 1, a.size - 1)
    site = (a.size // 2 - 1, a.size // 2 - 1) if a.site is None else tuple(a.site)
    exact, upper, lower = dynamics.error_prob_bounds(region, a.beta, site, BoundaryRule(a.boundary))
    return _result(exact, "exact", 0, beta=a.beta, site=list(site), lower=lower, upper=upper)


def cmd_dynamics_entropy_bound(a):
    rows = []
    for b in parse_grid_spec(a.beta_grid):
        v, branch = dynamics.entropy_lower_bound(float(b), a.h0)
        rows.append({"beta": float(b), "bound": v, "branch": branch})
    root, closed = dynamics.entropy_crossover(a.h0)
    return _result(rows, "exact", 1e-12, h0=a.h0, crossover=root, crossover_closed_form=closed)


# hardcore

def cmd_hardcore_parity(a):
    if a.method == "exact":
        lam = Fraction(a.lam).limit_denominator(10 ** 6)
        r = hardcore.parity_probability(a.n, a.m, lam, a.boundary, "exact")
        return _result(r["value"], "exact", 0, exact_fraction=str(r["exact"]),
                       n=a.n, m=a.m, lam=a.lam, boundary=a.boundary)
    r = hardcore.parity_probability(a.n, a.m, a.lam, a.boundary, "mcmc", sweeps=a.sweeps,
                                    burn=a.sweeps // 10, seed=a.seed)
    return _result(r["value"], "empirical", None, n=a.n, m=a.m, lam=a.lam, boundary=a.boundary,
                   samples=r["samples"], homogeneous=r["homogeneous"])


def cmd_hardcore_conditional(a):
    x0, y0, x1, y1 = a.window
    region = Region.window(x0, y0, x1, y1)
    if a.grid:
        outside = read_grid(a.grid)
    else:
        outside = Configuration.from_rule(region, BoundaryRule(a.boundary))
    cond = hardcore.mhc_conditional(region, outside, Fraction(a.lam).limit_denominator(10 ** 6))
    pats = [{"bits": p.astype(int).tolist(), "probability": float(q)}
            for p, q in zip(cond.patterns, cond.probabilities)]
    return _result(pats, "exact", 0, window=list(a.window), patterns=len(pats))


# contours

def cmd_contours_verify(a):
    rng = np.random.default_rng(a.seed)
    out, ok = [], True
    for _ in range(a.samples):
        m = a.m if a.m else int(rng.integers(2, 4))
        n = a.n if a.n else m + int(rng.integers(2, 5))
        eta = contours.random_odd_instance(n, m, rng)
        r = contours.verify_instance(eta, m, n)
        good = (r["length_mod4"] and r["length_lower"] and r["all_shifts_valid"]
                and r["all_increase_quarter"] and r["chosen_even"])
        ok &= bool(good)
        out.append({"m": m, "n": n, "length": r["length"], "increase": r["increase"],
                    "all_shifts_valid": r["all_shifts_valid"], "chosen_shift": r["chosen_shift"],
                    "pass": bool(good)})
    res = _result(out, "exact", 0, samples=a.samples, passed=sum(o["pass"] for o in out))
    if not ok:
        raise PropertyFailure(res)
    return res


def cmd_contours_show(a):
    eta = read_grid(a.grid)
    c = contours.extract_contour(eta, a.m)
    return _result(contours.render(eta, a.m), "exact", 0, length=c.length,
                   legend="# occupied in R, * occupied elsewhere, o empty in R, h hole, . exterior")


def cmd_contours_multiplicity(a):
    r = contours.preimage_multiplicity(a.n, a.m)
    res = _result(r["max_per_contour"], "exact", 0, **r)
    if r["max_per_contour"] > 4:
        raise PropertyFailure(res)
    return res


# geometry

def cmd_geometry_ground_states(a):
    g = geometry.enumerate_ground_states()
    states = [{"name": s.name, "kind": kind, "generators": s.generators, "period": s.period,
               "pattern": s.pattern, "density": str(s.density)}
              for kind in ("dense", "sparse") for s in g[kind]]
    return _result(states, "exact", 0, dense=len(g["dense"]), sparse=len(g["sparse"]))


def cmd_geometry_triangle_table(a):
    rows = geometry.feasible_triangle_table()
    if a.pair:
        rows = [r for r in rows if r.pair == tuple(a.pair)]
    data = [{"x": r.pair[0], "y": r.pair[1], "u": r.third[0], "v": r.third[1], "area": str(r.area),
             "ratio_sq": str(r.ratio_sq), "ratio": r.ratio, "regular": r.regular,
             "feasible": r.feasible, "realizable": r.realizable} for r in rows]
    return _result(data, "exact", 0, max_defective_area=str(geometry.max_defective_area()))


def cmd_geometry_delaunay(a):
    cfg = read_grid(a.grid)
    tri = geometry.delaunay(cfg, cfg.region)
    data = [{"vertices": t.vertices, "area": str(t.area), "sides_sq": t.sides_sq,
             "regular": t.regular} for t in tri.triangles]
    return _result(data, "exact", 0, triangles=len(data), occupied=len(tri.occupied),
                   total_area=str(tri.total_area()), covering_radius_sq=str(tri.covering_radius_sq()),
                   empty_circumcircle=geometry.empty_circumcircle(tri))


def cmd_geometry_peierls(a):
    r = geometry.peierls_campaign(a.samples, a.seed, *a.torus)
    res = _result(r["pass_rate"], "exact", 0, **r)
    if r["passed"] != r["samples"]:
        raise PropertyFailure(res)
    return res


# reports

def cmd_report_fig3(a):
    return cmd_dynamics_entropy_bound(a)


def cmd_report_h0(a):
    lo = transfer.h0_lower(a.m, a.n)
    up = transfer.h0_upper(a.p, a.tol)
    return _result({"lower": round(lo, 4), "upper": up["value"]}, "exact+iterative", a.tol,
                   lower_unrounded=lo, upper_eigenvalue=up["eigenvalue"], m=a.m, n=a.n, p=a.p)


def cmd_report_density_curve(a):
    rows = [{"lambda": float(lam), "density": transfer.cylinder_density(a.m, float(lam))}
            for lam in parse_grid_spec(a.lambda_grid)]
    d = [r["density"] for r in rows]
    return _result(rows, "iterative", 1e-8, m=a.m,
                   monotone=all(x <= y + 1e-9 for x, y in zip(d, d[1:])))


def cmd_report_peierls_summary(a):
    r = geometry.peierls_campaign(a.samples, a.seed, *a.torus)
    return _result(r["pass_rate"], "exact", 0, samples=r["samples"], passed=r["passed"],
                   with_contour=r["with_contour"])


class PropertyFailure(Exception):
    def __init__(self, result):
        super().__init__("property check failed")
        self.result = result


# parser

def _global_options(p, default) -> None:
    p.add_argument("--seed", type=int, default=default)
    p.add_argument("--threads", type=int, default=default)
    p.add_argument("--out", default=default, help="write output here instead of stdout")
    p.add_argument("--csv", action="store_true", default=default, help="CSV output for tabular values")
    p.add_argument("--manifest", default=default, help="write the run manifest here instead of stderr")
    p.add_argument("--config", default=default, help="key = value file of option defaults")


def build_parser() -> _Parser:
    p = _Parser(prog="recoverable", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    _global_options(p, argparse.SUPPRESS)
    p.set_defaults(seed=0, threads=1, out=None, csv=False, manifest=None, config=None)
    # the same options are accepted after the subcommand
    common = _Parser(add_help=False)
    _global_options(common, argparse.SUPPRESS)
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)
    leaves = []

    def leaf(group, name, func, help_=None):
        sp = group.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=func, command=name)
        leaves.append(sp)
        return sp

    def sub(name):
        g = groups.add_parser(name).add_subparsers(dest="cmd", required=True, parser_class=_Parser)
        return g

    g = sub("transfer")
    s = leaf(g, "matrix", cmd_transfer_matrix, "column-pair transfer matrix")
    s.add_argument("--m", type=int, default=2)
    s = leaf(g, "count", cmd_transfer_count, "exact MIS count on an m x n grid")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s = leaf(g, "h0-lower", cmd_transfer_h0_lower)
    s.add_argument("--m", type=int, default=12)
    s.add_argument("--n", type=int, default=130)
    s = leaf(g, "h0-upper", cmd_transfer_h0_upper)
    s.add_argument("--p", type=int, default=7)
    s.add_argument("--tol", type=float, default=1e-10)
    s = leaf(g, "density", cmd_transfer_density)
    s.add_argument("--m", type=int, default=12)
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--h", type=float, default=1e-4)

    g = sub("dobrushin")
    s = leaf(g, "alpha", cmd_dobrushin_alpha)
    s.add_argument("--beta", type=float, required=True)
    s = leaf(g, "beta0", cmd_dobrushin_beta0)
    s.add_argument("--lo", type=float, default=0.04)
    s.add_argument("--hi", type=float, default=0.06)
    s.add_argument("--tol", type=float, default=1e-6)

    g = sub("dynamics")
    s = leaf(g, "mix", cmd_dynamics_mix, "median coalescence time of the grand coupling")
    s.add_argument("--width", type=int, default=8)
    s.add_argument("--height", type=int, default=8)
    s.add_argument("--beta", type=float, default=0.01)
    s.add_argument("--eps", type=float, default=0.05)
    s.add_argument("--seeds", type=int, default=100)
    s.add_argument("--t-max", type=int, default=1_000_000)
    s = leaf(g, "contraction", cmd_dynamics_contraction)
    s.add_argument("--width", type=int, default=8)
    s.add_argument("--height", type=int, default=8)
    s.add_argument("--beta", type=float, default=0.01)
    s.add_argument("--samples", type=int, default=100_000)
    s = leaf(g, "error-prob", cmd_dynamics_error_prob)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--size", type=int, default=4)
    s.add_argument("--site", type=int, nargs=2)
    s.add_argument("--boundary", default="even", choices=["even", "odd", "zero"])
    s = leaf(g, "entropy-bound", cmd_dynamics_entropy_bound)
    s.add_argument("--beta-grid", default="0:0.5:0.005")
    s.add_argument("--h0", type=float, default=H0_LOWER)

    g = sub("hardcore")
    s = leaf(g, "parity", cmd_hardcore_parity)
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--lambda", dest="lam", type=float, default=8.0)
    s.add_argument("--boundary", default="even", choices=["even", "odd", "zero"])
    s.add_argument("--method", default="exact", choices=["exact", "mcmc"])
    s.add_argument("--sweeps", type=int, default=2000)
    s = leaf(g, "conditional", cmd_hardcore_conditional)
    s.add_argument("--window", type=int, nargs=4, required=True, metavar=("X0", "Y0", "X1", "Y1"))
    s.add_argument("--lambda", dest="lam", type=float, default=1.0)
    s.add_argument("--boundary", default="even", choices=["even", "odd", "zero"])
    s.add_argument("--grid", help="grid file giving the outside configuration")

    g = sub("contours")
    s = leaf(g, "verify", cmd_contours_verify)
    s.add_argument("--n", type=int, default=0, help="box size (0: random in m+2..m+4)")
    s.add_argument("--m", type=int, default=0, help="rectangle size (0: random in {2, 3})")
    s.add_argument("--samples", type=int, default=100)
    s = leaf(g, "show", cmd_contours_show)
    s.add_argument("--grid", required=True)
    s.add_argument("--m", type=int, required=True)
    s = leaf(g, "multiplicity", cmd_contours_multiplicity)
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--m", type=int, default=1)

    g = sub("geometry")
    leaf(g, "ground-states", cmd_geometry_ground_states)
    s = leaf(g, "triangle-table", cmd_geometry_triangle_table)
    s.add_argument("--pair", type=int, nargs=2, help="restrict to one vertex pair class")
    s = leaf(g, "delaunay", cmd_geometry_delaunay)
    s.add_argument("--grid", required=True)
    s = leaf(g, "peierls", cmd_geometry_peierls)
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--torus", type=int, nargs=2, default=[30, 30])

    g = sub("report")
    s = leaf(g, "fig3", cmd_report_fig3, "entropy lower bound curve with its branch switch")
    s.add_argument("--beta-grid", default="0:0.5:0.005")
    s.add_argument("--h0", type=float, default=H0_LOWER)
    s = leaf(g, "h0", cmd_report_h0)
    s.add_argument("--m", type=int, default=12)
    s.add_argument("--n", type=int, default=130)
    s.add_argument("--p", type=int, default=7)
    s.add_argument("--tol", type=float, default=1e-10)
    s = leaf(g, "density-curve", cmd_report_density_curve)
    s.add_argument("--lambda-grid", default="0.05:8:log")
    s.add_argument("--m", type=int, default=12)
    s = leaf(g, "peierls-summary", cmd_report_peierls_summary)
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--torus", type=int, nargs=2, default=[30, 30])

    p._leaves = leaves
    return p


def _read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for ln in fh:
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            key, sep, val = ln.partition("=")
            if not sep:
                raise UsageError(f"config line without '=': {ln!r}")
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _apply_defaults(parser: _Parser, overrides: dict) -> None:
    """Push config/environment values into every parser that knows the option."""
    for sp in [parser] + parser._leaves:
        for act in sp._actions:
            if act.dest in overrides and act.dest not in ("help", "config", "func", "command"):
                raw = overrides[act.dest]
                if act.nargs is not None and act.nargs not in ("?",) and isinstance(raw, str):
                    val = [act.type(v) if act.type else v for v in raw.split()]
                elif act.type is not None:
                    val = act.type(raw)
                elif isinstance(act, argparse._StoreTrueAction):
                    val = raw.lower() in ("1", "true", "yes")
                else:
                    val = raw
                sp.set_defaults(**{act.dest: val})
                act.required = False


def _to_csv(value) -> str:
    buf = io.StringIO()
    if isinstance(value, list) and value and isinstance(value[0], dict):
        w = csv.DictWriter(buf, fieldnames=list(value[0]))
        w.writeheader()
        w.writerows(value)
    elif isinstance(value, list) and value and isinstance(value[0], list):
        csv.writer(buf).writerows(value)
    else:
        csv.writer(buf).writerow([value])
    return buf.getvalue()


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        overrides = _read_config(known.config) if known.config else {}
        overrides.update({k[len(ENV_PREFIX):].lower(): v for k, v in os.environ.items()
                          if k.startswith(ENV_PREFIX)})
        _apply_defaults(parser, overrides)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    t0 = time.perf_counter()
    code = 0
    try:
        result = args.func(args)
    except PropertyFailure as exc:
        result, code = exc.result, 3
    except AssertionError as exc:
        result, code = {"error": str(exc), "kind": "assertion"}, 3
    except (ValueError, transfer.IterationLimit) as exc:
        result, code = {"error": str(exc), "kind": "precondition"}, 2
        if isinstance(exc, transfer.IterationLimit):
            result["estimate"] = exc.estimate

    if args.csv and code == 0:
        text = _to_csv(result["value"])
    else:
        pretty = sys.stdout.isatty() and not args.out
        text = json.dumps(result, default=_jsonable, indent=2 if pretty else None,
                          separators=None if pretty else (",", ":")) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    params = {k: v for k, v in vars(args).items() if k not in ("func",)}
    manifest = {"subcommand": f"{args.group} {args.command}", "parameters": params,
                "seed": args.seed, "version": __version__,
                "wall_clock": round(time.perf_counter() - t0, 6),
                "output_sha256": hashlib.sha256(text.encode()).hexdigest(), "exit_code": code}
    mtext = json.dumps(manifest, default=_jsonable, sort_keys=True) + "\n"
    if args.manifest:
        with open(args.manifest, "w") as fh:
            fh.write(mtext)
    else:
        sys.stderr.write(mtext)
    return code


if __name__ == "__main__":
    sys.exit(main())
