"""Command-line interface.

Exit status: 0 when the command's property check passes, 2 when it fails,
1 on errors (bad input, unsupported parameters, ...).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import experiments as ex
from .errors import ErgoptError
from .markov import admissible_cover, invariant_set_depth
from .observables import observable_for
from .optimize import beta_periodic, beta_report, gamma_estimate, subordination_check, support_candidate
from .orbits import enumerate_periodic_orbits
from .subaction import lipschitz_profile, subaction_candidate, verify_subaction

PASS, FAIL, ERROR = 0, 2, 1
GAP_TOL = 0.02


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--map")
    p.add_argument("--phi", action="append", help="observable source (repeatable)")
    p.add_argument("--max-period", type=int, dest="max_period")
    p.add_argument("--cells", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--grid", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergopt", description="Numerical ergodic optimization on 1-D maps.")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "beta": "beta by periodic orbits and by the Ulam max mean cycle",
        "subaction": "build and verify a sub-action table",
        "gamma": "gamma estimates and their scaling with t",
        "support": "approximate the maximizing support and check subordination",
        "markov": "build and verify a Markov cover (unimodal maps)",
        "lock": "locking experiment with random Lipschitz perturbations",
        "sweep": "parameter sweep over the tent or quadratic family",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "gamma":
            p.add_argument("--t-values", dest="t_values", type=lambda s: [float(v) for v in s.split(",")])
        if name == "support":
            p.add_argument("--c-star", dest="c_star", type=float)
        if name == "markov":
            p.add_argument("--m", type=int)
            p.add_argument("--K", dest="k_points", type=lambda s: s.split(","))
            p.add_argument("--z", type=lambda s: s.split(","))
        if name == "lock":
            p.add_argument("--orbit", type=lambda s: s.split(","), help="points of the locked orbit, e.g. 1/3,2/3")
        if name == "sweep":
            p.add_argument("--family", choices=("tent", "quad"))
            p.add_argument("--a-values", dest="a_values", type=lambda s: s.split(","))
    return parser


def _config(args) -> ex.ExperimentConfig:
    keys = [f for f in vars(args) if f not in ("command", "config")]
    return ex.load_config(args.config, **{k: getattr(args, k) for k in keys})


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _emit(cfg, payload: dict, rows=None):
    if cfg.format == "csv" and rows is not None:
        text = _csv_text(rows)
    else:
        text = json.dumps(payload, indent=2, sort_keys=True, default=ex.fmt) + "\n"
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _phi(cfg, m, i=0):
    if not cfg.phi:
        raise ValueError("an observable is required (--phi)")
    return observable_for(m, cfg.phi[i])


def cmd_beta(cfg) -> int:
    m = cfg.map_spec
    reports = [beta_report(m, observable_for(m, src), cfg.max_period, cfg.cells) for src in cfg.phi or []]
    if not reports:
        raise ValueError("an observable is required (--phi)")
    ok = all(r.gap <= GAP_TOL for r in reports)
    rows = [("phi", "beta_orbit", "argmax", "beta_cycle", "gap")]
    rows += [(s, ex.fmt(r.beta_orbit), r.argmax_orbit.itinerary, ex.fmt(r.beta_cycle), ex.fmt(r.gap))
             for s, r in zip(cfg.phi, reports)]
    _emit(cfg, {"reports": [dict(r.to_json(), phi=s) for s, r in zip(cfg.phi, reports)], "pass": ok}, rows)
    return PASS if ok else FAIL


def cmd_subaction(cfg) -> int:
    m = cfg.map_spec
    phi = _phi(cfg, m)
    beta, _ = beta_periodic(m, phi, cfg.max_period)
    table = subaction_candidate(m, phi, beta, cfg.depth, cfg.grid)
    report = verify_subaction(m, phi, beta, table, cfg.tol)
    prof = lipschitz_profile(table)
    ok = report.passed and prof.passed is not False
    payload = {"beta": beta, "table": table.to_json(), "verify": report.to_json(), "lipschitz": prof.to_json(),
               "pass": ok}
    _emit(cfg, payload, table.to_csv_rows())
    return PASS if ok else FAIL


def cmd_gamma(cfg) -> int:
    m = cfg.map_spec
    if not cfg.phi:
        raise ValueError("an observable is required (--phi)")
    res = ex.gamma_bank(m, cfg.phi, cfg.t_values, cfg.depth, cfg.grid, cfg.max_period, cfg.threads)
    rows = [("phi", "t", "gamma", "lip", "gamma_over_t")]
    for r in res["results"]:
        rows += [(r["phi"], ex.fmt(x["t"]), ex.fmt(x["gamma"]), ex.fmt(x["lip"]), ex.fmt(x["gamma_over_t"]))
                 for x in r["rows"]]
    _emit(cfg, res, rows)
    return PASS if res["pass"] else FAIL


def cmd_support(cfg) -> int:
    m = cfg.map_spec
    phi = _phi(cfg, m)
    beta, orbit = beta_periodic(m, phi, cfg.max_period)
    gamma = gamma_estimate(m, phi, beta, cfg.depth, cfg.grid, extra_points=orbit.points)
    cand = support_candidate(m, phi, beta, cfg.c_star, (cfg.depth, cfg.depth), cfg.grid,
                             extra_points=orbit.points)
    sub = subordination_check(m, phi, beta, gamma, orbit.points, cfg.depth)
    payload = {"beta": beta, "gamma": gamma, "orbit": orbit.to_json(), "support": cand.to_json(),
               "subordination": sub.to_json(), "pass": sub.passed}
    _emit(cfg, payload, cand.to_csv_rows())
    return PASS if sub.passed else FAIL


def cmd_markov(cfg) -> int:
    m = cfg.map_spec
    orbits = enumerate_periodic_orbits(m, 2)
    if cfg.z:
        z = [Fraction(v) for v in cfg.z]
    else:
        z = [o for o in orbits if o.period == 2][0].points
    if cfg.k_points:
        K = [Fraction(v) for v in cfg.k_points]
    else:
        K = [o for o in orbits if o.itinerary == "R"][0].points
    cover = admissible_cover(m, K, z, cfg.m)
    inv = invariant_set_depth(m, cover, cfg.depth)
    payload = {"cover": cover.to_json(), "surjective": inv.surjective, "component_counts": inv.counts,
               "max_lengths": [ex.fmt(v) for v in inv.max_lengths], "pass": cover.verified}
    rows = [("a", "b")] + [(ex.fmt(a), ex.fmt(b)) for a, b in cover.intervals]
    _emit(cfg, payload, rows)
    return PASS if cover.verified else FAIL


def cmd_lock(cfg) -> int:
    rep = ex.locking_experiment(cfg)
    m = cfg.map_spec
    spot = ex.domination_spot_check(m, rep.orbit, rep.C, seed=cfg.seed)
    payload = dict(rep.to_json(), domination_check=spot)
    payload["pass"] = rep.passed and spot["pass"]
    _emit(cfg, payload, rep.csv_rows())
    return PASS if payload["pass"] else FAIL


def cmd_sweep(cfg) -> int:
    a_values = cfg.a_values or ["1.6", "1.7", "1.8", "1.9", "2"]
    bank = cfg.phi or (["cos(pi*x)"] if cfg.family == "tent" else ["x"])
    rows = ex.tpo_sweep(cfg.family, a_values, bank, cfg.eps, cfg.max_period, cfg.threads)
    summary = ex.sweep_summary(rows)
    table = [ex.SWEEP_COLUMNS] + [tuple(ex.fmt(r[c]) for c in ex.SWEEP_COLUMNS) for r in rows]
    _emit(cfg, {"rows": rows, "summary": summary}, table)
    return PASS if summary["errors"] == 0 else FAIL


COMMANDS = {
    "beta": cmd_beta,
    "subaction": cmd_subaction,
    "gamma": cmd_gamma,
    "support": cmd_support,
    "markov": cmd_markov,
    "lock": cmd_lock,
    "sweep": cmd_sweep,
}


def _glue_values(argv):
    """Let observable sources start with '-' (``--phi -cos(x)``)."""
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--phi", "--K", "--z", "--a-values", "--t-values", "--orbit"):
            val = next(it, None)
            out.append(tok if val is None else f"{tok}={val}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_glue_values(sys.argv[1:] if argv is None else list(argv)))
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg)
    except (ErgoptError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
