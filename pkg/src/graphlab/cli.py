"""``graphlab`` command line entry point.

Exit codes: 0 ok, 2 configuration error, 3 precondition failure,
4 acceptance failure (only with ``--assert``).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cm import CMExplorer, l1_statistics, sample_cm, simple_probability
from .degseq import (
    DegreeSequence,
    check_assumptions,
    eta_distribution,
    lattice_step,
    minimal_m0,
    nu_value,
    q_value,
    r_value,
    subcritical_certificate,
)
from .errors import AttemptsExhausted, ConfigError, GraphlabError, InvalidMass, NoRoot, NotGraphical, PreconditionError
from .experiments import ExperimentConfig, build_sequence, closed_form_threshold, run_experiment
from .graph import components, write_edge_list
from .latdist import LatticeDistribution, llt_bound_check, theta_with_threshold
from .um import explore_um, increment_moment_check, sample_um
from .walks import WalkSpec, simulate_stops, stop_distribution, ub_up_bound

OK, CONFIG_ERROR, PRECONDITION, ACCEPTANCE = 0, 2, 3, 4


class AcceptanceFailure(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="YAML experiment config (also supplies a degree sequence block)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--out", help="output path; stdout when omitted")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--assert", dest="check", action="store_true", help="exit 4 if the acceptance event fails")
    return p


def _seq_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--degrees", help="degree file: one degree per line or 'count degree' pairs")
    g.add_argument("--sequence", help="comma-separated degree list")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="graphlab", description="Random graphs with a given degree sequence.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("experiment", parents=[common], help="run a configured experiment (E1-E6)")

    cm = sub.add_parser("cm", help="configuration model").add_subparsers(dest="action", required=True)
    for name in ("sample", "explore", "l1", "simple"):
        sp = cm.add_parser(name, parents=[common])
        _seq_args(sp)
        if name == "explore":
            sp.add_argument("--start", type=int, default=0)

    um = sub.add_parser("um", help="uniform model").add_subparsers(dest="action", required=True)
    for name in ("sample", "explore", "moments"):
        sp = um.add_parser(name, parents=[common])
        _seq_args(sp)
        sp.add_argument("--method", choices=("auto", "rejection", "switching"), default="auto")
        sp.add_argument("--burn-in", type=int, default=None)
        if name != "sample":
            sp.add_argument("--Q0", type=float, required=True)
            sp.add_argument("--m0", type=float, default=None, help="defaults to the smallest admissible value")
        if name == "explore":
            sp.add_argument("--start", type=int, default=0)

    walk = sub.add_parser("walk", parents=[common], help="hitting time of a skip-free walk")
    walk.add_argument("--step", required=True, help="step law 'v:p,...' with smallest atom -1")
    walk.add_argument("--start", type=int, required=True)
    walk.add_argument("--tmax", type=int, default=200)

    llt = sub.add_parser("llt", parents=[common], help="local limit bound for a mean-zero lattice law")
    llt.add_argument("--dist", required=True, help="law 'v:p,...'")
    llt.add_argument("--n", type=int, nargs="+", required=True)

    th = sub.add_parser("theory", parents=[common], help="print derived quantities of a degree sequence as JSON")
    _seq_args(th)
    th.add_argument("--Q0", type=float, default=None)
    th.add_argument("--m0", type=float, default=None)
    return parser


# ---------------------------------------------------------------------------
def _sequence(args) -> DegreeSequence:
    try:
        if getattr(args, "degrees", None):
            from .degseq import read_degree_file

            return read_degree_file(args.degrees)
        if getattr(args, "sequence", None):
            return DegreeSequence([int(x) for x in args.sequence.replace(",", " ").split()])
    except (OSError, ValueError) as exc:
        raise ConfigError("degrees", str(exc)) from None
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        return build_sequence(cfg.sequence)
    raise ConfigError("degrees", "give --degrees, --sequence or --config")


def _open_out(args):
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        return open(args.out, "w", newline="")
    return sys.stdout


def _emit_json(args, obj) -> None:
    fh = _open_out(args)
    fh.write(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    if fh is not sys.stdout:
        fh.close()


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and math.isinf(o):
        return str(o)
    return str(o)


def _emit_csv(args, header, rows) -> None:
    fh = _open_out(args)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if fh is not sys.stdout:
        fh.close()


def _seed(args, default=0):
    return default if args.seed is None else args.seed


def _trials(args, default):
    t = default if args.trials is None else args.trials
    if t < 1:
        raise ConfigError("trials", "must be >= 1")
    return t


def _m0(d, args):
    if args.Q0 >= 0:
        raise PreconditionError("Q0 must be negative")
    return args.m0 if args.m0 is not None else minimal_m0(d, args.Q0)


# ---------------------------------------------------------------------------
def cmd_experiment(args) -> int:
    if not args.config:
        raise ConfigError("config", "--config is required")
    cfg = ExperimentConfig.load(args.config)
    cfg = cfg.replace(seed=args.seed, trials=args.trials, out=args.out, workers=args.workers)
    cfg.validate()
    result = run_experiment(cfg)
    print(json.dumps({k: v for k, v in result.summary.items() if k != "ratio_to_bound"}, indent=2, sort_keys=True, default=_jsonable))
    if args.check and not result.passed:
        raise AcceptanceFailure(f"{cfg.experiment} acceptance event failed")
    return OK


def cmd_cm(args) -> int:
    d = _sequence(args)
    seed = _seed(args)
    if args.action == "sample":
        g = sample_cm(d, seed)
        if args.out:
            write_edge_list(g, args.out)
        else:
            for u, v in g.edges.tolist():
                print(u, v)
    elif args.action == "explore":
        ex = CMExplorer(d, args.start, seed)
        tr = ex.run()
        _emit_csv(args, ["t", "X_t", "M_t", "Q_t", "R_t", "event"], tr.rows())
    elif args.action == "l1":
        res = l1_statistics(d, _trials(args, 100), seed)
        _emit_csv(args, ["trial", "l1", "simple"], ((i, int(a), int(b)) for i, (a, b) in enumerate(zip(res.l1, res.simple))))
    else:
        res = simple_probability(d, _trials(args, 1000), seed)
        _emit_json(args, res._asdict() | {"stderr": res.stderr})
    return OK


def cmd_um(args) -> int:
    d = _sequence(args)
    seed = _seed(args)
    if args.action == "sample":
        g = sample_um(d, seed=seed, method=args.method, burn_in=args.burn_in)
        if args.out:
            write_edge_list(g, args.out)
        else:
            for u, v in g.edges.tolist():
                print(u, v)
        return OK
    m0 = _m0(d, args)
    if args.action == "explore":
        rng = np.random.default_rng(seed)
        g = sample_um(d, seed=rng, method=args.method, burn_in=args.burn_in)
        tr = explore_um(g, d, m0, args.Q0, args.start, seed=rng)
        _emit_csv(args, ["t", "V_t", "X_t", "M_t", "L_t", "eta_t", "Z_t", "event"], tr.rows())
        print(
            json.dumps({"tau_x": tr.tau_x, "tau_z": tr.tau_z, "cap": tr.cap, "T": tr.T,
                        "domination_violations": tr.domination_violations(), **tr.lemma_items()}),
            file=sys.stderr,
        )
        if args.check and (tr.domination_violations() or not all(tr.lemma_items().values())):
            raise AcceptanceFailure("exploration invariant violated")
    else:
        rep = increment_moment_check(d, m0, args.Q0, _trials(args, 50), seed, method=args.method)
        out = {
            "times": rep.times, "mean": rep.mean, "mean_se": rep.mean_se, "second": rep.second,
            "second_se": rep.second_se, "mean_bound": rep.mean_bound, "second_bound": rep.second_bound,
            "mean_violations": rep.mean_violations, "second_violations": rep.second_violations,
            "degree1_ratio": rep.degree1_ratio, "degree1_steps": rep.degree1_steps,
        }
        _emit_json(args, out)
        if args.check and (rep.mean_violations or rep.second_violations or not rep.degree1_ok):
            raise AcceptanceFailure("increment moment check failed")
    return OK


def cmd_walk(args) -> int:
    try:
        step = LatticeDistribution.parse(args.step)
        spec = WalkSpec(step, args.start)
    except ValueError as exc:
        raise ConfigError("step", str(exc)) from None
    if args.tmax < 1:
        raise ConfigError("tmax", "must be >= 1")
    exact = stop_distribution(spec, args.tmax)
    trials = _trials(args, 10_000)
    sims = simulate_stops(spec, args.tmax, trials, _seed(args))
    emp = np.bincount(sims[sims >= 0], minlength=args.tmax + 1) / trials
    try:
        bounds = [ub_up_bound(spec, t) if t > 0 else math.nan for t in range(args.tmax + 1)]
    except NoRoot:
        bounds = [math.nan] * (args.tmax + 1)
    _emit_csv(args, ["t", "exact", "bound", "empirical"],
              ((t, repr(float(exact[t])), repr(float(bounds[t])), repr(float(emp[t]))) for t in range(args.tmax + 1)))
    if args.check:
        bad = [t for t in range(1, args.tmax + 1) if not math.isnan(bounds[t]) and exact[t] > bounds[t] * (1 + 1e-12)]
        if bad:
            raise AcceptanceFailure(f"exact stop probability exceeds the bound at t={bad[:5]}")
    return OK


def cmd_llt(args) -> int:
    try:
        x = LatticeDistribution.parse(args.dist)
    except ValueError as exc:
        raise ConfigError("dist", str(exc)) from None
    if abs(x.mean()) > 1e-10:
        raise PreconditionError(f"law has mean {x.mean():.6g}; a mean-zero law is required")
    rows = [llt_bound_check(x, n)._asdict() | {"n": n} for n in args.n]
    _emit_json(args, rows)
    if args.check and not all(r["holds"] for r in rows):
        raise AcceptanceFailure("local limit bound violated")
    return OK


def cmd_theory(args) -> int:
    d = _sequence(args)
    eta = eta_distribution(d)
    out = {
        "n": d.n, "m": d.m, "delta": d.delta, "Q": q_value(d), "R": r_value(d), "nu": nu_value(d),
        "lattice": lattice_step(d)._asdict(),
        "assumptions": {k: v for k, v in vars(check_assumptions(d)).items() if k != "lattice"},
        "largest_component_bound_closed_form": None,
    }
    if out["Q"] < 0:
        out["largest_component_bound_closed_form"] = closed_form_threshold(d)
        try:
            sol = theta_with_threshold(eta, d)
            out.update(theta0=sol.theta0, phi_theta0=sol.phi_at, phi2_theta0=sol.phi2_at, T_n=sol.t_value)
        except NoRoot as exc:
            out["theta0_error"] = str(exc)
    if args.Q0 is not None:
        m0 = _m0(d, args)
        out["certificate"] = vars(subcritical_certificate(d, m0, args.Q0))
    _emit_json(args, out)
    return OK


HANDLERS = {"experiment": cmd_experiment, "cm": cmd_cm, "um": cmd_um, "walk": cmd_walk, "llt": cmd_llt, "theory": cmd_theory}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (PreconditionError, NoRoot, NotGraphical, InvalidMass, AttemptsExhausted) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return PRECONDITION
    except AcceptanceFailure as exc:
        print(f"acceptance failed: {exc}", file=sys.stderr)
        return ACCEPTANCE
    except GraphlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
