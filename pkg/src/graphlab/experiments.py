"""Config-driven Monte Carlo experiments with reproducible CSV/JSON output.

Experiment ids:

* ``E1``  CM, event ``L1 <= (1+eps) (2R/Q^2) log(|Q|^3 n / R^2)``
* ``E2``  CM, event ``L1 <= (1+eps) T_n``
* ``E3``  UM, event ``L1 <= constant * m0/|Q0|``
* ``E4``  UM, event ``L1 >= factor * (2R/Q^2) log(n/R^2)``
* ``E5``  UM, isolated tree counts among the maximum-degree vertices
* ``E6``  local limit bound for lattice laws (no graphs)

Each trial draws from its own generator spawned from ``seed``, so results do
not depend on the worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import multiprocessing as mp
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from .cm import _pair_stubs
from .degseq import (
    DegreeSequence,
    eta_distribution,
    heavy_tail_sequence,
    lower_bound_sequence,
    minimal_m0,
    mix13_sequence,
    q_value,
    r_value,
    read_degree_file,
    subcritical_certificate,
)
from .errors import ConfigError, NoRoot, PreconditionError
from .graph import MultiGraph, components, induced_subgraph, is_simple, tree_component_sizes
from .latdist import LatticeDistribution, llt_bound_check, t_bound
from .um import sample_um

EXPERIMENTS = ("E1", "E2", "E3", "E4", "E5", "E6")
GENERATORS = ("mix13", "lower_bound", "heavy_tail", "regular")

_TOP_KEYS = {
    "experiment", "sequence", "trials", "seed", "epsilon", "out", "method", "burn_in",
    "m0", "Q0", "constant", "factor", "s_values", "distributions", "n_values",
    "required_fraction", "workers",
}
_SEQ_KEYS = {"file", "literal", "counts", "generator", "n", "q", "delta", "eps", "hubs", "exponent", "frac_deg1", "degree"}

_DEFAULT_REQUIRED = {"E1": 0.95, "E2": 0.95, "E3": 0.95, "E4": 0.9}


# ---------------------------------------------------------------------------
# closed forms used as experiment thresholds
# ---------------------------------------------------------------------------
def er_tree_expectation(ell: int, p: float, s: int) -> float:
    """Expected number of isolated trees of order s in G(ell, p)."""
    if not 1 <= s <= ell:
        raise ValueError("need 1 <= s <= ell")
    cayley = float(s) ** (s - 2)
    exponent = s * (ell - s) + math.comb(s, 2) - (s - 1)
    return math.comb(ell, s) * cayley * p ** (s - 1) * (1 - p) ** exponent


def poisson_rate(lam: float) -> float:
    """Large deviation rate lam - 1 - ln(lam) of a Poisson(1) sample mean at lam."""
    return lam - 1 - math.log(lam)


def s0_target(ell: int, eps: float, a_frac: float) -> int:
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 < a_frac < 1:
        raise ValueError("a_frac must lie in (0, 1)")
    if ell < 3:
        raise ValueError("ell must be >= 3")
    a = a_frac / poisson_rate(1 - eps)
    return max(math.floor(a * math.log(ell)), 1)


def closed_form_threshold(d: DegreeSequence) -> float:
    """(2R/Q^2) log(|Q|^3 n / R^2)."""
    q, r = q_value(d), r_value(d)
    return 2 * r / q**2 * math.log(abs(q) ** 3 * d.n / r**2)


def lower_bound_target(d: DegreeSequence) -> float:
    """(2R/Q^2) log(n / R^2), computed from the realized sequence."""
    q, r = q_value(d), r_value(d)
    return 2 * r / q**2 * math.log(d.n / r**2)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    sequence: dict = field(default_factory=dict)
    trials: int = 100
    seed: int = 0
    epsilon: float = 0.3
    out: str | None = None
    method: str = "auto"
    burn_in: int | None = None
    m0: float | None = None
    Q0: float | None = None
    constant: float = 100.0
    factor: float = 0.8
    s_values: tuple = (1, 2, 3)
    distributions: tuple = ()
    n_values: tuple = (50, 200, 1000)
    required_fraction: float | None = None
    workers: int = 1

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a mapping")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown key")
        if "experiment" not in raw:
            raise ConfigError("experiment", "missing")
        exp = str(raw["experiment"]).upper()
        if exp not in EXPERIMENTS:
            raise ConfigError("experiment", f"must be one of {', '.join(EXPERIMENTS)}")
        seq = raw.get("sequence") or {}
        if not isinstance(seq, dict):
            raise ConfigError("sequence", "must be a mapping")
        bad = set(seq) - _SEQ_KEYS
        if bad:
            raise ConfigError(f"sequence.{sorted(bad)[0]}", "unknown key")
        if exp != "E6":
            sources = [k for k in ("file", "literal", "counts", "generator") if k in seq]
            if len(sources) != 1:
                raise ConfigError("sequence", "give exactly one of file, literal, counts, generator")
            if "generator" in seq and seq["generator"] not in GENERATORS:
                raise ConfigError("sequence.generator", f"must be one of {', '.join(GENERATORS)}")
        kwargs: dict[str, Any] = {"experiment": exp, "sequence": dict(seq)}
        casts = {
            "trials": int, "seed": int, "epsilon": float, "out": str, "method": str,
            "burn_in": int, "m0": float, "Q0": float, "constant": float, "factor": float,
            "required_fraction": float, "workers": int,
        }
        for key, cast in casts.items():
            if key in raw and raw[key] is not None:
                try:
                    kwargs[key] = cast(raw[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(key, f"cannot convert {raw[key]!r}: {exc}") from None
        for key in ("s_values", "n_values"):
            if key in raw:
                try:
                    kwargs[key] = tuple(int(v) for v in raw[key])
                except (TypeError, ValueError):
                    raise ConfigError(key, "must be a list of integers") from None
        if "distributions" in raw:
            kwargs["distributions"] = tuple(str(v) for v in raw["distributions"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text())
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
        except yaml.YAMLError as exc:
            raise ConfigError("config", f"YAML parse error: {exc}") from None
        return cls.from_dict(raw)

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed", "must be nonnegative")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        if self.method not in ("auto", "rejection", "switching"):
            raise ConfigError("method", "must be auto, rejection or switching")
        if not self.epsilon > 0:
            raise ConfigError("epsilon", "must be positive")
        if self.experiment == "E3" and self.Q0 is None:
            raise ConfigError("Q0", "required for E3")
        if self.experiment == "E6" and not self.distributions:
            raise ConfigError("distributions", "required for E6")

    def replace(self, **changes) -> "ExperimentConfig":
        data = asdict(self)
        data.update({k: v for k, v in changes.items() if v is not None})
        return ExperimentConfig(**data)

    def canonical(self) -> dict:
        """Fields that determine the results (output path and worker count excluded)."""
        data = asdict(self)
        data.pop("out")
        data.pop("workers")
        return data

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def build_sequence(spec: dict) -> DegreeSequence:
    """Degree sequence from a ``sequence`` config block."""
    try:
        if "file" in spec:
            return read_degree_file(spec["file"])
        if "literal" in spec:
            lit = spec["literal"]
            vals = lit.replace(",", " ").split() if isinstance(lit, str) else lit
            return DegreeSequence([int(v) for v in vals])
        if "counts" in spec:
            return DegreeSequence.from_counts({int(k): int(c) for k, c in spec["counts"].items()})
        gen = spec["generator"]
        n = int(spec["n"])
        if gen == "mix13":
            q = spec.get("q", "auto")
            q = -(n ** -0.25) if q in (None, "auto") else float(q)
            return mix13_sequence(n, q)
        if gen == "lower_bound":
            return lower_bound_sequence(n, int(spec["delta"]), float(spec["eps"])).sequence
        if gen == "heavy_tail":
            return heavy_tail_sequence(
                n,
                hubs=int(spec.get("hubs", 50)),
                exponent=float(spec.get("exponent", 0.45)),
                frac_deg1=float(spec.get("frac_deg1", 0.6)),
            )
        if gen == "regular":
            return DegreeSequence(np.full(n, int(spec["degree"])))
    except KeyError as exc:
        raise ConfigError(f"sequence.{exc.args[0]}", "missing") from None
    except (ValueError, OSError) as exc:
        raise ConfigError("sequence", str(exc)) from None
    raise ConfigError("sequence.generator", f"unknown generator {spec.get('generator')!r}")


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Context:
    """Per-config quantities shared by all trials (pure functions of the sequence)."""

    cfg: ExperimentConfig
    d: DegreeSequence | None
    thresholds: dict


def prepare(cfg: ExperimentConfig) -> Context:
    if cfg.experiment == "E6":
        for i, dist in enumerate(cfg.distributions):
            try:
                x = LatticeDistribution.parse(dist)
            except ValueError as exc:
                raise ConfigError(f"distributions[{i}]", str(exc)) from None
            if abs(x.mean()) > 1e-10:
                raise ConfigError(f"distributions[{i}]", f"mean is {x.mean():.6g}, must be 0")
        return Context(cfg, None, {})
    d = build_sequence(cfg.sequence)
    th: dict[str, float] = {"n": d.n, "m": d.m, "delta": d.delta, "Q": q_value(d), "R": r_value(d)}
    exp = cfg.experiment
    if exp in ("E1", "E2"):
        if th["Q"] >= 0:
            raise PreconditionError(f"{exp} needs Q < 0, got Q = {th['Q']:.6g}")
        th["closed_form"] = closed_form_threshold(d)
        try:
            th["T_n"] = t_bound(eta_distribution(d), d)
        except NoRoot as exc:
            if exp == "E2":
                raise PreconditionError(f"E2 needs theta0: {exc}") from None
            th["T_n"] = math.nan
        base = th["closed_form"] if exp == "E1" else th["T_n"]
        th["bound"] = (1 + cfg.epsilon) * base
    elif exp == "E3":
        Q0 = cfg.Q0
        if Q0 >= 0:
            raise PreconditionError("E3 needs Q0 < 0")
        m0 = cfg.m0 if cfg.m0 is not None else minimal_m0(d, Q0)
        cert = subcritical_certificate(d, m0, Q0)
        if not cert.valid:
            raise PreconditionError(f"no ({m0}, {Q0}) certificate for this sequence")
        th.update(m0=m0, Q0=Q0, T=cert.T, lam=cert.lam, m_star=cert.m_star,
                  side_conditions=float(cert.side_conditions))
        th["bound"] = cfg.constant * m0 / abs(Q0)
    elif exp == "E4":
        if th["Q"] >= 0:
            raise PreconditionError(f"E4 needs Q < 0, got Q = {th['Q']:.6g}")
        th["target"] = lower_bound_target(d)
        th["bound"] = cfg.factor * th["target"]
    elif exp == "E5":
        ell = int(np.sum(d.degrees == d.delta))
        th.update(ell=ell, p_star=d.delta**2 / d.n)
        for s in cfg.s_values:
            th[f"er_{s}"] = er_tree_expectation(ell, th["p_star"], s)
    return Context(cfg, d, th)


def _columns(cfg: ExperimentConfig) -> list[str]:
    if cfg.experiment == "E6":
        return ["trial", "distribution", "n", "lhs_sup", "rhs", "rhs_integral_form", "holds", "lhs_sup_2n", "gap_ratio"]
    if cfg.experiment == "E5":
        return ["trial", "simple"] + [f"z_{s}" for s in cfg.s_values]
    return ["trial", "l1", "simple", "event"]


def _graph_for(ctx: Context, rng: np.random.Generator) -> MultiGraph:
    cfg, d = ctx.cfg, ctx.d
    if cfg.experiment in ("E1", "E2"):
        return MultiGraph(d.n, _pair_stubs(d.degrees, rng))
    return sample_um(d, seed=rng, method=cfg.method, burn_in=cfg.burn_in)


def run_trial(ctx: Context, index: int, seed_seq: np.random.SeedSequence) -> dict:
    cfg = ctx.cfg
    rng = np.random.default_rng(seed_seq)
    if cfg.experiment == "E6":
        return _llt_row(cfg, index)
    g = _graph_for(ctx, rng)
    if cfg.experiment == "E5":
        hubs = np.flatnonzero(ctx.d.degrees == ctx.d.delta)
        trees = tree_component_sizes(induced_subgraph(g, hubs))
        row = {"trial": index, "simple": is_simple(g)}
        row.update({f"z_{s}": trees.get(s, 0) for s in cfg.s_values})
        return row
    l1 = components(g).largest
    bound = ctx.thresholds["bound"]
    event = l1 >= bound if cfg.experiment == "E4" else l1 <= bound
    return {"trial": index, "l1": l1, "simple": is_simple(g), "event": bool(event)}


def _llt_jobs(cfg: ExperimentConfig) -> list[tuple[str, int]]:
    return [(dist, n) for dist in cfg.distributions for n in cfg.n_values]


def _llt_row(cfg: ExperimentConfig, index: int) -> dict:
    dist, n = _llt_jobs(cfg)[index]
    x = LatticeDistribution.parse(dist)
    res = llt_bound_check(x, n)
    res2 = llt_bound_check(x, 2 * n)
    return {
        "trial": index, "distribution": dist, "n": n, "lhs_sup": res.lhs_sup, "rhs": res.rhs,
        "rhs_integral_form": res.rhs_integral_form, "holds": res.holds,
        "lhs_sup_2n": res2.lhs_sup, "gap_ratio": res.lhs_sup / res2.lhs_sup,
    }


def _run_one(args):
    ctx, index, ss = args
    return run_trial(ctx, index, ss)


# ---------------------------------------------------------------------------
# summaries and persistence
# ---------------------------------------------------------------------------
def summarize(ctx: Context, rows: list[dict]) -> dict:
    cfg = ctx.cfg
    out: dict[str, Any] = {"experiment": cfg.experiment, "trials": len(rows), "thresholds": ctx.thresholds}
    if cfg.experiment == "E6":
        out["all_hold"] = all(r["holds"] for r in rows)
        ratios = [r["gap_ratio"] for r in rows]
        out["gap_ratio_min"], out["gap_ratio_max"] = min(ratios), max(ratios)
        out["passed"] = out["all_hold"]
        return out
    if cfg.experiment == "E5":
        stats = {}
        ok = True
        for s in cfg.s_values:
            z = np.array([r[f"z_{s}"] for r in rows], dtype=float)
            mean = float(z.mean())
            se = float(z.std(ddof=1) / math.sqrt(len(z))) if len(z) > 1 else math.nan
            target = ctx.thresholds[f"er_{s}"]
            zscore = (mean - target) / se if se > 0 else math.nan
            stats[str(s)] = {"mean": mean, "stderr": se, "er_expectation": target, "z_score": zscore}
            ok &= bool(abs(zscore) <= 3)
        out["tree_counts"] = stats
        out["passed"] = ok
        return out
    l1 = np.array([r["l1"] for r in rows], dtype=float)
    frac = float(np.mean([r["event"] for r in rows]))
    bound = ctx.thresholds["bound"]
    required = cfg.required_fraction if cfg.required_fraction is not None else _DEFAULT_REQUIRED[cfg.experiment]
    out.update(
        fraction=frac,
        required_fraction=required,
        passed=frac >= required,
        simple_fraction=float(np.mean([r["simple"] for r in rows])),
        l1_mean=float(l1.mean()),
        l1_max=float(l1.max()),
        l1_min=float(l1.min()),
        ratio_to_bound=(l1 / bound).tolist(),
    )
    return out


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(cfg: ExperimentConfig, ctx: Context, rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# experiment={cfg.experiment} config_hash={cfg.config_hash} version={__version__}\n")
    th = " ".join(f"{k}={_fmt(v)}" for k, v in ctx.thresholds.items())
    if th:
        buf.write(f"# thresholds {th}\n")
    w = csv.writer(buf, lineterminator="\n")
    cols = _columns(cfg)
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


@dataclass
class ExperimentResult:
    rows: list[dict]
    summary: dict
    csv_text: str
    csv_path: Path | None = None
    json_path: Path | None = None

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("passed"))


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every trial of ``cfg`` and persist CSV rows plus a JSON summary.

    The CSV depends only on the canonical config; the JSON additionally
    carries the wall time.
    """
    started = time.perf_counter()
    ctx = prepare(cfg)
    count = len(_llt_jobs(cfg)) if cfg.experiment == "E6" else cfg.trials
    seeds = np.random.SeedSequence(cfg.seed).spawn(count)
    jobs = [(ctx, i, seeds[i]) for i in range(count)]
    if cfg.workers > 1 and count > 1:
        with mp.get_context("spawn").Pool(cfg.workers) as pool:
            rows = list(pool.imap(_run_one, jobs, chunksize=max(1, count // (4 * cfg.workers))))
    else:
        rows = [_run_one(j) for j in jobs]
    summary = summarize(ctx, rows)
    summary.update(config_hash=cfg.config_hash, version=__version__, runtime_seconds=time.perf_counter() - started)
    text = rows_to_csv(cfg, ctx, rows)
    result = ExperimentResult(rows, summary, text)
    if cfg.out:
        csv_path = Path(cfg.out)
        if csv_path.suffix != ".csv":
            csv_path = csv_path.with_suffix(".csv")
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        csv_path.write_text(text)
        json_path = csv_path.with_suffix(".json")
        json_path.write_text(json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n")
        result.csv_path, result.json_path = csv_path, json_path
    return result


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)
