"""Command-line experiment runner.

Usage::

    dfrkit estimate --closed-form poisson-exp --lambda 1 --mu 1 --nmax 4
    dfrkit verify-dfr --config experiment.json --samples 1000000 --seed 7
    dfrkit counterexample --name kijima2 --tol 1e-9

Exit status: 0 ran clean, 1 error, 2 ran and detected a violation of
discrete DFR (``verify-dfr``) or reproduced a counterexample.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from typing import Optional

import jsonschema

from . import counterexamples as cx
from ._errors import UnsupportedError
from .estimate import (
    check_discrete_dfr,
    chunk_rng,
    closed_form_poisson_exp,
    estimate_sequence_mc,
    estimate_sequence_quadrature,
)
from .hypotheses import check_kijima1_conditions, check_t2star_conditions
from .survival import Discrete, Exponential, Gamma, Grid, PointMass, UniformZeroTo, Weibull
from .vamodels import (
    ConstantDegree,
    DegreeSequence,
    KijimaI,
    KijimaII,
    RandomDegree,
    VirtualAgeModel,
    sample_trajectories,
    write_trajectories_csv,
)

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2

_LAW = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["exponential", "weibull", "gamma", "uniform", "point", "discrete"]},
        "rate": {"type": "number", "exclusiveMinimum": 0},
        "shape": {"type": "number", "exclusiveMinimum": 0},
        "scale": {"type": "number", "exclusiveMinimum": 0},
        "b": {"type": "number", "exclusiveMinimum": 0},
        "value": {"type": "number", "minimum": 0},
        "values": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
    },
    "additionalProperties": False,
}

_GRID = {
    "type": "object",
    "required": ["kind", "count"],
    "properties": {
        "kind": {"enum": ["uniform", "log", "quantile"]},
        "lo": {"type": "number", "minimum": 0},
        "hi": {"type": "number", "exclusiveMinimum": 0},
        "count": {"type": "integer", "minimum": 2},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "model": {
            "type": "object",
            "required": ["base", "rule", "policy"],
            "properties": {
                "base": _LAW,
                "rule": {"enum": ["kijima1", "kijima2"]},
                "policy": {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["constant", "sequence", "random"]},
                        "q": {"type": "number", "minimum": 0},
                        "values": {"type": "array", "items": {"type": "number", "minimum": 0},
                                   "minItems": 1},
                        "law": _LAW,
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "random_time": _LAW,
        "estimator": {"enum": ["mc", "quad", "closed"]},
        "closed_form": {
            "type": "object",
            "properties": {
                "name": {"enum": ["poisson-exp"]},
                "lambda": {"type": "number", "exclusiveMinimum": 0},
                "mu": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "counterexample": {
            "type": "object",
            "properties": {
                "name": {"enum": ["kijima2", "association"]},
                "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "mc_samples": {"type": "integer", "minimum": 1000},
            },
            "additionalProperties": False,
        },
        "n_max": {"type": "integer", "minimum": 1},
        "n_samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "chunk_size": {"type": "integer", "minimum": 1},
        "depth": {"type": "integer", "minimum": 1},
        "grid": _GRID,
        "history_grid": _GRID,
        "out": {"type": "string"},
        "format": {"enum": ["csv", "json"]},
    },
    "additionalProperties": False,
}

DEFAULTS = {
    "n_max": 6,
    "n_samples": 100_000,
    "seed": 0,
    "alpha": 0.01,
    "tol": 1e-9,
    "chunk_size": 1 << 16,
    "depth": 3,
    "format": "csv",
}


class ConfigError(ValueError):
    pass


def build_law(spec: dict):
    fam = spec["family"]
    try:
        if fam == "exponential":
            return Exponential(spec.get("rate", 1.0))
        if fam == "weibull":
            return Weibull(spec["shape"], spec.get("scale", 1.0))
        if fam == "gamma":
            return Gamma(spec["shape"], spec.get("rate", 1.0))
        if fam == "uniform":
            return UniformZeroTo(spec.get("b", 1.0))
        if fam == "point":
            return PointMass(spec["value"])
        return Discrete(spec["values"], spec.get("weights"))
    except KeyError as exc:
        raise ConfigError(f"family {fam!r} needs parameter {exc.args[0]!r}") from None


def build_model(spec: dict) -> VirtualAgeModel:
    base = build_law(spec["base"])
    rule = KijimaI() if spec["rule"] == "kijima1" else KijimaII()
    pol = spec["policy"]
    try:
        if pol["kind"] == "constant":
            policy = ConstantDegree(pol["q"])
        elif pol["kind"] == "sequence":
            policy = DegreeSequence(pol["values"])
        else:
            policy = RandomDegree(build_law(pol["law"]))
    except KeyError as exc:
        raise ConfigError(f"policy {pol['kind']!r} needs field {exc.args[0]!r}") from None
    return VirtualAgeModel(base, rule, policy)


def build_grid(spec: dict, law=None) -> Grid:
    kind = spec["kind"]
    if kind == "quantile":
        if law is None:
            raise ConfigError("quantile grids need a law to take quantiles of")
        return Grid.quantiles(law, spec["count"])
    lo, hi = spec.get("lo", 0.0), spec.get("hi")
    if hi is None:
        raise ConfigError(f"{kind} grid needs 'hi'")
    if kind == "log":
        return Grid.log_spaced(lo if lo > 0 else 1e-3, hi, spec["count"])
    return Grid.uniform(lo, hi, spec["count"])


def load_config(args) -> dict:
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
    overrides = {
        "seed": args.seed, "n_samples": args.samples, "n_max": args.nmax, "alpha": args.alpha,
        "tol": args.tol, "threads": args.threads, "out": args.out, "format": args.format,
    }
    if getattr(args, "estimator", None):
        overrides["estimator"] = args.estimator
    if getattr(args, "closed_form", None):
        cf = dict(cfg.get("closed_form", {}))
        cf["name"] = args.closed_form
        if args.lam is not None:
            cf["lambda"] = args.lam
        if args.mu is not None:
            cf["mu"] = args.mu
        overrides["closed_form"] = cf
        overrides["estimator"] = "closed"
    if getattr(args, "name", None):
        ce = dict(cfg.get("counterexample", {}))
        ce["name"] = args.name
        if args.p is not None:
            ce["p"] = args.p
        if args.mc_samples is not None:
            ce["mc_samples"] = args.mc_samples
        overrides["counterexample"] = ce
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {path}: {exc.message}") from None
    return {**DEFAULTS, **cfg}


def _need(cfg, key, what):
    if key not in cfg:
        raise ConfigError(f"{what} needs '{key}' in the config")
    return cfg[key]


def _estimate(cfg):
    est = cfg.get("estimator", "mc")
    if est == "closed":
        cf = cfg.get("closed_form", {})
        if cf.get("name", "poisson-exp") != "poisson-exp":
            raise ConfigError("unknown closed form")
        return closed_form_poisson_exp(cf.get("lambda", 1.0), cf.get("mu", 1.0), cfg["n_max"])
    model = build_model(_need(cfg, "model", "estimation"))
    T = build_law(_need(cfg, "random_time", "estimation"))
    if est == "quad":
        return estimate_sequence_quadrature(model, T, cfg["n_max"], cfg["tol"])
    return estimate_sequence_mc(model, T, cfg["n_max"], cfg["n_samples"], seed=cfg["seed"],
                                chunk_size=cfg["chunk_size"], threads=cfg.get("threads"))


@contextlib.contextmanager
def _sink(cfg):
    if cfg.get("out"):
        with open(cfg["out"], "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _dump_json(obj, fh):
    json.dump(obj, fh, indent=2, sort_keys=True)
    fh.write("\n")


def run_simulate(cfg, log) -> int:
    model = build_model(_need(cfg, "model", "simulate"))
    traj = sample_trajectories(model, cfg["n_max"], cfg["n_samples"], chunk_rng(cfg["seed"], 0))
    with _sink(cfg) as fh:
        if cfg["format"] == "json":
            _dump_json({"seed": cfg["seed"], "x": traj.x.tolist(), "a": traj.a.tolist(),
                        "v": traj.v.tolist(), "s": traj.s.tolist()}, fh)
        else:
            write_trajectories_csv(traj, fh)
    log(f"simulated {cfg['n_samples']} trajectories of {cfg['n_max']} steps "
        f"(seed {cfg['seed']}, absorbed {int(traj.absorbed.sum())})")
    return EXIT_OK


def run_estimate(cfg, log) -> int:
    est = _estimate(cfg)
    with _sink(cfg) as fh:
        if cfg["format"] == "json":
            _dump_json(est.to_dict(), fh)
        else:
            est.write_csv(fh)
    log(f"{'n':>3} {'p_hat':>14} {'se':>12}  [{est.kind.value}]")
    for n, (p, se) in enumerate(zip(est.p, est.se)):
        log(f"{n:>3} {p:>14.9f} {se:>12.3g}")
    return EXIT_OK


def run_verify(cfg, log) -> int:
    est = _estimate(cfg)
    rep = check_discrete_dfr(est, cfg["alpha"])
    with _sink(cfg) as fh:
        if cfg["format"] == "json":
            _dump_json({"estimate": est.to_dict(), "report": rep.to_dict()}, fh)
        else:
            rep.write_csv(fh)
    log(f"{'n':>3} {'margin':>14} {'margin_se':>12}  verdict  [{est.kind.value}]")
    for n, (m, se, v) in enumerate(zip(rep.margins, rep.margin_se, rep.verdicts)):
        log(f"{n:>3} {m:>14.9f} {se:>12.3g}  {v.value}")
    return EXIT_VIOLATION if rep.any_violated else EXIT_OK


def run_hypotheses(cfg, log) -> int:
    model = build_model(_need(cfg, "model", "hypotheses"))
    grid = build_grid(cfg["grid"], model.base) if "grid" in cfg else Grid.uniform(0.0, 5.0, 50)
    out = {}
    if isinstance(model.rule, KijimaI) and "random_time" in cfg:
        out["kijima1"] = check_kijima1_conditions(model, build_law(cfg["random_time"]), grid).to_dict()
    if model.deterministic:
        hist = build_grid(cfg["history_grid"], model.base) if "history_grid" in cfg else None
        out["t2star"] = check_t2star_conditions(model, cfg["depth"], hist).to_dict()
    if not out:
        raise UnsupportedError("no applicable hypothesis check for this model")
    with _sink(cfg) as fh:
        if cfg["format"] == "json":
            _dump_json(out, fh)
        else:
            fh.write("check,condition,status,n_witnesses\n")
            for name, rep in out.items():
                for c in rep["conditions"]:
                    fh.write(f"{name},{c['label']},{c['status']},{len(c['witnesses'])}\n")
    for name, rep in out.items():
        log(f"{name}: {rep['overall']}")
        for c in rep["conditions"]:
            log(f"  {c['label']:<14} {c['status']}")
    return EXIT_OK


def run_counterexample(cfg, log) -> int:
    ce = cfg.get("counterexample", {"name": "kijima2"})
    if ce.get("name", "kijima2") == "kijima2":
        tol = min(cfg["tol"], 1e-4)
        rep = cx.kijima2_counterexample(tol, mc_samples=ce.get("mc_samples"), seed=cfg["seed"],
                                  threads=cfg.get("threads"))
        violated = rep.verdict == "VIOLATED"
    else:
        rep = cx.association_counterexample(ce.get("p", 0.5), Exponential(1.0), cfg["n_samples"], cfg["seed"])
        violated = rep.verdict == "REFUTED"
    text = rep.to_text()
    if cfg.get("out"):
        with _sink(cfg) as fh:
            if cfg["format"] == "json":
                _dump_json(rep.to_dict(), fh)
            else:
                fh.write("name,value,method\n")
                for c in rep.constants:
                    fh.write(f"{c.name},{c.value!r},{c.method}\n")
                for key, m in rep.margins.items():
                    fh.write(f"{key},{m['value']!r},{m['verdict']}\n")
    log(text)
    return EXIT_VIOLATION if violated else EXIT_OK


PIPELINES = {
    "simulate": run_simulate,
    "estimate": run_estimate,
    "verify-dfr": run_verify,
    "hypotheses": run_hypotheses,
    "counterexample": run_counterexample,
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int, help="Monte Carlo trajectories")
    common.add_argument("--nmax", type=int)
    common.add_argument("--alpha", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output file (stdout when omitted)")
    common.add_argument("--format", choices=["csv", "json"])

    parser = argparse.ArgumentParser(prog="dfrkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write sampled trajectories")
    for name in ("estimate", "verify-dfr"):
        p = sub.add_parser(name, parents=[common], help=f"{name} P(N(T) >= n)")
        p.add_argument("--estimator", choices=["mc", "quad", "closed"])
        p.add_argument("--closed-form", choices=["poisson-exp"])
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--mu", type=float)
    sub.add_parser("hypotheses", parents=[common], help="check theorem hypotheses")
    p = sub.add_parser("counterexample", parents=[common], help="reproduce a counterexample")
    p.add_argument("--name", choices=["kijima2", "association"])
    p.add_argument("--p", type=float)
    p.add_argument("--mc-samples", type=int)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    to_stdout = not args.out

    def log(msg):
        # keep stdout clean when it carries the data
        print(msg, file=sys.stderr if to_stdout and args.command != "counterexample" else sys.stdout)

    try:
        cfg = load_config(args)
        return PIPELINES[args.command](cfg, log)
    except (ConfigError, UnsupportedError, ValueError, OSError) as exc:
        print(f"dfrkit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
