"""Command-line front end.

Exit status: 0 on pass / converged, 1 on fail / not converged, 2 on usage or
input errors. Reports are deterministic JSON; traces are CSV.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .corpus import MappingFormatError, UnknownMapping, corpus_get, corpus_names, load_mapping
from .modulus import InvalidModulus, parse_modulus
from .ordered_space import (
    NORMS,
    ConeError,
    EstimationError,
    UnsupportedRepresentation,
    dual_cone,
    estimate_normality_constant,
    is_pointed,
    load_cone,
    orthant,
    well_based_witness,
)
from .paraconvexity import (
    FORMS,
    NoFiniteConstant,
    ParameterError,
    SamplingPlan,
    check_cone_convex,
    check_paraconvex,
    estimate_min_C,
    grid_plan,
)
from .quotients import DomainError, TraceError, estimate_directional_derivative, monotone_slack_by_t

COMMANDS = ("check-paraconvex", "check-convex", "estimate-C", "dderiv", "cone-info", "corpus-run")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "form": "min",
    "grid": "default",
    "seed": None,
    "tol": 1e-6,
    "steps": 40,
    "t_start": 0.5,
    "ratio": 0.5,
    "norm": "euclidean",
    "samples": 10_000,
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    options: dict = field(default_factory=dict)

    def get(self, key, default=None):
        v = self.options.get(key)
        return default if v is None else v

    @property
    def seed(self) -> int:
        s = self.options.get("seed")
        if s is None:
            s = os.environ.get("PARACONE_SEED", 0)
        try:
            return int(s)
        except (TypeError, ValueError):
            raise UsageError(f"seed must be an integer, got {s!r}") from None


def _vector(text, name):
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        vals = text
    else:
        vals = [v for v in str(text).replace(" ", "").split(",") if v]
    try:
        return np.array([float(v) for v in vals])
    except ValueError:
        raise UsageError(f"--{name} expects comma-separated numbers, got {text!r}") from None


def _mapping(cfg: RunConfig):
    ref = cfg.get("mapping")
    if not ref:
        raise UsageError("--mapping is required")
    return load_mapping(str(ref))


def _cone(cfg: RunConfig, spec=None):
    ref = cfg.get("cone")
    if ref is None:
        if spec is not None and spec.cone is not None:
            return spec.cone
        if spec is not None:
            return orthant(spec.m)
        raise UsageError("--cone is required")
    ref = str(ref)
    if ref.startswith("orthant:"):
        return orthant(int(ref.split(":", 1)[1]))
    if not Path(ref).exists():
        raise UsageError(f"cone file not found: {ref}")
    return load_cone(ref)


def _plan(cfg: RunConfig) -> SamplingPlan:
    g = str(cfg.get("grid", "default"))
    if g == "default":
        return SamplingPlan(seed=cfg.seed)
    if g == "exact":
        return grid_plan()
    try:
        p = int(g)
    except ValueError:
        raise UsageError(f"--grid expects 'default', 'exact' or a point count, got {g!r}") from None
    return SamplingPlan(points_per_dim=p, seed=cfg.seed)


def _param(cfg, spec, key, known):
    v = cfg.get(key)
    if v is None:
        if known is None:
            raise UsageError(f"--{key} is required for mapping {spec.name!r}")
        return known
    return v


def _write_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    return text


def _form(cfg):
    form = cfg.get("form", "min")
    if form not in FORMS:
        raise UsageError(f"--form must be one of {FORMS}")
    return form


# -- commands ------------------------------------------------------------------

def cmd_check_paraconvex(cfg: RunConfig) -> int:
    spec = _mapping(cfg)
    K = _cone(cfg, spec)
    alpha = parse_modulus(_param(cfg, spec, "alpha", spec.known_modulus))
    C = float(_param(cfg, spec, "C", spec.known_C))
    k0 = _vector(cfg.get("k0"), "k0")
    if k0 is None:
        k0 = spec.known_k0 if spec.known_k0 is not None else np.ones(K.dim)
    rep = check_paraconvex(spec, K, alpha, C, k0, _form(cfg), _plan(cfg), cfg.get("norm"))
    payload = rep.to_dict()
    payload["command"] = cfg.command
    print(_write_json(cfg.get("out"), payload), end="")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_check_convex(cfg: RunConfig) -> int:
    spec = _mapping(cfg)
    K = _cone(cfg, spec)
    rep = check_cone_convex(spec, K, _plan(cfg))
    payload = rep.to_dict()
    payload["command"] = cfg.command
    print(_write_json(cfg.get("out"), payload), end="")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_estimate_C(cfg: RunConfig) -> int:
    spec = _mapping(cfg)
    K = _cone(cfg, spec)
    alpha = parse_modulus(_param(cfg, spec, "alpha", spec.known_modulus))
    k0 = _vector(cfg.get("k0"), "k0")
    if k0 is None:
        k0 = spec.known_k0 if spec.known_k0 is not None else np.ones(K.dim)
    plan = _plan(cfg) if cfg.get("grid", "default") != "default" else grid_plan()
    payload = {"command": cfg.command, "mapping": spec.name, "alpha": alpha.label,
               "k0": k0.tolist(), "form": _form(cfg)}
    try:
        payload["C_hat"] = estimate_min_C(spec, K, alpha, k0, _form(cfg), plan, cfg.get("norm"))
        code = EXIT_OK
    except NoFiniteConstant as exc:
        payload["C_hat"] = None
        payload["error"] = str(exc)
        code = EXIT_FAIL
    print(_write_json(cfg.get("out"), payload), end="")
    return code


def write_trace_csv(path, trace, monotone_slack):
    m = trace.raw.shape[1]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"raw_{i + 1}" for i in range(m)]
                   + [f"corrected_{i + 1}" for i in range(m)] + ["monotone_slack"])
        for t, r, c, s in zip(trace.t_values, trace.raw, trace.corrected, monotone_slack):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in r] + [repr(float(v)) for v in c]
                       + ["" if np.isnan(s) else repr(float(s))])


def cmd_dderiv(cfg: RunConfig) -> int:
    spec = _mapping(cfg)
    K = _cone(cfg, spec)
    alpha = parse_modulus(_param(cfg, spec, "alpha", spec.known_modulus))
    C = float(_param(cfg, spec, "C", spec.known_C))
    k0 = _vector(cfg.get("k0"), "k0")
    if k0 is None:
        if spec.known_k0 is None:
            raise UsageError("--k0 is required")
        k0 = spec.known_k0
    x0 = _vector(cfg.get("x0"), "x0")
    h = _vector(cfg.get("h"), "h")
    if x0 is None or h is None:
        raise UsageError("--x0 and --h are required")
    est = estimate_directional_derivative(
        spec, x0, h, C, k0, alpha, K, tol=float(cfg.get("tol")), max_steps=int(cfg.get("steps")),
        t_start=float(cfg.get("t_start")), ratio=float(cfg.get("ratio")),
    )
    payload = est.to_dict()
    payload["command"] = cfg.command
    payload["subchecks"] = {k: payload["subchecks"][k] for k in ("monotone", "lower_bound")}
    slack = monotone_slack_by_t(est.trace, K)
    if cfg.get("trace"):
        write_trace_csv(cfg.get("trace"), est.trace, slack)
    if cfg.get("plot"):
        from .plotting import plot_trace
        plot_trace(est.trace, cfg.get("plot"), slack)
    print(_write_json(cfg.get("out"), payload), end="")
    return EXIT_OK if est.converged else EXIT_FAIL


def cmd_cone_info(cfg: RunConfig) -> int:
    K = _cone(cfg)
    kind = cfg.get("norm", "euclidean")
    if kind not in NORMS:
        raise UsageError(f"--norm must be one of {NORMS}")
    info = {"command": cfg.command, "cone": K.to_dict(), "pointed": is_pointed(K), "norm": kind}
    try:
        info["generators"] = K.generator_matrix().tolist()
        info["dual"] = dual_cone(K).to_dict()
        w = well_based_witness(K, kind)
        info["well_based_witness"] = None if w is None else w.coeffs.tolist()
    except UnsupportedRepresentation as exc:
        info["generators"] = None
        info["note"] = str(exc)
    if info["pointed"] and info.get("generators") is not None:
        info["normality_constant_lower_bound"] = estimate_normality_constant(
            K, kind, int(cfg.get("samples")), cfg.seed)
        info["samples"] = int(cfg.get("samples"))
        info["seed"] = cfg.seed
    print(_write_json(cfg.get("out"), info), end="")
    return EXIT_OK


def cmd_corpus_run(cfg: RunConfig) -> int:
    from .suite import run_entry_suite

    if cfg.get("all"):
        names = corpus_names()
    elif cfg.get("mapping"):
        names = [str(cfg.get("mapping"))]
        corpus_get(names[0])
    else:
        raise UsageError("corpus-run needs --all or --mapping <name>")
    figdir = cfg.get("figures")
    lines = []
    for name in names:
        spec = corpus_get(name)
        traces = [] if figdir else None
        lines.extend(run_entry_suite(spec, cfg.seed, traces))
        if figdir and traces:
            from .plotting import plot_trace
            for i, tr in enumerate(traces):
                plot_trace(tr, Path(figdir) / f"{name}_trace{i}.png", monotone_slack_by_t(tr, spec.cone))
    width = max(len(f"{l.mapping}  {l.check}") for l in lines)
    for l in lines:
        label = f"{l.mapping}  {l.check}"
        print(f"{label:<{width}}  {'PASS' if l.ok else 'FAIL'}  {l.detail}")
    ok = all(l.ok for l in lines)
    print(f"{sum(l.ok for l in lines)}/{len(lines)} checks passed")
    if cfg.get("out"):
        _write_json(cfg.get("out"), {"command": cfg.command, "seed": cfg.seed, "passed": ok,
                                     "lines": [l.to_dict() for l in lines]})
    return EXIT_OK if ok else EXIT_FAIL


HANDLERS = {
    "check-paraconvex": cmd_check_paraconvex,
    "check-convex": cmd_check_convex,
    "estimate-C": cmd_estimate_C,
    "dderiv": cmd_dderiv,
    "cone-info": cmd_cone_info,
    "corpus-run": cmd_corpus_run,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paracone", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, mapping=True, cone=True):
        sp.add_argument("--config", help="JSON file with option values; flags override it")
        sp.add_argument("--seed", type=int, help="RNG seed (default: $PARACONE_SEED or 0)")
        sp.add_argument("--out", help="write the JSON report here")
        if mapping:
            sp.add_argument("--mapping", help="corpus name or polynomial JSON file")
        if cone:
            sp.add_argument("--cone", help="cone JSON file or 'orthant:<m>' (default: the mapping's cone)")

    def para(sp):
        sp.add_argument("--alpha", help="modulus, e.g. pow:2")
        sp.add_argument("--k0", help="comma-separated cone element")
        sp.add_argument("--form", choices=FORMS)
        sp.add_argument("--norm", choices=NORMS)
        sp.add_argument("--grid", help="'default', 'exact' (grid only) or points per dimension")

    sp = sub.add_parser("check-paraconvex", help="sampled strong alpha-k0 paraconvexity check")
    common(sp)
    para(sp)
    sp.add_argument("--C", type=float)

    sp = sub.add_parser("check-convex", help="sampled K-convexity check")
    common(sp)
    sp.add_argument("--grid")

    sp = sub.add_parser("estimate-C", help="smallest constant passing on the grid")
    common(sp)
    para(sp)

    sp = sub.add_parser("dderiv", help="directional derivative estimate")
    common(sp)
    sp.add_argument("--alpha")
    sp.add_argument("--k0")
    sp.add_argument("--C", type=float)
    sp.add_argument("--x0")
    sp.add_argument("--h")
    sp.add_argument("--tol", type=float)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--t-start", dest="t_start", type=float)
    sp.add_argument("--ratio", type=float)
    sp.add_argument("--trace", help="write the quotient trace CSV here")
    sp.add_argument("--plot", help="render the trace figure here (png/pdf/svg)")

    sp = sub.add_parser("cone-info", help="pointedness, dual, normality and well-basedness")
    common(sp, mapping=False)
    sp.add_argument("--norm", choices=NORMS)
    sp.add_argument("--samples", type=int)

    sp = sub.add_parser("corpus-run", help="full suite over corpus entries")
    common(sp, cone=False)
    sp.add_argument("--all", action="store_true", default=None)
    sp.add_argument("--figures", help="directory for per-trace figures")
    return p


def make_config(argv=None) -> RunConfig:
    args = build_parser().parse_args(argv)
    given = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config")}
    opts = dict(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise UsageError(f"config file not found: {args.config}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad config file {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in doc.items()})
    opts.update(given)
    return RunConfig(args.command, opts)


def run(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


def main(argv=None) -> int:
    try:
        cfg = make_config(argv)
        return run(cfg)
    except SystemExit as exc:  # argparse
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, UnknownMapping, MappingFormatError, InvalidModulus, ConeError,
            ParameterError, DomainError, TraceError, EstimationError, FileNotFoundError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        print(f"paracone: error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
