"""Command line entry point.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io as nio
from . import kernels
from .catalog import CATALOG, catalog, random_two_step
from .curvature import (
    k_from_bracket,
    k_from_metric,
    off_center_norm,
    q_from_torsion,
    s_tensor,
    trace_checks,
)
from .errors import BadParameter, HCFError, NoConvergence
from .flow import (
    FlowTrace,
    IntegratorConfig,
    asymptotic_limit,
    diagnostics,
    integrate_bracket_flow,
    integrate_metric_flow,
    integrate_normalized_flow,
    matching_bracket,
)
from .soliton import (
    fixed_point_is_soliton,
    moment_defect,
    soliton_solve,
    static_check,
    uniqueness_probe,
)

DEFAULT_T_END = {"flow": 10.0, "normalized-flow": 1e3, "metric-flow": 10.0, "probe-uniqueness": 1e3}
DEFAULT_SAMPLES = {"flow": 50, "normalized-flow": 50, "metric-flow": 50, "moment-test": 100, "probe-uniqueness": 10}
MOMENT_TOL = 1e-10


def _complex_arg(text):
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _matrix(A):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(A)]


# ------------------------------------------------------------------- input


def _load(args):
    """Return ``(descriptor, metric or None, echo dict)``."""
    sources = [args.path is not None, args.catalog is not None, args.random is not None]
    if sum(sources) != 1:
        raise BadParameter("give exactly one of: an algebra file, --catalog NAME, --random DIM")
    if args.path is not None:
        f = nio.parse_algebra(args.path)
        return f.descriptor, f.metric, {"file": str(args.path), "algebra": nio.algebra_to_dict(f.descriptor, f.metric)}
    if args.catalog is not None:
        params = _catalog_params(args.catalog, args)
        desc = catalog(args.catalog, **params)
        return desc, None, {"catalog": args.catalog, "params": params, "algebra": nio.algebra_to_dict(desc)}
    rng = np.random.default_rng(_seed(args))
    desc = random_two_step(args.random, rng)
    return desc, None, {"random": args.random, "seed": _seed(args), "algebra": nio.algebra_to_dict(desc)}


def _catalog_params(name, args):
    p = {}
    if name == "heisenberg3":
        p["s"] = args.s
    elif name == "weighted_h5":
        p["a"], p["b"] = args.a, args.b
    elif name == "free_two_step":
        p["m"] = args.m
    elif name == "heisenberg":
        p["dim"] = args.n
    elif name == "abelian":
        p["n"] = args.n
    elif name in CATALOG:
        raise BadParameter(f"catalog entry {name!r} is not available from the command line")
    return {k: v for k, v in p.items() if v is not None}


def _seed(args):
    return 0 if args.seed is None else args.seed


def _config(args, command, **kw):
    t_end = args.t_end if args.t_end is not None else DEFAULT_T_END[command]
    opts = {"t_end": t_end, "rel_tol": args.rel_tol}
    if args.fixed_point_tol is not None:
        opts["fixed_point_tol"] = args.fixed_point_tol
    opts.update(kw)
    cfg = IntegratorConfig(**opts)
    samples = args.samples if args.samples is not None else DEFAULT_SAMPLES[command]
    return cfg.with_samples(samples) if samples > 0 else cfg


# ---------------------------------------------------------------- commands


def cmd_validate(args):
    desc, metric, echo = _load(args)
    payload = {
        "name": desc.name,
        "dim": desc.dim,
        "center_dim": desc.center_dim,
        "is_two_step": desc.is_two_step,
        "jacobi_residual": desc.jacobi_residual,
        "derivation_dim": len(desc.derivation_basis),
        "has_metric": metric is not None,
    }
    return echo, payload, None, "ok"


def cmd_curvature(args):
    desc, metric, echo = _load(args)
    K = k_from_bracket(desc)
    payload = {
        "K": _matrix(K.matrix),
        "spectrum": K.spectrum.tolist(),
        **trace_checks(desc),
        "torsion_check": float(np.linalg.norm(q_from_torsion(desc) - K.matrix)),
        "S_norm": float(np.linalg.norm(s_tensor(desc))),
        "off_center": off_center_norm(K.matrix, desc.center_projector),
    }
    if metric is not None:
        Kh = k_from_metric(desc, metric)
        payload["metric_K"] = _matrix(Kh.matrix)
    return echo, payload, None, "ok"


def cmd_flow(args):
    desc, _, echo = _load(args)
    trace = integrate_bracket_flow(desc, _config(args, "flow"))
    payload = {"summary": trace.summary(), "final_norm_sq": trace.final.diagnostics.norm_sq}
    if trace.final.t > 0:
        payload["asymptotics"] = asymptotic_limit(trace)
    return echo, payload, trace, trace.termination


def cmd_normalized_flow(args):
    desc, _, echo = _load(args)
    trace = integrate_normalized_flow(desc, _config(args, "normalized-flow"))
    payload = {"summary": trace.summary()}
    if trace.converged:
        payload["soliton"] = fixed_point_is_soliton(trace.final_bracket()).as_dict()
    return echo, payload, trace, trace.termination


def metric_trace_as_flow(mtrace, mu) -> FlowTrace:
    """Diagnostics of the bracket seen in an ``h_t``-unitary frame, per metric sample."""
    out = FlowTrace(mtrace.dim, "metric", termination=mtrace.termination, steps=mtrace.steps, method="metric")
    for s in mtrace.samples:
        lam = matching_bracket(mu, s.metric)
        d = diagnostics(lam)
        out.append(s.t, lam.data, d)
    return out


def cmd_metric_flow(args):
    desc, metric, echo = _load(args)
    h0 = metric if metric is not None else np.eye(desc.dim)
    mtrace = integrate_metric_flow(desc, h0, _config(args, "metric-flow"))
    trace = metric_trace_as_flow(mtrace, desc.bracket)
    final = mtrace.samples[-1]
    payload = {
        "summary": trace.summary(),
        "final_metric": _matrix(final.metric),
        "final_spectrum": final.spectrum.tolist(),
    }
    return echo, payload, trace, mtrace.termination


def cmd_soliton(args):
    desc, _, echo = _load(args)
    rep = soliton_solve(desc)
    payload = rep.as_dict() | {"static": static_check(desc)}
    return echo, payload, None, "ok"


def _brute_force_pairings(mu, E):
    """Both sides of the moment-map identity by explicit sums over the definitions."""
    n = mu.shape[0]
    lhs = 0j
    K = np.zeros((n, n), dtype=complex)
    for r in range(n):
        for p in range(r + 1, n):
            for a in range(n):
                for b in range(n):
                    K[a, b] += 0.5 * mu[r, p, a] * np.conj(mu[r, p, b])
    for a in range(n):
        for b in range(n):
            lhs += K[a, b] * np.conj(E[a, b])
    rhs = 0j
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                v = 0j
                for m in range(n):
                    v += E[k, m] * mu[i, j, m] - E[m, i] * mu[m, j, k] - E[m, j] * mu[i, m, k]
                rhs += v * np.conj(mu[i, j, k])
    return lhs, 0.5 * rhs


def cmd_moment_test(args):
    if args.dim is None or args.dim < 3:
        raise BadParameter("moment-test needs --dim >= 3")
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    count = args.samples if args.samples is not None else DEFAULT_SAMPLES["moment-test"]
    worst, worst_bf = 0.0, 0.0
    for _ in range(count):
        desc = random_two_step(args.dim, rng, normalize=False)
        Q = desc.center_basis
        q = Q.shape[1]
        H = rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q))
        E = Q @ (H + H.conj().T) @ Q.conj().T
        E = 0.5 * (E + E.conj().T)
        scale = desc.bracket.norm_sq() * np.linalg.norm(E)
        worst = max(worst, abs(moment_defect(desc, E)) / scale)
        lhs, rhs = _brute_force_pairings(desc.bracket.data, E)
        worst_bf = max(worst_bf, abs(lhs - rhs) / scale)
    payload = {
        "dim": args.dim,
        "samples": count,
        "max_relative_defect": worst,
        "max_relative_defect_brute_force": worst_bf,
        "tolerance": MOMENT_TOL,
        "passed": max(worst, worst_bf) <= MOMENT_TOL,
    }
    return {"dim": args.dim, "seed": seed}, payload, None, "ok" if payload["passed"] else "tolerance_exceeded"


def cmd_probe(args):
    desc, _, echo = _load(args)
    count = args.samples if args.samples is not None else DEFAULT_SAMPLES["probe-uniqueness"]
    base = _seed(args)
    t_end = args.t_end if args.t_end is not None else DEFAULT_T_END["probe-uniqueness"]
    opts = {"t_end": t_end, "rel_tol": args.rel_tol}
    if args.fixed_point_tol is not None:
        opts["fixed_point_tol"] = args.fixed_point_tol
    rep = uniqueness_probe(desc, range(base, base + count), scale=args.scale, outside=args.outside,
                           cfg=IntegratorConfig(**opts))
    return echo, rep, None, "ok" if rep["unique_within_orbit"] else "not_unique"


def cmd_catalog(args):
    if args.name is None:
        print(json.dumps(sorted(CATALOG)))
        return None
    params = _catalog_params(args.name, args)
    desc = catalog(args.name, **params)
    text = nio.dumps_algebra(desc)
    if args.out is not None:
        nio.write_text(nio.ensure_dir(args.out) / f"{args.name}.json", text)
    sys.stdout.write(text)
    return None


COMMANDS = {
    "validate": cmd_validate,
    "curvature": cmd_curvature,
    "flow": cmd_flow,
    "normalized-flow": cmd_normalized_flow,
    "metric-flow": cmd_metric_flow,
    "soliton": cmd_soliton,
    "moment-test": cmd_moment_test,
    "probe-uniqueness": cmd_probe,
    "catalog": cmd_catalog,
}


# ------------------------------------------------------------------ output


def _emit(args, report, trace):
    if args.out is None:
        return
    out = nio.ensure_dir(args.out)
    nio.write_text(out / "report.json", report.to_json())
    if trace is None:
        return
    if args.format == "json":
        nio.write_text(out / "trace.json", json.dumps(nio.to_jsonable(nio.trace_to_dict(trace)), indent=1) + "\n")
    if args.format == "csv" or args.plot == "svg":
        csv_path = nio.write_text(out / "trace.csv", nio.trace_csv(trace))
        if args.plot == "svg":
            from .plots import plot_trace_csv

            plot_trace_csv(csv_path, out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nilhcf", description="Hermitian curvature flow on 2-step nilpotent brackets")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("path", nargs="?", help="algebra JSON file")
    common.add_argument("--catalog", metavar="NAME", help="use a catalog algebra instead of a file")
    common.add_argument("--random", type=int, metavar="DIM", help="random 2-step bracket (uses --seed)")
    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--s", type=_complex_arg)
    params.add_argument("--a", type=_complex_arg)
    params.add_argument("--b", type=_complex_arg)
    params.add_argument("--m", type=int, help="generators for free_two_step")
    params.add_argument("--n", type=int, help="dimension for heisenberg / abelian")
    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--t-end", type=float)
    run.add_argument("--rel-tol", type=float, default=1e-9)
    run.add_argument("--fixed-point-tol", type=float)
    run.add_argument("--samples", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", type=Path, help="output directory")
    run.add_argument("--format", choices=["csv", "json"], default="csv")
    run.add_argument("--plot", choices=["none", "svg"], default="none")

    for name in ("validate", "curvature", "flow", "normalized-flow", "metric-flow", "soliton"):
        sub.add_parser(name, parents=[common, params, run])
    mt = sub.add_parser("moment-test", parents=[run])
    mt.add_argument("--dim", type=int)
    pr = sub.add_parser("probe-uniqueness", parents=[common, params, run])
    pr.add_argument("--scale", type=float, default=1.0, help="size of the random center generators")
    pr.add_argument("--outside", type=int, default=0, help="extra starts outside the center orbit (reported only)")
    cat = sub.add_parser("catalog", parents=[params])
    cat.add_argument("--name", choices=sorted(CATALOG))
    cat.add_argument("--out", type=Path)
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        result = COMMANDS[args.command](args)
        if result is None:
            return 0
        echo, payload, trace, termination = result
        report = nio.RunReport(
            command=args.command,
            input=echo,
            payload=payload,
            termination=termination,
            wall_time=time.perf_counter() - start,
            seed=getattr(args, "seed", None),
            backend=kernels.BACKEND,
        )
        _emit(args, report, trace)
        sys.stdout.write(report.to_json())
        if args.command == "normalized-flow" and not trace.converged:
            raise NoConvergence(
                f"no fixed point before t = {trace.final.t:g} (residual {trace.final.diagnostics.residual:.3e})",
                trace.final.diagnostics.residual,
                trace,
            )
        if termination in ("tolerance_exceeded", "not_unique"):
            print(f"error: {termination}", file=sys.stderr)
            return 3
        return 0
    except HCFError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
