"""Command-line front end: single solves, method comparisons, step-size sweeps,
and the randomized verification suites.

Subcommands
-----------
run      one solve, CSV trace, final status line
compare  two (or more) methods on one instance: wide CSV + gnuplot script + PNG
sweep    methods x step-sizes grid on one instance: curves/summary CSV + figure
verify   contract suites (identities | reductions | admm-equivalence | rates | all)

Step sizes accept either a float or the form ``c/L``, resolved against the
instance's Lipschitz constant.  ``TRIPLESPLIT_SEED`` overrides the default
seed of problem specs that omit one.  Exit codes: 0 = run completed (a
diverged experiment is a valid outcome), 1 = verification failure,
2 = usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from functools import partial

import numpy as np

from . import multiblock as mb
from . import operators as ops
from . import problems, reporting, splitting as sp
from . import verify as verification

USAGE_ERROR = 2


class UsageError(Exception):
    pass


def _default_seed() -> int:
    env = os.environ.get("TRIPLESPLIT_SEED")
    if env is None:
        return problems.DEFAULT_SEED
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"TRIPLESPLIT_SEED must be an integer, got {env!r}") from exc


def _parse_kv(body: str) -> dict:
    out = {}
    if body:
        for item in body.split(","):
            if "=" not in item:
                raise UsageError(f"expected key=value, got {item!r}")
            key, val = item.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def parse_problem(spec: str):
    """Build the problem object named by a --problem spec string."""
    kind, _, body = spec.partition(":")
    if kind == "figure2":
        kv = _parse_kv(body)
        try:
            instance = problems.build_figure2_instance(
                n=int(kv.pop("n", 100)),
                seed=int(kv.pop("seed", _default_seed())),
                lower=float(kv.pop("lower", kv.pop("m", -1.0))),
                upper=float(kv.pop("upper", kv.pop("M", 1.0))),
                alpha=float(kv.pop("alpha", 1.0)),
                noise_scale=float(kv.pop("noise", 0.8)),
            )
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad figure2 spec: {exc}") from exc
        if kv:
            raise UsageError(f"unknown figure2 keys: {sorted(kv)}")
        return instance
    if kind == "file":
        try:
            return problems.load_instance(body)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load instance file {body!r}: {exc}") from exc
    if kind == "algo5":
        kv = _parse_kv(body)
        try:
            n = int(kv.pop("n", 5))
            seed = int(kv.pop("seed", _default_seed()))
            lkind = kv.pop("lkind", "scaled")
            lscale = float(kv.pop("lscale", 1.0))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad algo5 spec: {exc}") from exc
        if kv:
            raise UsageError(f"unknown algo5 keys: {sorted(kv)}")
        if lkind == "scaled":
            L = lscale * np.eye(n)
        elif lkind == "random":
            L = np.random.default_rng(seed + 1).standard_normal((n, n))
        else:
            raise UsageError(f"unknown lkind {lkind!r}")
        return problems.build_composite_instance(n, L, seed=seed)
    if kind == "quadsum":
        kv = _parse_kv(body)
        try:
            inst = problems.build_quadratic_sum_instance(
                n=int(kv.pop("n", 8)),
                blocks=int(kv.pop("blocks", 4)),
                seed=int(kv.pop("seed", _default_seed())),
            )
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad quadsum spec: {exc}") from exc
        if kv:
            raise UsageError(f"unknown quadsum keys: {sorted(kv)}")
        return inst
    if os.path.exists(spec):
        return problems.load_instance(spec)
    raise UsageError(f"unknown problem spec {spec!r}")


def instance_lipschitz(instance) -> float:
    if isinstance(instance, problems.BoundProjectionInstance):
        return instance.lipschitz
    if isinstance(instance, problems.CompositeInstance):
        return instance.alpha_g * instance.norm_L**2
    if isinstance(instance, problems.QuadraticSumInstance):
        return instance.smooth_lipschitz_sum()
    raise UsageError("no Lipschitz constant defined for this problem type")


def parse_gamma(expr: str, instance) -> float:
    expr = expr.strip()
    if expr.endswith("/L"):
        try:
            c = float(expr[:-2])
        except ValueError as exc:
            raise UsageError(f"bad gamma expression {expr!r}") from exc
        gamma = c / instance_lipschitz(instance)
    else:
        try:
            gamma = float(expr)
        except ValueError as exc:
            raise UsageError(f"bad gamma {expr!r}") from exc
    if not gamma > 0 or not np.isfinite(gamma):
        raise UsageError(f"gamma must be positive and finite, got {gamma}")
    return gamma


def parse_lambda(expr: str):
    expr = expr.strip()
    if expr.startswith("schedule:"):
        name = expr[len("schedule:") :]
        if name == "harmonic":
            return lambda k: 1.0 / (k + 1.0)
        if name == "half":
            return 0.5
        raise UsageError(f"unknown relaxation schedule {name!r}")
    try:
        lam = float(expr)
    except ValueError as exc:
        raise UsageError(f"bad lambda {expr!r}") from exc
    return lam


def parse_method(expr: str):
    name, _, body = expr.partition(":")
    if name not in ("proposed", "dys", "drs", "fbs_variant", "multiblock"):
        raise UsageError(f"unknown method {expr!r}")
    kv = _parse_kv(body)
    if name != "multiblock" and kv:
        raise UsageError(f"method {name} takes no options")
    return name, kv


def _quadsum_scheme(instance, gamma, m=None):
    blocks = instance.blocks if m is None else int(m)
    if blocks != instance.blocks:
        raise UsageError(
            f"instance has {instance.blocks} blocks; method requested m={blocks}"
        )
    alphas, us = instance.alphas, instance.us
    first = ops.quadratic_operator(alphas[0], us[0])
    last = ops.quadratic_operator(alphas[-1], us[-1])
    chain = [
        mb.SmoothBlock(
            prox=partial(ops.prox_quadratic, alphas[i], us[i]),
            grad=partial(ops.grad_quadratic, alphas[i], us[i]),
            lipschitz=float(alphas[i]),
        )
        for i in range(1, len(alphas) - 1)
    ]
    return mb.MultiblockScheme(first=first, chain=chain, last=last, gamma=gamma)


def build_stepper(instance, method: str, method_opts: dict, gamma: float):
    """Bind a stepper for (instance, method); returns (stepper, oracle_x or None)."""
    if isinstance(instance, problems.BoundProjectionInstance):
        A_op, B_op, C_op = problems.assemble_splitting_operators(instance)
        cert = problems.kkt_oracle(instance)
        if method == "proposed":
            return partial(sp.proposed_step, A_op, B_op, C_op, gamma), cert.x_star
        if method == "dys":
            return partial(sp.dys_step, A_op, B_op, C_op, gamma), cert.x_star
        if method == "drs":
            # feasibility baseline: box against the hyperplane, quadratic dropped
            return partial(sp.drs_step, A_op, B_op, gamma), None
        if method == "fbs_variant":
            # box + quadratic only; the equality constraint is not part of this run
            return partial(sp.fbs_variant_step, A_op, C_op, gamma), None
        raise UsageError(f"method {method} not available for figure2 instances")
    if isinstance(instance, problems.CompositeInstance):
        if method != "proposed":
            raise UsageError("composite (algo5) instances run with --method proposed")
        return instance.stepper(gamma), None
    if isinstance(instance, problems.QuadraticSumInstance):
        if method != "multiblock":
            raise UsageError("quadsum instances run with --method multiblock")
        scheme = _quadsum_scheme(instance, gamma, method_opts.get("m"))

        def stepper(z):
            z_next, w, pts = mb.multiblock_step(scheme, z)
            return sp.StepOutput(
                z=z, x_B=w, x_A=pts[0], x_C=pts[-1], Tz=z_next, c_at_xB=np.zeros_like(w)
            )

        return stepper, instance.minimizer()
    raise UsageError(f"cannot run method {method} on {type(instance).__name__}")


def _status_word(status: str) -> str:
    return {"converged": "Converged", "max_iters": "MaxIters", "diverged": "Diverged"}[status]


def _run_once(instance, method, method_opts, gamma, lam, max_iters, tol, want_oracle):
    stepper, oracle_x = build_stepper(instance, method, method_opts, gamma)
    if not want_oracle:
        oracle_x = None
    gaps = [] if (oracle_x is not None
                  and isinstance(instance, problems.BoundProjectionInstance)) else None
    on_step = None
    if gaps is not None:
        ref_val = instance.objective(oracle_x)
        on_step = lambda k, step: gaps.append(instance.objective(step.x_B) - ref_val)
    z0 = np.zeros(oracle_x.shape[0] if oracle_x is not None else _dim_of(instance))
    config = sp.SplitConfig(
        gamma=gamma, lambda_schedule=lam, max_iters=max_iters, residual_tol=tol
    )
    trace = sp.km_iterate(stepper, config, z0, reference=oracle_x, on_step=on_step)
    return trace, (None if gaps is None else np.asarray(gaps))


def _dim_of(instance) -> int:
    return instance.n


def cmd_run(args) -> int:
    instance = parse_problem(args.problem)
    method, method_opts = parse_method(args.method)
    gamma = parse_gamma(args.gamma, instance)
    lam = parse_lambda(args.relaxation)
    trace, gaps = _run_once(
        instance, method, method_opts, gamma, lam, args.max_iters, args.tol,
        want_oracle=not args.no_oracle,
    )
    reporting.write_run_csv(args.output, trace, gaps=gaps)
    k_last = int(trace.iterations[-1]) if len(trace) else 0
    print(f"status={_status_word(trace.status)} iters={k_last} "
          f"residual={trace.final_residual:.6e}")
    print(f"trace written to {args.output}")
    return 0


def cmd_compare(args) -> int:
    instance = parse_problem(args.problem)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if len(methods) < 2:
        raise UsageError("compare needs at least two comma-separated methods")
    gamma = parse_gamma(args.gamma, instance)
    lam = parse_lambda(args.relaxation)
    errors = {}
    longest = 0
    for spec in methods:
        method, method_opts = parse_method(spec)
        trace, _ = _run_once(
            instance, method, method_opts, gamma, lam, args.max_iters, args.tol,
            want_oracle=True,
        )
        errors[method] = trace.errors
        longest = max(longest, len(trace))
        print(f"{method}: status={_status_word(trace.status)} iters={len(trace) - 1} "
              f"residual={trace.final_residual:.6e}")
    csv_path = args.output + ".csv"
    gp_path = args.output + ".gp"
    png_path = args.output + ".png"
    reporting.write_compare_csv(csv_path, np.arange(longest), errors)
    title = f"{args.problem} gamma={args.gamma}"
    with open(gp_path, "w", encoding="ascii") as fh:
        fh.write(reporting.compare_plot_script(csv_path, args.output + "_gp.png",
                                               list(errors), title))
    if not args.no_plot:
        reporting.render_compare_png(png_path, errors, title)
        print(f"wrote {csv_path}, {gp_path}, {png_path}")
    else:
        print(f"wrote {csv_path}, {gp_path}")
    return 0


def cmd_sweep(args) -> int:
    instance = parse_problem(args.problem)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    gamma_exprs = [g.strip() for g in args.gammas.split(",") if g.strip()]
    if not methods or not gamma_exprs:
        raise UsageError("sweep needs --methods and --gammas")
    lam = parse_lambda(args.relaxation)
    curve_rows, summary_rows = [], []
    panels = {}
    for gexpr in gamma_exprs:
        gamma = parse_gamma(gexpr, instance)
        panel = {}
        for spec in methods:
            method, method_opts = parse_method(spec)
            trace, _ = _run_once(
                instance, method, method_opts, gamma, lam, args.max_iters, args.tol,
                want_oracle=True,
            )
            stride = max(1, len(trace) // args.max_points)
            for j in range(0, len(trace), stride):
                curve_rows.append(dict(
                    gamma=gamma, method=method, iter=int(trace.iterations[j]),
                    residual=trace.residuals[j], error=trace.errors[j],
                ))
            summary_rows.append(dict(
                gamma=gamma, method=method, status=_status_word(trace.status),
                iters=int(trace.iterations[-1]),
                final_residual=trace.final_residual,
                min_error=float(np.nanmin(trace.errors)) if len(trace) else float("nan"),
            ))
            panel[method] = trace.errors[::stride]
            print(f"gamma={gexpr} {method}: status={_status_word(trace.status)} "
                  f"iters={int(trace.iterations[-1])} residual={trace.final_residual:.3e}")
        panels[f"gamma={gexpr}"] = panel
    curves_path = args.output + "_curves.csv"
    summary_path = args.output + "_summary.csv"
    gp_path = args.output + ".gp"
    png_path = args.output + ".png"
    reporting.write_sweep_csv(curves_path, curve_rows)
    reporting.write_summary_csv(summary_path, summary_rows)
    gammas = sorted({row["gamma"] for row in summary_rows})
    with open(gp_path, "w", encoding="ascii") as fh:
        fh.write(reporting.sweep_plot_script(curves_path, args.output + "_gp.png",
                                             gammas, [parse_method(m)[0] for m in methods],
                                             args.problem))
    written = [curves_path, summary_path, gp_path]
    if not args.no_plot:
        reporting.render_sweep_png(png_path, panels, args.problem)
        written.append(png_path)
    print("wrote " + ", ".join(written))
    return 0


def cmd_verify(args) -> int:
    try:
        results = verification.run_suites(args.suite)
    except KeyError:
        raise UsageError(f"unknown suite {args.suite!r}")
    failed = 0
    for res in results:
        mark = "PASS" if res.passed else "FAIL"
        print(f"[{mark}] {res.name}: value={res.value:.3e} bound={res.bound:.3e}")
        failed += not res.passed
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triplesplit",
        description="Three-operator splitting benchmark runner and verifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--problem", required=True,
                       help="figure2:n=100,seed=0 | file:PATH | algo5:n=5,seed=0 | quadsum:n=8,blocks=4,seed=0")
        p.add_argument("--max-iters", type=int, default=200_000)
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--lambda", dest="relaxation", default="1.0",
                       help="relaxation: constant or schedule:<name>")

    p_run = sub.add_parser("run", help="single solve with CSV trace")
    add_common(p_run)
    p_run.add_argument("--method", required=True,
                       help="proposed | dys | drs | fbs_variant | multiblock[:m=K]")
    p_run.add_argument("--gamma", required=True, help="step size: float or c/L")
    p_run.add_argument("--output", default="trace.csv")
    p_run.add_argument("--no-oracle", action="store_true",
                       help="skip the ground-truth oracle (empty error/gap columns)")

    p_cmp = sub.add_parser("compare", help="two+ methods on one instance")
    add_common(p_cmp)
    p_cmp.add_argument("--methods", required=True, help="comma-separated method list")
    p_cmp.add_argument("--gamma", required=True)
    p_cmp.add_argument("--output", default="compare", help="output path prefix")
    p_cmp.add_argument("--no-plot", action="store_true", help="skip PNG rendering")

    p_swp = sub.add_parser("sweep", help="methods x step sizes grid")
    add_common(p_swp)
    p_swp.add_argument("--methods", required=True)
    p_swp.add_argument("--gammas", required=True, help="comma-separated list, e.g. 0.3/L,1/L,40/L")
    p_swp.add_argument("--output", default="sweep", help="output path prefix")
    p_swp.add_argument("--max-points", type=int, default=2000,
                       help="per-curve cap on emitted CSV points")
    p_swp.add_argument("--no-plot", action="store_true")

    p_ver = sub.add_parser("verify", help="randomized contract suites")
    p_ver.add_argument("suite", choices=["identities", "reductions",
                                         "admm-equivalence", "rates", "all"])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return cmd_run(args)
        if args.command == "compare":
            return cmd_compare(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "verify":
            return cmd_verify(args)
        raise UsageError(f"unknown command {args.command}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
