"""Command line front end.

Subcommands:
    riccati    solve the backward recursion and dump S, K, Gamma as CSV
    simulate   run Monte Carlo trajectories under one policy
    tradeoff   sweep the multiplier and emit the age/performance curve
    verify     run the built-in consistency checks on fresh trajectories

Exit codes: 0 on success, 1 when a verify check fails, 2 for usage,
configuration, or validation problems.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from .config import (
    ConfigError,
    RunOptions,
    apply_overrides,
    build_plant,
    build_run_options,
    build_weights,
    load_config,
)
from .estimator import estimation_error
from .model import CostWeights, PlantModel, validate_model
from .queuing import policy_from_spec
from .riccati import RiccatiSolution, riccati_residual, solve_riccati
from .simulator import (
    dynamics_defect,
    empirical_metrics,
    lemma1_identity_check,
    run_many,
)
from .tradeoff import default_lambda_grid, emit_curve, sweep


def _fmt(v) -> str:
    return repr(float(v))


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="YAML experiment file")
    sub.add_argument(
        "--set", action="append", default=[], metavar="PATH=VALUE",
        help="override a config entry, e.g. --set weights.lambda=0.05",
    )
    sub.add_argument("--policy", help="zero-wait | greedy | greedy-bounded:<kbar> | dp-oracle")
    sub.add_argument("--lambda", dest="lam", type=float, help="trade-off multiplier")
    sub.add_argument("--trajectories", type=int, help="number of Monte Carlo runs")
    sub.add_argument("--seed", type=int, help="master seed")
    sub.add_argument("--workers", type=int, help="worker processes")
    sub.add_argument("--out", help="output CSV path")


def _load(args) -> tuple[PlantModel, CostWeights, RunOptions]:
    cfg = load_config(args.config)
    apply_overrides(cfg, args.set)
    plant = build_plant(cfg)
    weights = build_weights(cfg, plant)
    opts = build_run_options(cfg)
    if args.policy is not None:
        opts.policy = args.policy
    if args.lam is not None:
        try:
            weights = weights.with_lambda(args.lam)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if args.trajectories is not None:
        if args.trajectories < 1:
            raise ConfigError(f"--trajectories must be positive, got {args.trajectories}")
        opts.trajectories = args.trajectories
    if args.seed is not None:
        opts.seed = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError(f"--workers must be positive, got {args.workers}")
        opts.workers = args.workers
    if args.out is not None:
        opts.out = args.out
    if getattr(args, "plot", None) is not None:
        opts.plot = args.plot
    if getattr(args, "long_format", None) is False:
        opts.long_format = False

    violations = validate_model(plant, weights)
    if violations:
        raise ConfigError(
            "model failed validation:\n  " + "\n  ".join(violations)
        )
    return plant, weights, opts


def _out_path(opts: RunOptions, default: str) -> str:
    path = opts.out or default
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _plot_path(opts: RunOptions, out: str, suffix: str = "") -> str:
    if isinstance(opts.plot, str) and opts.plot not in ("", "auto"):
        base, ext = os.path.splitext(opts.plot)
        return f"{base}{suffix}{ext}" if suffix else opts.plot
    base, _ = os.path.splitext(out)
    return f"{base}{suffix}.svg"


def cmd_riccati(args) -> int:
    plant, weights, opts = _load(args)
    sol = solve_riccati(plant, weights)
    n, m = plant.state_dim, plant.input_dim
    N = weights.horizon
    out = _out_path(opts, "riccati.csv")
    header = (
        ["k"]
        + [f"S_{i}_{j}" for i in range(n) for j in range(n)]
        + [f"K_{i}_{j}" for i in range(m) for j in range(n)]
        + [f"Gamma_{i}_{j}" for i in range(n) for j in range(n)]
    )
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(N + 2):
            row = [k] + [_fmt(v) for v in sol.S[k].ravel()]
            if k <= N:
                row += [_fmt(v) for v in sol.K[k].ravel()]
                row += [_fmt(v) for v in sol.Gamma[k].ravel()]
            else:
                row += [""] * (m * n + n * n)
            writer.writerow(row)
    print(f"wrote {out}: {N + 2} rows (N={N}, n={n}, m={m})")
    return 0


def _trajectory_header(n: int, m: int) -> list:
    return (
        ["k"]
        + [f"x_{i}" for i in range(n)]
        + [f"xhat_{i}" for i in range(n)]
        + [f"u_{i}" for i in range(m)]
        + ["eta"]
        + [f"w_{i}" for i in range(n)]
        + [f"e_{i}" for i in range(n)]
    )


def _trajectory_rows(record, n: int, m: int):
    N1 = len(record.u)
    for k in range(N1):
        yield (
            [k]
            + [_fmt(v) for v in record.x[k]]
            + [_fmt(v) for v in record.xhat[k]]
            + [_fmt(v) for v in record.u[k]]
            + [int(record.age[k])]
            + [_fmt(v) for v in record.w[k]]
            + [_fmt(v) for v in record.err[k]]
        )
    # terminal state only; no estimate, input, age, or noise at k = N+1
    yield [N1] + [_fmt(v) for v in record.x[N1]] + [""] * (2 * n + m + 1 + n)


def write_trajectories(path: str, records, n: int, m: int, long_format: bool) -> list:
    """Write records as one long CSV with a traj column, or one file per
    trajectory.  Returns the paths written."""
    if long_format:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["traj"] + _trajectory_header(n, m))
            for i, rec in enumerate(records):
                for row in _trajectory_rows(rec, n, m):
                    writer.writerow([i] + row)
        return [path]
    base, ext = os.path.splitext(path)
    paths = []
    for i, rec in enumerate(records):
        p = f"{base}_{i:04d}{ext or '.csv'}"
        with open(p, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_trajectory_header(n, m))
            for row in _trajectory_rows(rec, n, m):
                writer.writerow(row)
        paths.append(p)
    return paths


def cmd_simulate(args) -> int:
    plant, weights, opts = _load(args)
    sol = solve_riccati(plant, weights)
    policy = policy_from_spec(opts.policy, plant, weights, sol)
    records = run_many(
        plant, weights, sol, policy, opts.trajectories, opts.seed, opts.workers
    )
    out = _out_path(opts, "trajectories.csv")
    paths = write_trajectories(out, records, plant.state_dim, plant.input_dim, opts.long_format)
    met = empirical_metrics(records, weights)
    print(
        f"policy={policy.name} "
        f"A_hat={_fmt(met.A_hat)} se_A={_fmt(met.se_A)} "
        f"J_hat={_fmt(met.J_hat)} se_J={_fmt(met.se_J)} "
        f"chi_hat={_fmt(met.chi_hat)} se_chi={_fmt(met.se_chi)} M={met.M}"
    )
    print(f"wrote {len(paths)} file(s), first {paths[0]}")
    if opts.plot is not None and opts.plot is not False:
        from .plots import plot_age_history, plot_state_history

        age_path = _plot_path(opts, out, "_age")
        state_path = _plot_path(opts, out, "_state")
        plot_age_history(records[0], age_path)
        plot_state_history(records[0], state_path)
        print(f"wrote {age_path} and {state_path}")
    return 0


def cmd_tradeoff(args) -> int:
    plant, weights, opts = _load(args)
    grid = opts.lambda_grid or default_lambda_grid().tolist()
    points = sweep(
        plant, weights, grid,
        policy_spec=opts.policy,
        M=opts.trajectories,
        master_seed=opts.seed,
        workers=opts.workers,
    )
    out = _out_path(opts, "tradeoff.csv")
    plot_path = None
    if opts.plot is not None and opts.plot is not False:
        plot_path = _plot_path(opts, out)
    emit_curve(points, out, plot_path)
    print(f"wrote {out}: {len(points)} points (policy={opts.policy}, M={opts.trajectories})")
    if plot_path:
        print(f"wrote {plot_path}")
    return 0


def _verify_checks(plant, weights, sol, opts, corrupt: bool):
    """Yield (ok, label, detail) triples for every built-in check."""
    from .queuing import dp_oracle_build

    n = plant.state_dim
    M = opts.trajectories
    policies = ["zero-wait", "greedy", f"greedy-bounded:{opts.kbar}"]
    if opts.policy not in policies and opts.policy != "dp-oracle":
        policies.append(opts.policy)

    runs = {}
    for spec in policies:
        policy = policy_from_spec(spec, plant, weights, sol)
        runs[spec] = run_many(plant, weights, sol, policy, M, opts.seed, opts.workers)

    # exact oracle on a shortened horizon companion when the plant is scalar
    if n == 1 and plant.input_dim == 1:
        oracle = dp_oracle_build(plant, weights, sol,
                                 N_small=min(weights.horizon, 6))
        w_dp, sol_dp = oracle.weights, oracle.sol
        runs_dp = run_many(plant, w_dp, sol_dp, oracle, M, opts.seed, opts.workers)
    else:
        w_dp = sol_dp = runs_dp = None

    if corrupt:
        rec = runs[policies[0]][0]
        bad_u = rec.u.copy()
        bad_u[min(3, len(bad_u) - 1)] += 1.0
        runs[policies[0]][0] = dataclasses.replace(rec, u=bad_u)

    def check_records(label, model, wts, solution, records):
        worst_est = 0.0
        worst_dyn = 0.0
        worst_lem = 0.0
        ages_ok = True
        for rec in records:
            prev = 0
            for k, eta in enumerate(rec.age):
                hi = prev + 1 if k > 0 else 0
                if not 0 <= eta <= hi:
                    ages_ok = False
                prev = int(eta)
            scale = max(1.0, float(np.abs(rec.x).max()))
            for k in range(wts.horizon + 1):
                eta = int(rec.age[k])
                window = rec.w[k - 1 :: -1] if k > 0 else rec.w[:0]
                e_noise = estimation_error(window, model.A, eta)
                worst_est = max(
                    worst_est, float(np.abs(rec.err[k] - e_noise).max()) / scale
                )
            worst_dyn = max(worst_dyn, dynamics_defect(model, rec))
            lem = lemma1_identity_check(rec, solution, wts, model)
            worst_lem = max(worst_lem, lem / max(1.0, abs(rec.quad_sum)))
        yield ages_ok, f"age-admissibility[{label}]", "all recorded ages admissible" if ages_ok else "inadmissible age found"
        yield worst_dyn <= 1e-12, f"dynamics-replay[{label}]", f"max rel defect {worst_dyn:.3g} (tol 1e-12)"
        yield worst_est <= 1e-10, f"estimator-consistency[{label}]", f"max rel defect {worst_est:.3g} (tol 1e-10)"
        yield worst_lem <= 1e-7, f"cost-identity[{label}]", f"max rel residual {worst_lem:.3g} (tol 1e-7)"

    resid = riccati_residual(plant, weights, sol)
    yield resid <= 1e-8, "riccati-residual", f"max rel defect {resid:.3g} (tol 1e-8)"

    for spec in policies:
        yield from check_records(spec, plant, weights, sol, runs[spec])
    if runs_dp is not None:
        yield from check_records("dp-oracle", plant, w_dp, sol_dp, runs_dp)

    # paired comparison against always transmitting, common random numbers
    base = runs["zero-wait"]
    for spec in policies:
        if spec == "zero-wait":
            yield True, "dominance[zero-wait]", "trivially equal to itself"
            continue
        diffs = np.array(
            [r.chi - b.chi for r, b in zip(runs[spec], base)]
        )
        mean_d = float(diffs.mean())
        if len(diffs) > 1:
            se_d = float(np.std(diffs, ddof=1) / np.sqrt(len(diffs)))
        else:
            se_d = 0.0
        ok = mean_d <= 2.0 * se_d
        yield ok, f"dominance[{spec}]", (
            f"mean chi difference vs zero-wait {mean_d:.6g} (paired se {se_d:.3g})"
        )


def cmd_verify(args) -> int:
    plant, weights, opts = _load(args)
    sol = solve_riccati(plant, weights)
    failures = 0
    total = 0
    for ok, label, detail in _verify_checks(plant, weights, sol, opts, args.corrupt_record):
        total += 1
        print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
        if not ok:
            failures += 1
    if failures:
        print(f"verify: {failures} of {total} checks failed")
        return 1
    print(f"verify: all {total} checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agelq",
        description="Linear-quadratic control with stale measurements",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("riccati", help="dump the backward recursion")
    _add_common(p)
    p.set_defaults(func=cmd_riccati)

    p = subs.add_parser("simulate", help="run Monte Carlo trajectories")
    _add_common(p)
    p.add_argument(
        "--plot", nargs="?", const="auto",
        help="also render figures (optional path stem)",
    )
    p.add_argument(
        "--split-files", dest="long_format", action="store_false", default=None,
        help="one CSV per trajectory instead of a single long file",
    )
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("tradeoff", help="sweep the multiplier")
    _add_common(p)
    p.add_argument(
        "--plot", nargs="?", const="auto",
        help="also render the curve figure (optional path)",
    )
    p.set_defaults(func=cmd_tradeoff)

    p = subs.add_parser("verify", help="internal consistency checks")
    _add_common(p)
    p.add_argument("--corrupt-record", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
