"""Staleness versus performance trade-off curve.

Sweeping the multiplier lam and minimizing chi = quad - sum theta_k eta_k
traces the Lagrangian relaxation of "minimize average age subject to a
control performance budget".  Each lam yields one (J_hat, A_hat) point; the
curve is a lower bound on the attainable average age at each performance
level.  All points share a master seed, so every lam sees the same noise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .model import CostWeights, PlantModel
from .queuing import policy_from_spec
from .riccati import solve_riccati
from .simulator import empirical_metrics, run_many

CURVE_COLUMNS = ["lambda", "A_hat", "se_A", "J_hat", "se_J", "M"]


@dataclass(frozen=True)
class TradeoffPoint:
    lam: float
    A_hat: float
    se_A: float
    J_hat: float
    se_J: float
    M: int


def default_lambda_grid(num: int = 20) -> np.ndarray:
    """Log-spaced multipliers covering the cheap-age to expensive-age range."""
    return np.geomspace(0.005, 5.0, num)


def sweep(
    model: PlantModel,
    weights: CostWeights,
    lambdas,
    policy_spec: str = "greedy",
    M: int = 100,
    master_seed: int = 0,
    workers: int = 1,
) -> list[TradeoffPoint]:
    """One Monte Carlo point per multiplier, in descending lam order.

    The regulator gains do not depend on lam, so the backward recursion runs
    once.  The same master seed is reused at every lam (common random
    numbers), which is what makes adjacent points comparable within a couple
    of standard errors.
    """
    lams = [float(l) for l in lambdas]
    if not lams:
        raise ValueError("need at least one multiplier")
    if any(not np.isfinite(l) or l <= 0.0 for l in lams):
        raise ValueError(f"multipliers must be positive and finite, got {lams}")
    sol = solve_riccati(model, weights)
    points = []
    for lam in sorted(lams, reverse=True):
        w_lam = weights.with_lambda(lam)
        policy = policy_from_spec(policy_spec, model, w_lam, sol)
        records = run_many(model, w_lam, sol, policy, M, master_seed, workers)
        met = empirical_metrics(records, w_lam)
        points.append(
            TradeoffPoint(
                lam=lam, A_hat=met.A_hat, se_A=met.se_A,
                J_hat=met.J_hat, se_J=met.se_J, M=met.M,
            )
        )
    return points


def emit_curve(points: list[TradeoffPoint], path, plot_path=None) -> None:
    """Write the curve as CSV (descending lam), optionally with a figure."""
    if not points:
        raise ValueError("refusing to emit an empty curve")
    pts = sorted(points, key=lambda p: p.lam, reverse=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for p in pts:
            writer.writerow(
                [repr(p.lam), repr(p.A_hat), repr(p.se_A), repr(p.J_hat), repr(p.se_J), p.M]
            )
    if plot_path is not None:
        from .plots import plot_tradeoff_curve

        plot_tradeoff_curve(pts, plot_path)
