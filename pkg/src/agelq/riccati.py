"""Backward value recursion for the finite-horizon quadratic regulator.

With S_{N+1} equal to the terminal weight, the recursion for k = N..0 is

    G_k = R_k + B' S_{k+1} B
    K_k = G_k^{-1} B' S_{k+1} A
    S_k = Q_k + A' S_{k+1} A - K_k' G_k K_k
    Gamma_k = K_k' G_k K_k

Gamma_k is the weight that prices estimation error in the stage cost of the
queuing problem.  G_k is positive definite whenever R_k is, so the solve is
done through a Cholesky factorization; S is symmetrized at every step to keep
roundoff from accumulating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import CostWeights, PlantModel

RICCATI_TOL = 1e-8


@dataclass(frozen=True)
class RiccatiSolution:
    """Value matrices S (N+2, n, n), gains K (N+1, m, n), and error weights
    Gamma (N+1, n, n) for one horizon."""

    S: np.ndarray
    K: np.ndarray
    Gamma: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.K) - 1


def solve_riccati(model: PlantModel, weights: CostWeights) -> RiccatiSolution:
    """Run the backward recursion over the full horizon.

    Raises np.linalg.LinAlgError if some R_k + B'S_{k+1}B is not positive
    definite; that cannot happen for admissible weights, so it signals that
    validation was bypassed upstream.
    """
    A, B = model.A, model.B
    n, m = model.state_dim, model.input_dim
    N = weights.horizon

    S = np.empty((N + 2, n, n))
    K = np.empty((N + 1, m, n))
    Gamma = np.empty((N + 1, n, n))

    S[N + 1] = 0.5 * (weights.Q[N + 1] + weights.Q[N + 1].T)
    for k in range(N, -1, -1):
        SB = S[k + 1] @ B
        G = weights.R[k] + B.T @ SB
        try:
            cf = cho_factor(0.5 * (G + G.T), lower=True)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"R + B'SB is not positive definite at step {k}; "
                "the weights violate the standing assumptions"
            ) from exc
        K[k] = cho_solve(cf, SB.T @ A)
        GK = G @ K[k]
        Gamma[k] = K[k].T @ GK
        Gamma[k] = 0.5 * (Gamma[k] + Gamma[k].T)
        Sk = weights.Q[k] + A.T @ S[k + 1] @ A - K[k].T @ GK
        S[k] = 0.5 * (Sk + Sk.T)

    S.flags.writeable = False
    K.flags.writeable = False
    Gamma.flags.writeable = False
    return RiccatiSolution(S=S, K=K, Gamma=Gamma)


def gamma_at(sol: RiccatiSolution, k: int) -> np.ndarray:
    """Error weight Gamma_k, defined for 0 <= k <= N."""
    if not 0 <= k <= sol.horizon:
        raise IndexError(
            f"Gamma is defined for steps 0..{sol.horizon}, got {k}"
        )
    return sol.Gamma[k]


def riccati_residual(model: PlantModel, weights: CostWeights, sol: RiccatiSolution) -> float:
    """Largest relative defect of the recursion over all steps.

    Recomputes each S_k from S_{k+1} with an independent expression (explicit
    inverse instead of the Cholesky solve) and returns
    max_k ||S_k - recomputed|| / max(1, ||S_k||) in the Frobenius norm.
    """
    A, B = model.A, model.B
    worst = 0.0
    for k in range(sol.horizon, -1, -1):
        S1 = sol.S[k + 1]
        G = weights.R[k] + B.T @ S1 @ B
        Kk = np.linalg.inv(G) @ (B.T @ S1 @ A)
        Sk = weights.Q[k] + A.T @ S1 @ A - Kk.T @ G @ Kk
        defect = np.linalg.norm(sol.S[k] - 0.5 * (Sk + Sk.T)) / max(
            1.0, np.linalg.norm(sol.S[k])
        )
        worst = max(worst, defect)
    return worst
