"""Closed-loop Monte Carlo simulation under aged information.

Each trajectory draws all noise up front from its own counter-based stream,
then walks the loop: the queuing policy picks an age, the estimator forms the
conditional mean, the regulator acts on it, the plant advances.  Two engines
produce identical records: a plain-float fast path for scalar plants and a
general numpy path.  Trajectory i always consumes the stream spawned from
(master_seed, i), so results do not depend on worker count and different
policies or multipliers see the same noise.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .controller import control_input
from .estimator import ControllerInfo, estimate
from .model import CostWeights, PlantModel, admissible_ages
from .queuing import QueueState, QueuingPolicy
from .riccati import RiccatiSolution


class PolicyContractError(RuntimeError):
    """A queuing policy returned an inadmissible age."""


@dataclass(frozen=True)
class RngStream:
    """Noise stream for one trajectory, derived from the master seed with
    spawn key (trajectory_index,)."""

    master_seed: int
    trajectory_index: int

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.trajectory_index,))
        return np.random.Generator(np.random.PCG64(seq))


@dataclass(frozen=True)
class TrajectoryRecord:
    """One closed-loop rollout.

    x : (N+2, n) states, including the terminal state
    xhat : (N+1, n) estimates the controller acted on
    u : (N+1, m) applied inputs
    age : (N+1,) age of information at each step
    w : (N+1, n) process noise
    err : (N+1, n) estimation errors x_k - xhat_k
    age_sum : sum_k theta_check_k * age_k
    quad_sum : realized quadratic cost including the terminal term
    chi : quad_sum - sum_k theta_k * age_k (the realized trade-off objective)
    """

    x: np.ndarray
    xhat: np.ndarray
    u: np.ndarray
    age: np.ndarray
    w: np.ndarray
    err: np.ndarray
    age_sum: float
    quad_sum: float
    chi: float


def _psd_factor(M: np.ndarray) -> np.ndarray:
    """F with F F' = M for symmetric positive semidefinite M."""
    vals, vecs = np.linalg.eigh(M)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _finish(weights: CostWeights, x, xhat, u, age, w, err) -> TrajectoryRecord:
    xs = x[:-1]
    quad = float(
        np.einsum("ki,kij,kj->", xs, weights.Q[:-1], xs)
        + np.einsum("ki,kij,kj->", u, weights.R, u)
        + x[-1] @ (weights.Q[-1] @ x[-1])
    )
    agef = age.astype(float)
    age_sum = float(weights.theta_check @ agef)
    chi = quad - float(weights.theta @ agef)
    for arr in (x, xhat, u, age, w, err):
        arr.flags.writeable = False
    return TrajectoryRecord(
        x=x, xhat=xhat, u=u, age=age, w=w, err=err,
        age_sum=age_sum, quad_sum=quad, chi=chi,
    )


def _fault(policy: QueuingPolicy, k: int, prev: int, eta) -> PolicyContractError:
    return PolicyContractError(
        f"policy {policy.name!r} returned age {eta!r} at step {k}; "
        f"admissible ages are 0..{prev + 1 if k > 0 else 0}"
    )


def _run_general(model, weights, sol, policy, z) -> TrajectoryRecord:
    A, B = model.A, model.B
    n, m = model.state_dim, model.input_dim
    N = weights.horizon
    F0 = _psd_factor(model.M0)
    L = np.linalg.cholesky(model.W)

    x = np.empty((N + 2, n))
    xhat = np.empty((N + 1, n))
    u = np.empty((N + 1, m))
    age = np.empty(N + 1, dtype=np.int64)
    err = np.empty((N + 1, n))
    w = z[1:] @ L.T
    x[0] = model.m0 + F0 @ z[0]

    prev = 0
    for k in range(N + 1):
        window = w[k - 1 :: -1] if k > 0 else w[:0]
        eta = policy.choose(QueueState(prev, window), k)
        if not isinstance(eta, (int, np.integer)) or eta not in admissible_ages(prev, k):
            raise _fault(policy, k, prev, eta)
        eta = int(eta)
        info = ControllerInfo(x[k - eta], eta, u[k - eta : k][::-1])
        xhat[k] = estimate(info, A, B)
        err[k] = x[k] - xhat[k]
        u[k] = control_input(sol, k, xhat[k])
        x[k + 1] = A @ x[k] + B @ u[k] + w[k]
        age[k] = eta
        prev = eta
    return _finish(weights, x, xhat, u, age, w, err)


def _run_scalar(model, weights, sol, policy, z) -> TrajectoryRecord:
    # Same arithmetic as _run_general, inlined on plain floats.  Term order
    # inside each expression mirrors the general engine so the two agree to
    # the last bit on scalar plants.
    N = weights.horizon
    a = float(model.A[0, 0])
    b = float(model.B[0, 0])
    f0 = float(_psd_factor(model.M0)[0, 0])
    lw = float(np.linalg.cholesky(model.W)[0, 0])
    Ks = sol.K[:, 0, 0].tolist()
    zf = z[:, 0].tolist()

    w = [lw * zv for zv in zf[1:]]
    xs = [float(model.m0[0]) + f0 * zf[0]]
    xh = [0.0] * (N + 1)
    us = [0.0] * (N + 1)
    es = [0.0] * (N + 1)
    ages = [0] * (N + 1)
    choose = policy.choose_scalar

    prev = 0
    for k in range(N + 1):
        eta = choose(k, prev, w)
        if not isinstance(eta, int) or eta < 0 or eta > (prev + 1 if k > 0 else 0):
            raise _fault(policy, k, prev, eta)
        xk = xs[k]
        if eta == 0:
            xhat = 0.0 + xk
        else:
            acc = 0.0
            p = 1.0
            for t in range(1, eta + 1):
                acc = acc + p * (b * us[k - t])
                p = a * p
            xhat = acc + p * xs[k - eta]
        uk = -(Ks[k] * xhat)
        xs.append((a * xk) + (b * uk) + w[k])
        xh[k] = xhat
        us[k] = uk
        es[k] = xk - xhat
        ages[k] = eta
        prev = eta

    return _finish(
        weights,
        np.asarray(xs).reshape(-1, 1),
        np.asarray(xh).reshape(-1, 1),
        np.asarray(us).reshape(-1, 1),
        np.asarray(ages, dtype=np.int64),
        np.asarray(w).reshape(-1, 1),
        np.asarray(es).reshape(-1, 1),
    )


def run_trajectory(
    model: PlantModel,
    weights: CostWeights,
    sol: RiccatiSolution,
    policy: QueuingPolicy,
    rng: RngStream,
) -> TrajectoryRecord:
    """Roll out one closed-loop trajectory under the given queuing policy."""
    gen = rng.generator()
    N = weights.horizon
    # one block per trajectory: row 0 seeds x_0, rows 1..N+1 the process noise
    z = gen.standard_normal((N + 2, model.state_dim))
    if model.state_dim == 1 and model.input_dim == 1:
        return _run_scalar(model, weights, sol, policy, z)
    return _run_general(model, weights, sol, policy, z)


def _run_range(model, weights, sol, policy, master_seed, lo, hi):
    return [
        run_trajectory(model, weights, sol, policy, RngStream(master_seed, i))
        for i in range(lo, hi)
    ]


def run_many(
    model: PlantModel,
    weights: CostWeights,
    sol: RiccatiSolution,
    policy: QueuingPolicy,
    M: int,
    master_seed: int,
    workers: int = 1,
) -> list[TrajectoryRecord]:
    """Run M trajectories, optionally across worker processes.

    Worker j handles a contiguous index block and results are concatenated in
    index order, so the returned list is identical for any worker count.
    """
    if M < 1:
        raise ValueError(f"need at least one trajectory, got M = {M}")
    if workers < 1:
        raise ValueError(f"workers must be positive, got {workers}")
    if workers == 1 or M == 1:
        return _run_range(model, weights, sol, policy, master_seed, 0, M)
    bounds = np.linspace(0, M, min(workers, M) + 1).astype(int)
    out: list[TrajectoryRecord] = []
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [
            ex.submit(_run_range, model, weights, sol, policy, master_seed, lo, hi)
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for fut in futures:
            out.extend(fut.result())
    return out


@dataclass(frozen=True)
class EmpiricalMetrics:
    """Across-trajectory means and standard errors.

    A_hat : mean of age_sum / N (time-average priced age)
    J_hat : mean of quad_sum / N (time-average control cost)
    chi_hat : mean realized trade-off objective (not divided by N)
    """

    A_hat: float
    se_A: float
    J_hat: float
    se_J: float
    chi_hat: float
    se_chi: float
    M: int


def empirical_metrics(records: list[TrajectoryRecord], weights: CostWeights) -> EmpiricalMetrics:
    if not records:
        raise ValueError("need at least one trajectory record")
    N = weights.horizon
    if N < 1:
        raise ValueError("time-average metrics need horizon N >= 1")
    M = len(records)
    A = np.array([r.age_sum for r in records]) / N
    J = np.array([r.quad_sum for r in records]) / N
    C = np.array([r.chi for r in records])

    def se(v):
        # identical samples have exactly zero spread; naive two-pass std
        # leaves an ulp of roundoff there
        if M < 2 or np.all(v == v[0]):
            return 0.0
        return float(np.std(v, ddof=1) / math.sqrt(M))

    return EmpiricalMetrics(
        A_hat=float(A.mean()), se_A=se(A),
        J_hat=float(J.mean()), se_J=se(J),
        chi_hat=float(C.mean()), se_chi=se(C),
        M=M,
    )


def lemma1_identity_check(
    record: TrajectoryRecord,
    sol: RiccatiSolution,
    weights: CostWeights,
    model: PlantModel,
) -> float:
    """Absolute defect of the pathwise cost decomposition.

    For every noise realization the realized quadratic cost equals

        x_0'S_0 x_0 + sum_k [ w_k'S_{k+1}w_k + 2 (A x_k + B u_k)'S_{k+1} w_k
                              + (u_k + K_k x_k)'(B'S_{k+1}B + R_k)(u_k + K_k x_k) ]

    which is what makes the queuing stage cost -theta_k eta_k + e'Gamma_k e
    the right thing to optimize.  Returns |left - right|, both sides
    recomputed from the recorded arrays; the plant matrices supply A and B
    for the cross and gain terms.
    """
    A, B = model.A, model.B
    N = weights.horizon
    x, u, w = record.x, record.u, record.w

    left = float(x[-1] @ (weights.Q[-1] @ x[-1]))
    for k in range(N + 1):
        left += float(x[k] @ (weights.Q[k] @ x[k]) + u[k] @ (weights.R[k] @ u[k]))

    right = float(x[0] @ (sol.S[0] @ x[0]))
    for k in range(N + 1):
        S1 = sol.S[k + 1]
        drift = A @ x[k] + B @ u[k]
        G = weights.R[k] + B.T @ S1 @ B
        v = u[k] + sol.K[k] @ x[k]
        right += float(
            w[k] @ (S1 @ w[k]) + 2.0 * (drift @ (S1 @ w[k])) + v @ (G @ v)
        )
    return abs(left - right)


def dynamics_defect(model: PlantModel, record: TrajectoryRecord) -> float:
    """Largest relative defect of the recorded plant update and error rows."""
    A, B = model.A, model.B
    x, u, w, err, xhat = record.x, record.u, record.w, record.err, record.xhat
    pred = x[:-1] @ A.T + u @ B.T + w
    scale = max(1.0, float(np.abs(x).max()))
    d1 = float(np.abs(x[1:] - pred).max()) / scale
    d2 = float(np.abs(err - (x[:-1] - xhat)).max()) / scale
    return max(d1, d2)
