"""Queue-side policies: which age of information to run the controller at.

At step k the queue may deliver a sample of any age between 0 (transmit now)
and eta_{k-1} + 1 (keep waiting).  Delivering age eta leaves the controller
with estimation error e(eta) = sum_{t=1..eta} A^{t-1} w_{k-t}, and the
per-step queuing cost is

    -theta_k * eta + e(eta)' Gamma_k e(eta)

where theta_k = theta_check_k / lam prices the age and Gamma_k comes from the
regulator recursion.  The greedy policy minimizes this one step at a time;
the exact oracle minimizes the expected total by backward induction on a
discrete noise grid.  Ties are always resolved toward the largest age, which
matches preferring not to transmit, or to reuse what is already queued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CostWeights, PlantModel
from .riccati import RiccatiSolution, gamma_at, solve_riccati


@dataclass(frozen=True)
class QueueState:
    """Queue-side view at one step: the previous age and the realized past
    noise, most recent first (row t-1 holds w_{k-t})."""

    prev_age: int
    noise_window: np.ndarray

    def __post_init__(self):
        if self.prev_age < 0:
            raise ValueError(f"prev_age must be nonnegative, got {self.prev_age}")


class QueuingPolicy:
    """Interface: map (queue state, step) to an admissible age.

    Implementations must return 0 at k = 0 and otherwise a value in
    [0, prev_age + 1].  choose_scalar is a fast path for scalar plants; it
    receives the noise history indexed by time (w_hist[t] = w_t) and must only
    read entries with t < k.
    """

    name = "policy"

    def choose(self, state: QueueState, k: int) -> int:
        raise NotImplementedError

    def choose_scalar(self, k: int, prev_age: int, w_hist: list) -> int:
        window = np.asarray(w_hist[k - 1 :: -1] if k > 0 else [], dtype=float)
        return self.choose(QueueState(prev_age, window.reshape(-1, 1)), k)


def _greedy_scan(state: QueueState, k: int, sol: RiccatiSolution, theta, A, cap: int) -> int:
    window = np.asarray(state.noise_window, dtype=float)
    if len(window) < cap:
        raise ValueError(
            f"noise window has {len(window)} entries, need {cap} to scan all candidate ages"
        )
    Gamma = gamma_at(sol, k)
    th = float(theta[k])
    n = A.shape[0]
    e = np.zeros(n)
    P = np.eye(n)
    best = 0.0
    best_age = 0
    for age in range(1, cap + 1):
        e = e + P @ window[age - 1]
        P = A @ P
        cost = e @ (Gamma @ e) - th * age
        if cost <= best:
            best = cost
            best_age = age
    return best_age


def zero_wait(state: QueueState, k: int) -> int:
    """Always transmit: age 0 at every step."""
    return 0


def greedy_choose(state: QueueState, k: int, sol: RiccatiSolution, theta, A) -> int:
    """One-step-optimal age in [0, prev_age + 1], largest age on ties."""
    if k == 0:
        return 0
    return _greedy_scan(state, k, sol, theta, A, state.prev_age + 1)


def greedy_bounded(
    state: QueueState, k: int, sol: RiccatiSolution, theta, A, kbar: int
) -> int:
    """Greedy choice with the candidate set capped at kbar (bounded memory).

    kbar = 0 leaves only the age-0 candidate, so the choice degenerates to
    zero_wait."""
    if kbar < 0:
        raise ValueError(f"kbar must be a nonnegative integer, got {kbar}")
    if k == 0:
        return 0
    return _greedy_scan(state, k, sol, theta, A, min(state.prev_age + 1, kbar))


class ZeroWaitPolicy(QueuingPolicy):
    name = "zero-wait"

    def choose(self, state: QueueState, k: int) -> int:
        return 0

    def choose_scalar(self, k: int, prev_age: int, w_hist: list) -> int:
        return 0


class GreedyPolicy(QueuingPolicy):
    """Greedy minimization of the per-step queuing cost, optionally with a
    bounded candidate window."""

    def __init__(self, model: PlantModel, weights: CostWeights, sol: RiccatiSolution,
                 memory: int | None = None):
        if memory is not None and memory < 0:
            raise ValueError(f"memory bound must be a nonnegative integer, got {memory}")
        self.sol = sol
        self.theta = weights.theta
        self.A = model.A
        self.memory = memory
        self.name = "greedy" if memory is None else f"greedy-bounded:{memory}"
        # flat caches for the scalar fast path
        if model.state_dim == 1 and model.input_dim == 1:
            self._a = float(model.A[0, 0])
            self._gam = sol.Gamma[:, 0, 0].tolist()
            self._th = self.theta.tolist()
        else:
            self._a = None

    def choose(self, state: QueueState, k: int) -> int:
        if self.memory is None:
            return greedy_choose(state, k, self.sol, self.theta, self.A)
        return greedy_bounded(state, k, self.sol, self.theta, self.A, self.memory)

    def choose_scalar(self, k: int, prev_age: int, w_hist: list) -> int:
        if self._a is None:
            return super().choose_scalar(k, prev_age, w_hist)
        if k == 0:
            return 0
        cap = prev_age + 1
        if self.memory is not None and cap > self.memory:
            cap = self.memory
        a = self._a
        th = self._th[k]
        gam = self._gam[k]
        e = 0.0
        p = 1.0
        best = 0.0
        best_age = 0
        for age in range(1, cap + 1):
            e = e + p * w_hist[k - age]
            p = a * p
            cost = (gam * e) * e - th * age
            if cost <= best:
                best = cost
                best_age = age
        return best_age


@dataclass(frozen=True)
class NoiseGrid:
    """Finite noise law for the exact oracle: atoms with probabilities
    summing to one.  Scalar plants only."""

    atoms: tuple
    probs: tuple

    def __post_init__(self):
        atoms = tuple(float(a) for a in self.atoms)
        probs = tuple(float(p) for p in self.probs)
        if len(atoms) == 0 or len(atoms) != len(probs):
            raise ValueError("grid needs matching, nonempty atoms and probs")
        if len(atoms) > 5:
            raise ValueError(f"grid supports at most 5 atoms, got {len(atoms)}")
        if any(p < 0.0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"probs must be nonnegative and sum to 1, got {probs}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def symmetric_two_point(cls, variance: float) -> "NoiseGrid":
        """Two equiprobable atoms at +-sqrt(variance): matches the Gaussian
        mean and variance."""
        s = math.sqrt(variance)
        return cls((-s, s), (0.5, 0.5))


class StateSpaceError(ValueError):
    """Oracle state space would exceed the configured cap."""


def dp_state_count(N: int, n_atoms: int) -> int:
    """Number of (step, prev_age, noise path) states the oracle tabulates."""
    return 1 + sum(k * n_atoms**k for k in range(1, N + 1))


class DpOraclePolicy(QueuingPolicy):
    """Table lookup into the exact backward induction.

    The table is keyed by (k, prev_age, path) where path is the tuple of
    grid-atom indices for (w_{k-1}, ..., w_0).  When driven by off-grid noise
    (for instance Gaussian draws), each realized w is mapped to the nearest
    atom before lookup.
    """

    name = "dp-oracle"

    def __init__(self, table: dict, grid: NoiseGrid, horizon: int, expected_cost: float,
                 weights: CostWeights | None = None, sol: RiccatiSolution | None = None):
        self.table = table
        self.grid = grid
        self.horizon = horizon
        self.expected_cost = expected_cost
        # the (possibly horizon-truncated) problem the table was built for,
        # so callers can simulate exactly that problem
        self.weights = weights
        self.sol = sol
        self._atoms = list(grid.atoms)

    def _atom_index(self, w: float) -> int:
        atoms = self._atoms
        best = 0
        best_d = abs(w - atoms[0])
        for j in range(1, len(atoms)):
            d = abs(w - atoms[j])
            if d < best_d:
                best_d = d
                best = j
        return best

    def choose(self, state: QueueState, k: int) -> int:
        if k == 0:
            return 0
        window = np.asarray(state.noise_window, dtype=float).reshape(len(state.noise_window), -1)
        if len(window) < k:
            raise ValueError(f"noise window has {len(window)} entries, need {k}")
        path = tuple(self._atom_index(float(window[t, 0])) for t in range(k))
        return self.table[(k, state.prev_age, path)]

    def choose_scalar(self, k: int, prev_age: int, w_hist: list) -> int:
        if k == 0:
            return 0
        path = tuple(self._atom_index(w_hist[t]) for t in range(k - 1, -1, -1))
        return self.table[(k, prev_age, path)]


def dp_oracle_build(
    model: PlantModel,
    weights: CostWeights,
    sol: RiccatiSolution,
    noise_grid: NoiseGrid | None = None,
    N_small: int | None = None,
    max_states: int = 1_000_000,
) -> DpOraclePolicy:
    """Tabulate the exact age policy by backward induction.

    Works for scalar plants over short horizons (N <= 8); the noise is
    restricted to a finite grid (default: symmetric two-point matching the
    plant noise variance).  When N_small is given and is shorter than the
    horizon of `weights`, the problem is truncated to N_small steps (keeping
    the terminal weight) and the regulator recursion is re-solved for the
    truncated problem; the returned policy carries the effective weights and
    solution.  The value function is memoized over (step, previous age,
    realized noise path); if the projected table size exceeds max_states the
    build refuses with a size report.
    """
    if model.state_dim != 1 or model.input_dim != 1:
        raise ValueError(
            f"the exact oracle supports scalar plants only, got state dimension "
            f"{model.state_dim}, input dimension {model.input_dim}"
        )
    if N_small is not None and N_small != weights.horizon:
        if N_small > weights.horizon:
            raise ValueError(
                f"N_small = {N_small} exceeds the weights horizon {weights.horizon}"
            )
        weights = weights.truncated(N_small)
        sol = solve_riccati(model, weights)
    N = weights.horizon
    if N > 8:
        raise ValueError(f"the exact oracle supports horizons N <= 8, got N = {N}")
    grid = noise_grid
    if grid is None:
        grid = NoiseGrid.symmetric_two_point(float(model.W[0, 0]))

    count = dp_state_count(N, len(grid.atoms))
    if count > max_states:
        raise StateSpaceError(
            f"oracle would tabulate {count} states "
            f"(horizon {N}, {len(grid.atoms)} atoms), cap is {max_states}; "
            "shorten the horizon, shrink the grid, or raise max_states"
        )

    a = float(model.A[0, 0])
    th = weights.theta.tolist()
    gam = sol.Gamma[:, 0, 0].tolist()
    atoms = list(grid.atoms)
    probs = list(grid.probs)
    n_atoms = len(atoms)

    memo: dict = {}
    table: dict = {}

    def value(k: int, prev_age: int, path: tuple) -> float:
        if k > N:
            return 0.0
        key = (k, prev_age, path)
        hit = memo.get(key)
        if hit is not None:
            return hit
        cap = prev_age + 1 if k > 0 else 0
        best = None
        best_age = 0
        e = 0.0
        p = 1.0
        for age in range(cap + 1):
            if age > 0:
                e = e + p * atoms[path[age - 1]]
                p = a * p
            cost = (gam[k] * e) * e - th[k] * age
            if k < N:
                cost += sum(
                    probs[j] * value(k + 1, age, (j,) + path) for j in range(n_atoms)
                )
            if best is None or cost <= best:
                best = cost
                best_age = age
        memo[key] = best
        table[key] = best_age
        return best

    expected = value(0, 0, ())
    return DpOraclePolicy(table=table, grid=grid, horizon=N, expected_cost=expected,
                          weights=weights, sol=sol)


def policy_from_spec(
    spec: str,
    model: PlantModel,
    weights: CostWeights,
    sol: RiccatiSolution,
    grid: NoiseGrid | None = None,
    max_states: int = 1_000_000,
) -> QueuingPolicy:
    """Build a policy from its textual name.

    Recognized forms: "zero-wait", "greedy", "greedy-bounded:<kbar>",
    "dp-oracle".
    """
    spec = spec.strip()
    if spec == "zero-wait":
        return ZeroWaitPolicy()
    if spec == "greedy":
        return GreedyPolicy(model, weights, sol)
    if spec.startswith("greedy-bounded:"):
        tail = spec.split(":", 1)[1]
        try:
            kbar = int(tail)
        except ValueError:
            raise ValueError(f"bad memory bound in policy spec {spec!r}") from None
        return GreedyPolicy(model, weights, sol, memory=kbar)
    if spec == "dp-oracle":
        return dp_oracle_build(model, weights, sol, noise_grid=grid, max_states=max_states)
    raise ValueError(
        f"unknown policy {spec!r}; expected zero-wait, greedy, "
        "greedy-bounded:<kbar>, or dp-oracle"
    )
