"""Plant and cost definitions, plus validation of the standing assumptions.

The plant is the linear stochastic difference equation

    x_{k+1} = A x_k + B u_k + w_k,    w_k ~ N(0, W) iid,
    x_0 ~ N(m0, M0),

controlled over a finite horizon k = 0..N with stage weights Q_k, R_k, a
terminal weight Q_{N+1}, and a per-step age price theta_check_k that is
traded against control performance through a multiplier lam > 0.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

# Relative tolerances for the numerical assumption checks.  Definiteness is
# judged against the largest eigenvalue magnitude of the matrix at hand, rank
# against the largest singular value.
PSD_TOL = 1e-9
RANK_TOL = 1e-9


class DimensionError(ValueError):
    """Array shapes inconsistent with the declared state/input dimensions."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.flags.writeable = False
    return arr


def _check_shape(name: str, arr: np.ndarray, shape: tuple) -> None:
    if arr.shape != shape:
        raise DimensionError(f"{name}: expected shape {shape}, got {arr.shape}")


@dataclass(frozen=True)
class PlantModel:
    """Time-invariant linear plant with additive Gaussian noise.

    A : (n, n) state transition
    B : (n, m) input map
    W : (n, n) process noise covariance
    m0, M0 : mean and covariance of the initial state
    """

    A: np.ndarray
    B: np.ndarray
    W: np.ndarray
    m0: np.ndarray
    M0: np.ndarray

    def __post_init__(self):
        A = _frozen(self.A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got shape {A.shape}")
        n = A.shape[0]
        B = _frozen(self.B)
        if B.ndim != 2 or B.shape[0] != n:
            raise DimensionError(f"B must have {n} rows, got shape {B.shape}")
        W = _frozen(self.W)
        _check_shape("W", W, (n, n))
        m0 = _frozen(self.m0)
        _check_shape("m0", m0, (n,))
        M0 = _frozen(self.M0)
        _check_shape("M0", M0, (n, n))
        for name, val in (("A", A), ("B", B), ("W", W), ("m0", m0), ("M0", M0)):
            if not np.all(np.isfinite(val)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, val)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class CostWeights:
    """Finite-horizon quadratic weights and age prices.

    Q : (N+2, n, n) state weights; index N+1 is the terminal weight
    R : (N+1, m, m) input weights
    theta_check : (N+1,) per-step age prices (before dividing by lam)
    lam : trade-off multiplier; the effective age reward is theta_check/lam
    """

    Q: np.ndarray
    R: np.ndarray
    theta_check: np.ndarray
    lam: float

    def __post_init__(self):
        Q = _frozen(self.Q)
        R = _frozen(self.R)
        th = _frozen(self.theta_check)
        if Q.ndim != 3 or Q.shape[1] != Q.shape[2]:
            raise DimensionError(f"Q must be a stack of square matrices, got {Q.shape}")
        if R.ndim != 3 or R.shape[1] != R.shape[2]:
            raise DimensionError(f"R must be a stack of square matrices, got {R.shape}")
        if len(Q) != len(R) + 1:
            raise DimensionError(
                f"Q must have one more entry than R (terminal weight), got {len(Q)} vs {len(R)}"
            )
        if len(R) < 1:
            raise DimensionError("horizon must satisfy N >= 0, got empty R")
        if th.shape != (len(R),):
            raise DimensionError(
                f"theta_check must have shape ({len(R)},), got {th.shape}"
            )
        lam = float(self.lam)
        if not np.isfinite(lam) or lam <= 0.0:
            raise ValueError(f"lam must be a positive finite real, got {lam}")
        for name, val in (("Q", Q), ("R", R), ("theta_check", th)):
            if not np.all(np.isfinite(val)):
                raise ValueError(f"{name} contains non-finite entries")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "theta_check", th)
        object.__setattr__(self, "lam", lam)

    @property
    def horizon(self) -> int:
        """N, the index of the last controlled step."""
        return len(self.R) - 1

    @property
    def state_dim(self) -> int:
        return self.Q.shape[1]

    @property
    def input_dim(self) -> int:
        return self.R.shape[1]

    @property
    def theta(self) -> np.ndarray:
        """Effective age rewards theta_check / lam, shape (N+1,)."""
        return self.theta_check / self.lam

    def with_lambda(self, lam: float) -> "CostWeights":
        return dataclasses.replace(self, lam=lam)

    def truncated(self, N_new: int) -> "CostWeights":
        """Same weights over a shorter horizon, keeping the terminal weight."""
        if not 0 <= N_new <= self.horizon:
            raise ValueError(f"N_new must lie in [0, {self.horizon}], got {N_new}")
        Q = np.concatenate([self.Q[: N_new + 1], self.Q[-1:]])
        return CostWeights(Q, self.R[: N_new + 1], self.theta_check[: N_new + 1], self.lam)

    @classmethod
    def constant(cls, n, m, N, Q, R, Q_terminal, theta_check, lam) -> "CostWeights":
        """Build time-invariant weights.  Scalars are promoted to multiples of
        the identity (Q, R, Q_terminal) or constant vectors (theta_check)."""
        if N < 0:
            raise DimensionError(f"horizon must satisfy N >= 0, got {N}")

        def promote(val, dim):
            arr = np.asarray(val, dtype=float)
            if arr.ndim == 0:
                return float(arr) * np.eye(dim)
            return arr

        Qm = promote(Q, n)
        Rm = promote(R, m)
        Qt = promote(Q_terminal, n)
        Qs = np.concatenate([np.broadcast_to(Qm, (N + 1, n, n)), Qt[None]])
        Rs = np.broadcast_to(Rm, (N + 1, m, m)).copy()
        ths = np.broadcast_to(np.asarray(theta_check, dtype=float), (N + 1,)).copy()
        return cls(Qs, Rs, ths, lam)


def admissible_ages(prev_age: int, k: int) -> range:
    """Ages the queue may select at step k given the previous age.

    Time 0 forces age 0 (the initial state is known at the controller); later
    the age can drop to any value up to the waiting time prev_age + 1.
    """
    if k == 0:
        return range(0, 1)
    return range(0, prev_age + 2)


def controllability_rank(A: np.ndarray, B: np.ndarray, rank_tol: float = RANK_TOL) -> int:
    """Rank of [B, AB, ..., A^{n-1}B] with singular values below
    rank_tol * sigma_max treated as zero."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    blocks = []
    P = B
    for _ in range(n):
        blocks.append(P)
        P = A @ P
    C = np.hstack(blocks)
    sv = np.linalg.svd(C, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > rank_tol * sv[0]))


def _min_eig(M: np.ndarray) -> tuple[float, float]:
    vals = np.linalg.eigvalsh(M)
    return float(vals.min()), float(np.abs(vals).max())


def _is_symmetric(M: np.ndarray, tol: float) -> bool:
    scale = max(float(np.abs(M).max()), 1.0)
    return float(np.abs(M - M.T).max()) <= tol * scale


def validate_model(
    model: PlantModel,
    weights: CostWeights,
    psd_tol: float = PSD_TOL,
    rank_tol: float = RANK_TOL,
) -> list[str]:
    """Check the standing assumptions and return a report of violations.

    Shape mismatches between model and weights are structural errors and
    raise DimensionError.  Everything else (definiteness, symmetry, sign and
    finiteness conditions, controllability) is reported as a list of strings,
    one per violated assumption, each naming the offending eigenvalue or rank.
    An empty list means the instance is admissible.
    """
    n, m = model.state_dim, model.input_dim
    if weights.state_dim != n:
        raise DimensionError(
            f"weights are for state dimension {weights.state_dim}, model has {n}"
        )
    if weights.input_dim != m:
        raise DimensionError(
            f"weights are for input dimension {weights.input_dim}, model has {m}"
        )

    report = []

    def check_definite(name, M, strict):
        if not _is_symmetric(M, psd_tol):
            report.append(f"{name} is not symmetric")
            return
        lo, scale = _min_eig(M)
        thresh = psd_tol * scale
        if strict and lo <= thresh:
            report.append(f"{name} is not positive definite (min eigenvalue {lo:.6g})")
        elif not strict and lo < -thresh:
            report.append(f"{name} is not positive semidefinite (min eigenvalue {lo:.6g})")

    check_definite("W", model.W, strict=True)
    check_definite("M0", model.M0, strict=False)

    N = weights.horizon
    for k in range(N + 2):
        if not _is_symmetric(weights.Q[k], psd_tol):
            report.append(f"Q at step {k} is not symmetric")
            break
        lo, scale = _min_eig(weights.Q[k])
        if lo < -psd_tol * scale:
            label = "terminal state weight" if k == N + 1 else f"Q at step {k}"
            report.append(f"{label} is not positive semidefinite (min eigenvalue {lo:.6g})")
            break
    for k in range(N + 1):
        if not _is_symmetric(weights.R[k], psd_tol):
            report.append(f"R at step {k} is not symmetric")
            break
        lo, scale = _min_eig(weights.R[k])
        if lo <= psd_tol * scale:
            report.append(f"R at step {k} is not positive definite (min eigenvalue {lo:.6g})")
            break

    if np.any(weights.theta_check < 0.0):
        k = int(np.argmax(weights.theta_check < 0.0))
        report.append(
            f"age price at step {k} is negative ({weights.theta_check[k]:.6g})"
        )
    theta = weights.theta
    if not np.all(np.isfinite(theta)):
        report.append("effective age reward theta_check/lam is not finite")

    rank = controllability_rank(model.A, model.B, rank_tol)
    if rank < n:
        report.append(f"(A, B) is not controllable (controllability rank {rank} < {n})")

    return report
