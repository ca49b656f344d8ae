"""Certainty-equivalence control: apply the regulator gain to the estimate."""

from __future__ import annotations

import numpy as np

from .riccati import RiccatiSolution


def control_input(sol: RiccatiSolution, k: int, xhat: np.ndarray) -> np.ndarray:
    """u_k = -K_k xhat_k for 0 <= k <= N."""
    if not 0 <= k <= sol.horizon:
        raise IndexError(f"gains are defined for steps 0..{sol.horizon}, got {k}")
    return -(sol.K[k] @ xhat)
