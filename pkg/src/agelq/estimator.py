"""Optimal state estimate under aged measurements.

When the freshest state available at step k is x_{k-eta} (age eta), the
conditional mean of x_k given that measurement and the applied inputs is

    xhat_k = A^eta x_{k-eta} + sum_{t=1..eta} A^{t-1} B u_{k-t}

and the estimation error depends on the noise alone:

    e_k = x_k - xhat_k = sum_{t=1..eta} A^{t-1} w_{k-t}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ControllerInfo:
    """What the controller knows at one step.

    latest_measurement : (n,) freshest state sample, x_{k-age}
    age : how many steps old that sample is
    control_history : (age, m) inputs applied since the sample was taken,
        most recent first (row t-1 holds u_{k-t})
    """

    latest_measurement: np.ndarray
    age: int
    control_history: np.ndarray

    def __post_init__(self):
        if self.age < 0:
            raise ValueError(f"age must be nonnegative, got {self.age}")
        if len(self.control_history) != self.age:
            raise ValueError(
                f"control history has {len(self.control_history)} entries, "
                f"age {self.age} requires exactly that many"
            )


def estimate(info: ControllerInfo, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Conditional mean of the current state given aged information."""
    n = A.shape[0]
    xhat = np.zeros(n)
    P = np.eye(n)
    for t in range(info.age):
        xhat = xhat + P @ (B @ info.control_history[t])
        P = A @ P
    return xhat + P @ info.latest_measurement


def estimation_error(noise_window: np.ndarray, A: np.ndarray, age: int) -> np.ndarray:
    """Exact estimation error from the realized noise.

    noise_window holds past noise most recent first (row t-1 is w_{k-t}); it
    must contain at least `age` rows.
    """
    if age < 0:
        raise ValueError(f"age must be nonnegative, got {age}")
    if len(noise_window) < age:
        raise ValueError(
            f"noise window has {len(noise_window)} entries, need at least {age}"
        )
    n = A.shape[0]
    e = np.zeros(n)
    P = np.eye(n)
    for t in range(age):
        e = e + P @ noise_window[t]
        P = A @ P
    return e
