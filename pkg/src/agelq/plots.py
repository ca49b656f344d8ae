"""Figure rendering for simulation reports.  Import is deferred to keep the
numeric paths free of a matplotlib dependency; all figures go to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_age_history(record, path) -> None:
    """Staircase of the age of information over one trajectory."""
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    ax.step(range(len(record.age)), record.age, where="post", lw=1.2)
    ax.set_xlabel("time step")
    ax.set_ylabel("age of information")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_state_history(record, path) -> None:
    """First state component against its estimate over one trajectory."""
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    ax.plot(record.x[:, 0], lw=1.2, label="state")
    ax.plot(range(len(record.xhat)), record.xhat[:, 0], "--", lw=1.0, label="estimate")
    ax.set_xlabel("time step")
    ax.set_ylabel("state")
    ax.legend(loc="best", fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_tradeoff_curve(points, path) -> None:
    """Average age against control performance, one marker per multiplier."""
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    J = [p.J_hat for p in points]
    A = [p.A_hat for p in points]
    ax.errorbar(
        J, A,
        xerr=[p.se_J for p in points], yerr=[p.se_A for p in points],
        fmt="o-", ms=3.5, lw=1.0, capsize=2,
    )
    ax.set_xlabel("control performance J")
    ax.set_ylabel("average age A")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
