"""Experiment configuration: YAML files, dotted-path overrides, builders.

A config has three blocks:

    model:   n, m, A, B, W, m0, M0
    weights: N, Q, R, Q_terminal, theta_check, lambda
    run:     policy, trajectories, seed, workers, kbar, lambda_grid,
             out, plot, long_format

Matrices may be written as nested rows, as flat row-major lists, or (square
shapes only) as a scalar meaning that multiple of the identity.  Q, R and
theta_check may also be given per step as a length N+1 list.  Every error
message names the offending field.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .model import CostWeights, PlantModel


class ConfigError(Exception):
    """Unreadable, unparsable, or semantically invalid configuration."""


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if cfg is None:
        cfg = {}
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return cfg


def apply_overrides(cfg: dict, assignments) -> dict:
    """Apply "a.b.c=value" strings on top of the loaded mapping.  Values are
    parsed with the same YAML rules as the file itself."""
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form path=value")
        dotted, raw = item.split("=", 1)
        keys = [k for k in dotted.strip().split(".") if k]
        if not keys:
            raise ConfigError(f"override {item!r} has an empty path")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            raise ConfigError(f"override {item!r}: cannot parse value {raw!r}") from None
        node = cfg
        for k in keys[:-1]:
            nxt = node.get(k)
            if nxt is None:
                nxt = node[k] = {}
            elif not isinstance(nxt, dict):
                raise ConfigError(f"override {item!r}: {k} is not a mapping")
            node = nxt
        node[keys[-1]] = value
    return cfg


def _depth(value) -> int:
    d = 0
    while isinstance(value, (list, tuple)):
        if len(value) == 0:
            return d + 1
        value = value[0]
        d += 1
    return d


def parse_matrix(value, rows: int, cols: int, fieldname: str) -> np.ndarray:
    """Scalar (square only), flat row-major list, or nested rows."""
    if isinstance(value, (int, float)):
        if rows == cols:
            return float(value) * np.eye(rows)
        if rows * cols == 1:
            return np.array([[float(value)]])
        raise ConfigError(
            f"{fieldname}: scalar shorthand needs a square shape, expected {rows}x{cols}"
        )
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        if arr.size != rows * cols:
            raise ConfigError(
                f"{fieldname}: flat list has {arr.size} entries, expected {rows * cols}"
            )
        return arr.reshape(rows, cols)
    if arr.ndim == 2:
        if arr.shape != (rows, cols):
            raise ConfigError(
                f"{fieldname}: expected shape {rows}x{cols}, got {arr.shape[0]}x{arr.shape[1]}"
            )
        return arr
    raise ConfigError(f"{fieldname}: cannot interpret nesting depth {arr.ndim}")


def _require(block: dict, key: str, blockname: str):
    if key not in block:
        raise ConfigError(f"missing field {blockname}.{key}")
    return block[key]


def build_plant(cfg: dict) -> PlantModel:
    block = cfg.get("model")
    if not isinstance(block, dict):
        raise ConfigError("missing or malformed block: model")
    try:
        n = int(_require(block, "n", "model"))
        m = int(_require(block, "m", "model"))
    except (TypeError, ValueError):
        raise ConfigError("model.n and model.m must be integers") from None
    if n < 1 or m < 1:
        raise ConfigError(f"model.n and model.m must be positive, got n={n}, m={m}")

    def vec(value, fieldname):
        if isinstance(value, (int, float)):
            return np.full(n, float(value))
        arr = np.asarray(value, dtype=float).reshape(-1)
        if arr.size != n:
            raise ConfigError(f"{fieldname}: expected {n} entries, got {arr.size}")
        return arr

    try:
        return PlantModel(
            A=parse_matrix(_require(block, "A", "model"), n, n, "model.A"),
            B=parse_matrix(_require(block, "B", "model"), n, m, "model.B"),
            W=parse_matrix(_require(block, "W", "model"), n, n, "model.W"),
            m0=vec(block.get("m0", 0.0), "model.m0"),
            M0=parse_matrix(block.get("M0", 0.0), n, n, "model.M0"),
        )
    except ValueError as exc:
        raise ConfigError(f"model block: {exc}") from None


def _weight_stack(value, N: int, dim: int, fieldname: str) -> np.ndarray:
    """(N+1, dim, dim) stack from a scalar, one matrix, or a per-step list."""
    if isinstance(value, (int, float)):
        one = float(value) * np.eye(dim)
        return np.broadcast_to(one, (N + 1, dim, dim)).copy()
    depth = _depth(value)
    if depth == 3 or (depth == 1 and dim * dim != len(value) and len(value) == N + 1):
        if len(value) != N + 1:
            raise ConfigError(
                f"{fieldname}: per-step list needs {N + 1} entries, got {len(value)}"
            )
        return np.stack(
            [parse_matrix(v, dim, dim, f"{fieldname}[{k}]") for k, v in enumerate(value)]
        )
    return np.broadcast_to(
        parse_matrix(value, dim, dim, fieldname), (N + 1, dim, dim)
    ).copy()


def build_weights(cfg: dict, plant: PlantModel) -> CostWeights:
    block = cfg.get("weights")
    if not isinstance(block, dict):
        raise ConfigError("missing or malformed block: weights")
    n, m = plant.state_dim, plant.input_dim
    try:
        N = int(_require(block, "N", "weights"))
    except (TypeError, ValueError):
        raise ConfigError("weights.N must be an integer") from None
    if N < 0:
        raise ConfigError(f"weights.N must be nonnegative, got {N}")

    Q = _weight_stack(_require(block, "Q", "weights"), N, n, "weights.Q")
    R = _weight_stack(_require(block, "R", "weights"), N, m, "weights.R")
    Qt = parse_matrix(
        _require(block, "Q_terminal", "weights"), n, n, "weights.Q_terminal"
    )

    th_val = _require(block, "theta_check", "weights")
    if isinstance(th_val, (int, float)):
        theta_check = np.full(N + 1, float(th_val))
    else:
        theta_check = np.asarray(th_val, dtype=float).reshape(-1)
        if theta_check.size != N + 1:
            raise ConfigError(
                f"weights.theta_check: expected {N + 1} entries, got {theta_check.size}"
            )

    lam = block.get("lambda")
    if lam is None:
        raise ConfigError("missing field weights.lambda")
    try:
        lam = float(lam)
    except (TypeError, ValueError):
        raise ConfigError(f"weights.lambda must be a number, got {lam!r}") from None

    try:
        return CostWeights(
            Q=np.concatenate([Q, Qt[None]]), R=R, theta_check=theta_check, lam=lam
        )
    except ValueError as exc:
        raise ConfigError(f"weights block: {exc}") from None


@dataclass
class RunOptions:
    """Execution settings shared by the CLI commands."""

    policy: str = "zero-wait"
    trajectories: int = 1
    seed: int = 0
    workers: int = 1
    kbar: int = 1
    lambda_grid: list = field(default_factory=list)
    out: str | None = None
    plot: str | None = None
    long_format: bool = True


def build_run_options(cfg: dict) -> RunOptions:
    block = cfg.get("run", {})
    if block is None:
        block = {}
    if not isinstance(block, dict):
        raise ConfigError("malformed block: run")
    opts = RunOptions()
    known = {
        "policy": str, "trajectories": int, "seed": int, "workers": int,
        "kbar": int, "lambda_grid": None, "out": str, "plot": str,
        "long_format": bool,
    }
    for key, value in block.items():
        if key not in known:
            raise ConfigError(f"unknown field run.{key}")
        if key == "lambda_grid":
            try:
                value = [float(v) for v in value]
            except (TypeError, ValueError):
                raise ConfigError("run.lambda_grid must be a list of numbers") from None
        elif known[key] is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"run.{key} must be an integer, got {value!r}")
        elif known[key] is bool:
            if not isinstance(value, bool):
                raise ConfigError(f"run.{key} must be true or false, got {value!r}")
        elif known[key] is str and value is not None:
            value = str(value)
        setattr(opts, key, value)
    if opts.trajectories < 1:
        raise ConfigError(f"run.trajectories must be positive, got {opts.trajectories}")
    if opts.workers < 1:
        raise ConfigError(f"run.workers must be positive, got {opts.workers}")
    if opts.kbar < 0:
        raise ConfigError(f"run.kbar must be nonnegative, got {opts.kbar}")
    return opts
