"""Linear policies with online observation whitening, plus behavior cloning.

A policy is a p x n weight matrix applied to whitened states:
a = theta @ ((s - mu) / sqrt(max(var, 1e-8))). Whitening is the identity
until at least two states have been observed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import AdamState, Rng, RunningStats, adam_step

VAR_FLOOR = 1e-8


@dataclass
class LinearPolicy:
    """Deterministic linear policy; theta is (action_dim, state_dim)."""

    theta: np.ndarray

    @classmethod
    def zeros(cls, action_dim: int, state_dim: int) -> "LinearPolicy":
        return cls(np.zeros((action_dim, state_dim)))

    def copy(self) -> "LinearPolicy":
        return LinearPolicy(self.theta.copy())


@dataclass
class ObservationNormalizer:
    """Running mean / diagonal variance of visited states."""

    stats: RunningStats = field(default_factory=RunningStats)

    @classmethod
    def for_dim(cls, n: int) -> "ObservationNormalizer":
        return cls(RunningStats(0, np.zeros(n), np.zeros(n)))

    @property
    def count(self) -> int:
        return self.stats.count

    @property
    def mean(self) -> np.ndarray:
        return self.stats.mean

    def variance(self) -> np.ndarray:
        return self.stats.variance()

    def snapshot(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Frozen (mean, inv_std) for a rollout; None while inactive."""
        if self.count < 2:
            return None
        inv_std = 1.0 / np.sqrt(np.maximum(self.variance(), VAR_FLOOR))
        return self.mean.copy(), inv_std

    def normalize(self, state: np.ndarray) -> np.ndarray:
        snap = self.snapshot()
        if snap is None:
            return state
        mu, inv_std = snap
        return (state - mu) * inv_std

    def add_states(self, states: np.ndarray) -> None:
        self.stats.merge_batch(states)

    def copy(self) -> "ObservationNormalizer":
        return ObservationNormalizer(self.stats.copy())


@dataclass
class BcDataset:
    """Paired (state, action) regression data for cloning."""

    states: np.ndarray   # (B, n)
    actions: np.ndarray  # (B, p)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.actions = np.asarray(self.actions, dtype=float)
        if len(self.states) != len(self.actions):
            raise ValueError("states and actions must pair up")

    def __len__(self) -> int:
        return len(self.states)


def act(policy: LinearPolicy, normalizer: ObservationNormalizer,
        state: np.ndarray) -> np.ndarray:
    if policy.theta.shape[1] != len(state):
        raise ValueError(
            f"policy expects state dim {policy.theta.shape[1]}, got {len(state)}")
    return policy.theta @ normalizer.normalize(np.asarray(state, dtype=float))


def perturb(policy: LinearPolicy, delta: np.ndarray, nu: float,
            sign: int) -> LinearPolicy:
    """theta +- nu*delta, leaving the input untouched."""
    if delta.shape != policy.theta.shape:
        raise ValueError(
            f"delta shape {delta.shape} != theta shape {policy.theta.shape}")
    if nu <= 0:
        raise ValueError("exploration scale nu must be positive")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return LinearPolicy(policy.theta + sign * nu * delta)


def bc_loss(theta: np.ndarray, z: np.ndarray, y: np.ndarray) -> float:
    """Mean squared error of theta @ z_i against y_i."""
    resid = z @ theta.T - y
    return float(np.mean(np.sum(resid * resid, axis=1)))


def bc_fit(dataset: BcDataset, normalizer: ObservationNormalizer,
           epochs: int = 2000, lr: float = 0.01, rng: Rng | None = None,
           batch_size: int | None = None) -> LinearPolicy:
    """Fit a linear policy to the dataset by Adam on the exact MSE gradient.

    States are whitened through `normalizer` first, so the fitted weights
    live in the same coordinates a trained policy would use. Full batch by
    default; pass `batch_size` (and an rng) for minibatch mode.
    """
    if len(dataset) == 0:
        raise ValueError("cannot fit on an empty dataset")
    z = np.stack([normalizer.normalize(s) for s in dataset.states])
    y = dataset.actions
    n, p = z.shape[1], y.shape[1]
    theta = np.zeros((p, n))
    state = AdamState.zeros(p * n)
    for _ in range(epochs):
        if batch_size is None:
            zb, yb = z, y
        else:
            if rng is None:
                raise ValueError("minibatch mode needs an rng")
            idx = rng.integers(len(z), batch_size)
            zb, yb = z[idx], y[idx]
        # d/dtheta mean_i ||theta z_i - y_i||^2 = (2/B) sum_i (theta z_i - y_i) z_i^T
        grad = (2.0 / len(zb)) * (zb @ theta.T - yb).T @ zb
        flat = adam_step(state, theta.flatten(), grad.flatten(), lr)
        theta = flat.reshape(p, n)
    return LinearPolicy(theta)


def bc_closed_form(dataset: BcDataset, normalizer: ObservationNormalizer,
                   ridge: float = 0.0) -> LinearPolicy:
    """Exact ridge least-squares solution of the cloning objective.

    Solves (Z^T Z + ridge I) A = Z^T Y for A and returns theta = A^T.
    """
    if len(dataset) == 0:
        raise ValueError("cannot fit on an empty dataset")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    z = np.stack([normalizer.normalize(s) for s in dataset.states])
    y = dataset.actions
    gram = z.T @ z + ridge * np.eye(z.shape[1])
    rhs = z.T @ y
    try:
        a = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "normal equations are singular; pass ridge > 0") from exc
    return LinearPolicy(a.T)
