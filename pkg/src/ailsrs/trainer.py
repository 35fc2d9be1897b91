"""Training loops: plain random-search training on environment reward, and
the adversarial imitation loop where the discriminator supplies all rewards.

One iteration of the imitation loop:

1. sample N directions and roll out the +/- policy pair for each, scoring
   every episode with the *current* discriminator (one frozen snapshot for
   all 2N episodes, so the pairwise comparisons are meaningful);
2. take a few Adam steps on the discriminator, batching fresh episodes
   against the demonstrations;
3. update the policy weights from the discriminator returns collected in
   step 1 (no recomputation under the new discriminator);
4. fold all visited states into the observation normalizer.

Environment rewards are logged for evaluation only and never reach the
policy update.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .ars import (ArsConfig, ars_update, evaluate_directions, returns_std,
                  sample_directions, visited_states)
from .demo_io import TrajectorySet
from .discriminator import MlpDiscriminator, disc_init, disc_train
from .envs import evaluate_policy, make_env
from .numerics import AdamState, Rng
from .policy import LinearPolicy, ObservationNormalizer

# label namespaces for the per-iteration derived streams
DIRECTIONS_STREAM = 0
ROLLOUT_STREAM = 1
DISC_BATCH_STREAM = 2
DISC_INIT_STREAM = 3


@dataclass
class TrainerConfig:
    ars: ArsConfig = field(default_factory=ArsConfig)
    max_iterations: int = 100_000
    rollout_max_steps: int = 1000   # capped by the env horizon
    disc_lr: float = 0.00025
    disc_iters: int = 3
    disc_batch: int | None = None   # None: episode length of each rollout
    eval_every: int = 10
    eval_episodes: int = 10
    seed: int = 0
    early_stop_target: float | None = None  # absolute eval return; None: off

    def __post_init__(self):
        if self.max_iterations < 1 or self.rollout_max_steps < 1:
            raise ValueError("max_iterations and rollout_max_steps must be >= 1")
        if self.disc_lr <= 0 or self.disc_iters < 0:
            raise ValueError("disc_lr must be positive, disc_iters >= 0")
        if self.disc_batch is not None and self.disc_batch < 1:
            raise ValueError("disc_batch must be >= 1")
        if self.eval_every < 1 or self.eval_episodes < 1:
            raise ValueError("eval_every and eval_episodes must be >= 1")


@dataclass
class MetricsRow:
    iteration: int
    mean_disc_return: float
    sigma_r: float
    disc_loss: float
    eval_env_return_mean: float | None
    eval_env_return_std: float | None
    wall_ms: float


METRICS_HEADER = ("iteration,mean_disc_return,sigma_r,disc_loss,"
                  "eval_env_return_mean,eval_env_return_std,wall_ms")


def write_metrics(rows: list[MetricsRow], path: str) -> None:
    def cell(v):
        return "" if v is None else repr(v)

    with open(path, "w") as fh:
        fh.write(METRICS_HEADER + "\n")
        for r in rows:
            fh.write(",".join([str(r.iteration), repr(r.mean_disc_return),
                               repr(r.sigma_r), repr(r.disc_loss),
                               cell(r.eval_env_return_mean),
                               cell(r.eval_env_return_std),
                               repr(r.wall_ms)]) + "\n")


@dataclass
class TrainState:
    """Mutable state threaded through the imitation iterations."""

    theta: np.ndarray
    normalizer: ObservationNormalizer
    disc: MlpDiscriminator
    adam: AdamState


def return_target(reference_return: float, fraction: float) -> float:
    """Return threshold meaning "within `fraction` of the reference".

    For non-negative references this is fraction * reference. Our
    environments are pure cost (returns <= 0), where scaling a negative
    reference by the fraction would demand a policy strictly better than
    the reference; there the bound is reference / fraction, i.e. cost at
    most 1/fraction times the reference cost.
    """
    if fraction <= 0:
        raise ValueError("fraction must be positive")
    if reference_return >= 0:
        return reference_return * fraction
    return reference_return / fraction


def evaluate(policy: LinearPolicy, normalizer: ObservationNormalizer,
             env_name: str, episodes: int, seed: int) -> tuple[float, float]:
    """Mean/std environment return over seeded episodes; never mutates stats."""
    return evaluate_policy(policy, normalizer, env_name, episodes, seed)


def train_expert(env_name: str, ars_cfg: ArsConfig, iterations: int,
                 seed: int, rollout_max_steps: int = 1000):
    """Plain random-search training on the raw environment reward."""
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    spec = make_env(env_name).spec
    root = Rng(seed)
    theta = np.zeros((spec.action_dim, spec.state_dim))
    normalizer = ObservationNormalizer.for_dim(spec.state_dim)
    for t in range(iterations):
        deltas = sample_directions(root.derive(DIRECTIONS_STREAM, t),
                                   ars_cfg.n_directions, spec.action_dim,
                                   spec.state_dim)
        results, trajs = evaluate_directions(
            theta, deltas, ars_cfg.nu, env_name, normalizer, None,
            root.derive(ROLLOUT_STREAM, t), max_steps=rollout_max_steps)
        theta = ars_update(theta, results, ars_cfg.alpha)
        normalizer.add_states(visited_states(trajs))
    return LinearPolicy(theta), normalizer


def ailsrs_iteration(state: TrainState, expert: TrajectorySet,
                     cfg: TrainerConfig, root: Rng,
                     iter_index: int) -> MetricsRow:
    """One imitation iteration; mutates `state`, returns its metrics row."""
    started = time.perf_counter()
    spec = make_env(expert.env_name).spec
    deltas = sample_directions(root.derive(DIRECTIONS_STREAM, iter_index),
                               cfg.ars.n_directions, spec.action_dim,
                               spec.state_dim)
    results, trajs = evaluate_directions(
        state.theta, deltas, cfg.ars.nu, expert.env_name, state.normalizer,
        state.disc, root.derive(ROLLOUT_STREAM, iter_index),
        max_steps=cfg.rollout_max_steps)
    batch = cfg.disc_batch if cfg.disc_batch is not None else len(trajs[0])
    disc_loss = disc_train(state.disc, state.adam, expert, trajs,
                           cfg.disc_iters, batch,
                           root.derive(DISC_BATCH_STREAM, iter_index),
                           lr=cfg.disc_lr)
    state.theta = ars_update(state.theta, results, cfg.ars.alpha)
    state.normalizer.add_states(visited_states(trajs))
    mean_ret = float(np.mean([[r.r_plus, r.r_minus] for r in results]))
    wall_ms = (time.perf_counter() - started) * 1000.0
    return MetricsRow(iter_index, mean_ret, returns_std(results), disc_loss,
                      None, None, wall_ms)


def train_ailsrs(env_name: str, expert: TrajectorySet, cfg: TrainerConfig,
                 init: tuple[LinearPolicy, ObservationNormalizer] | None = None):
    """Imitation training driven purely by discriminator rewards.

    Returns (policy, normalizer, metrics rows). Periodic evaluations use the
    true environment reward for reporting/early-stop only and never touch
    the normalizer. Fully deterministic given (cfg, expert data).
    """
    spec = make_env(env_name).spec
    if expert.env_name != env_name or expert.state_dim != spec.state_dim \
            or expert.action_dim != spec.action_dim:
        raise ValueError(
            f"demonstrations are for {expert.env_name!r} "
            f"({expert.state_dim}, {expert.action_dim}); requested {env_name!r}")
    expert.validate()
    root = Rng(cfg.seed)
    if init is not None:
        pol, norm = init
        if pol.theta.shape != (spec.action_dim, spec.state_dim):
            raise ValueError("init policy dims do not match the environment")
        theta, normalizer = pol.theta.copy(), norm.copy()
    else:
        theta = np.zeros((spec.action_dim, spec.state_dim))
        normalizer = ObservationNormalizer.for_dim(spec.state_dim)
    disc = disc_init(spec.state_dim, spec.action_dim,
                     root.derive(DISC_INIT_STREAM))
    state = TrainState(theta, normalizer, disc, AdamState.zeros(disc.n_params))
    rows: list[MetricsRow] = []
    for t in range(cfg.max_iterations):
        row = ailsrs_iteration(state, expert, cfg, root, t)
        last = t == cfg.max_iterations - 1
        if (t + 1) % cfg.eval_every == 0 or last:
            mean, std = evaluate(LinearPolicy(state.theta), state.normalizer,
                                 env_name, cfg.eval_episodes, cfg.seed)
            row.eval_env_return_mean = mean
            row.eval_env_return_std = std
        rows.append(row)
        if (cfg.early_stop_target is not None
                and row.eval_env_return_mean is not None
                and row.eval_env_return_mean >= cfg.early_stop_target):
            break
    return LinearPolicy(state.theta), state.normalizer, rows
