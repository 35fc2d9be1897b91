"""Demonstration recording plus line-oriented persistence for
trajectory sets and policies.

Both file formats are JSON-based text (one header line plus one line per
episode for demonstrations; a single document for policies) and carry a
format_version field. Floats serialize via repr, i.e. shortest round-trip
decimals, so save -> load is exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .envs import Trajectory, episode_rng, make_env, rollout
from .numerics import RunningStats
from .policy import LinearPolicy, ObservationNormalizer

FORMAT_VERSION = 1


class FormatError(ValueError):
    """Malformed or inconsistent data file."""


class VersionMismatchError(FormatError):
    pass


class DimensionMismatchError(FormatError):
    pass


class NonFiniteValueError(FormatError):
    pass


@dataclass
class TrajectorySet:
    """Recorded demonstration episodes for one environment."""

    env_name: str
    state_dim: int
    action_dim: int
    trajectories: list[Trajectory]

    def __len__(self) -> int:
        return len(self.trajectories)

    def mean_env_return(self) -> float:
        return float(np.mean([t.env_rewards.sum() for t in self.trajectories]))

    def validate(self) -> None:
        if not self.trajectories:
            raise DimensionMismatchError("a trajectory set needs >= 1 episode")
        for k, t in enumerate(self.trajectories):
            if not (len(t.states) == len(t.actions) == len(t.env_rewards)):
                raise DimensionMismatchError(f"episode {k}: ragged lengths")
            if len(t.states) < 1:
                raise DimensionMismatchError(f"episode {k}: empty")
            if t.states.shape[1] != self.state_dim:
                raise DimensionMismatchError(
                    f"episode {k}: states are {t.states.shape[1]}-dim, "
                    f"expected {self.state_dim}")
            if t.actions.shape[1] != self.action_dim:
                raise DimensionMismatchError(
                    f"episode {k}: actions are {t.actions.shape[1]}-dim, "
                    f"expected {self.action_dim}")
            for arr in (t.states, t.actions, t.env_rewards):
                if not np.all(np.isfinite(arr)):
                    raise NonFiniteValueError(f"episode {k}: non-finite value")


def record(policy: LinearPolicy, normalizer: ObservationNormalizer,
           env_name: str, episodes: int, seed: int) -> TrajectorySet:
    """Roll the policy out for `episodes` seeded episodes and keep everything.

    Uses the same per-episode streams as evaluation, so the recorded mean
    return equals the evaluation mean for the same (policy, seed, episodes).
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    env = make_env(env_name)
    trajectories = []
    for i in range(episodes):
        traj, _, _ = rollout(env, policy, normalizer, None, episode_rng(seed, i))
        trajectories.append(traj)
    return TrajectorySet(env_name, env.spec.state_dim, env.spec.action_dim,
                         trajectories)


def save_trajectories(demo_set: TrajectorySet, path: str) -> None:
    demo_set.validate()
    with open(path, "w") as fh:
        header = {"format_version": FORMAT_VERSION, "env": demo_set.env_name,
                  "state_dim": demo_set.state_dim,
                  "action_dim": demo_set.action_dim,
                  "episodes": len(demo_set)}
        fh.write(json.dumps(header) + "\n")
        for t in demo_set.trajectories:
            fh.write(json.dumps({"states": t.states.tolist(),
                                 "actions": t.actions.tolist(),
                                 "env_rewards": t.env_rewards.tolist()}) + "\n")


def load_trajectories(path: str) -> TrajectorySet:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty file (line 1)")

    def parse(line_no: int, text: str) -> dict:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: bad JSON on line {line_no}: {exc}") from None
        if not isinstance(obj, dict):
            raise FormatError(f"{path}: expected an object on line {line_no}")
        return obj

    header = parse(1, lines[0])
    if header.get("format_version") != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format_version {header.get('format_version')!r}, "
            f"expected {FORMAT_VERSION}")
    for key in ("env", "state_dim", "action_dim", "episodes"):
        if key not in header:
            raise FormatError(f"{path}: header missing {key!r} (line 1)")
    episodes = header["episodes"]
    if len(lines) - 1 != episodes:
        raise FormatError(
            f"{path}: header promises {episodes} episodes but file has "
            f"{len(lines) - 1} (line {len(lines)})")
    trajectories = []
    for k in range(episodes):
        obj = parse(k + 2, lines[k + 1])
        try:
            traj = Trajectory(np.array(obj["states"], dtype=float),
                              np.array(obj["actions"], dtype=float),
                              np.array(obj["env_rewards"], dtype=float))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"{path}: bad episode on line {k + 2}: {exc}") from None
        if traj.states.ndim != 2 or traj.actions.ndim != 2:
            raise DimensionMismatchError(
                f"{path}: ragged episode arrays on line {k + 2}")
        trajectories.append(traj)
    out = TrajectorySet(header["env"], header["state_dim"],
                        header["action_dim"], trajectories)
    out.validate()
    return out


def save_policy(policy: LinearPolicy, normalizer: ObservationNormalizer,
                env_name: str, path: str) -> None:
    theta = policy.theta
    if not np.all(np.isfinite(theta)):
        raise NonFiniteValueError("policy weights contain non-finite values")
    doc = {"format_version": FORMAT_VERSION, "env": env_name,
           "state_dim": theta.shape[1], "action_dim": theta.shape[0],
           "theta": theta.tolist(), "mu": normalizer.mean.tolist(),
           "var": normalizer.variance().tolist(), "count": normalizer.count}
    with open(path, "w") as fh:
        fh.write(json.dumps(doc) + "\n")


def load_policy(path: str, expect_env=None):
    """Read a policy file; returns (policy, normalizer, env_name).

    Pass an EnvSpec as `expect_env` to reject mismatched files.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: bad JSON: {exc}") from None
    if doc.get("format_version") != FORMAT_VERSION:
        raise VersionMismatchError(
            f"{path}: format_version {doc.get('format_version')!r}, "
            f"expected {FORMAT_VERSION}")
    theta = np.array(doc["theta"], dtype=float)
    mu = np.array(doc["mu"], dtype=float)
    var = np.array(doc["var"], dtype=float)
    count = int(doc["count"])
    if theta.ndim != 2 or theta.shape != (doc["action_dim"], doc["state_dim"]):
        raise DimensionMismatchError(
            f"{path}: theta shape {theta.shape} does not match header dims")
    if mu.shape != (doc["state_dim"],) or var.shape != (doc["state_dim"],):
        raise DimensionMismatchError(f"{path}: mu/var must be state_dim vectors")
    for arr in (theta, mu, var):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValueError(f"{path}: non-finite value")
    if expect_env is not None:
        if doc["env"] != expect_env.name:
            raise DimensionMismatchError(
                f"{path}: policy was trained for {doc['env']!r}, "
                f"not {expect_env.name!r}")
        if (doc["state_dim"], doc["action_dim"]) != (expect_env.state_dim,
                                                     expect_env.action_dim):
            raise DimensionMismatchError(
                f"{path}: dims {(doc['state_dim'], doc['action_dim'])} do not "
                f"match {expect_env.name}")
    # the accumulator is reconstructed as var * count; observable stats
    # (mean, variance, count) are what the format preserves
    normalizer = ObservationNormalizer(RunningStats(count, mu, var * count))
    return LinearPolicy(theta), normalizer, doc["env"]
