import dataclasses
import math

import numpy as np
import pytest

from ailsrs.ars import ArsConfig, evaluate_directions, sample_directions
from ailsrs.demo_io import TrajectorySet, record
from ailsrs.discriminator import MlpDiscriminator, disc_train, lsgan_loss
from ailsrs.envs import evaluate_policy, make_env, riccati_optimal, rollout
from ailsrs.numerics import AdamState, Rng
from ailsrs.policy import LinearPolicy, ObservationNormalizer
from ailsrs.trainer import (DIRECTIONS_STREAM, ROLLOUT_STREAM, METRICS_HEADER,
                            TrainerConfig, TrainState, ailsrs_iteration,
                            evaluate, return_target, train_ailsrs,
                            train_expert, write_metrics)


def _row_key(row):
    # wall_ms is measured time and varies between runs; everything else
    # must reproduce exactly
    return (row.iteration, row.mean_disc_return, row.sigma_r, row.disc_loss,
            row.eval_env_return_mean, row.eval_env_return_std)


@pytest.fixture(scope="module")
def riccati_demos():
    pol, norm, mean = riccati_optimal(seed=0, episodes=100)
    return record(pol, norm, "lqr2d", episodes=10, seed=0), mean


def _small_cfg(**overrides):
    base = dict(ars=ArsConfig(alpha=0.02, nu=0.03, n_directions=4),
                max_iterations=5, eval_every=5, eval_episodes=3, seed=1)
    base.update(overrides)
    return TrainerConfig(**base)


def test_trainer_config_defaults_match_documented_values():
    cfg = TrainerConfig()
    assert (cfg.ars.alpha, cfg.ars.nu, cfg.ars.n_directions) == (0.02, 0.03, 320)
    assert cfg.max_iterations == 100_000
    assert cfg.rollout_max_steps == 1000
    assert cfg.disc_lr == 0.00025
    assert cfg.disc_iters == 3
    assert cfg.disc_batch is None  # resolved to the episode length


def test_return_target_sign_aware():
    assert return_target(100.0, 0.9) == pytest.approx(90.0)
    # pure-cost returns: within 10% means at most 1/0.9 of the cost
    assert return_target(-10.0, 0.9) == pytest.approx(-10.0 / 0.9)
    assert return_target(-10.0, 5.0) == pytest.approx(-2.0)
    with pytest.raises(ValueError):
        return_target(1.0, 0.0)


def test_train_expert_rejects_zero_iterations():
    with pytest.raises(ValueError):
        train_expert("lqr2d", ArsConfig(n_directions=2), 0, seed=1)


def test_train_expert_improves_on_pointmass():
    zero_mean, _ = evaluate_policy(LinearPolicy.zeros(2, 4),
                                   ObservationNormalizer.for_dim(4),
                                   "pointmass2d", 100, 0)
    pol, norm = train_expert("pointmass2d", ArsConfig(n_directions=8), 500, seed=1)
    mean, _ = evaluate_policy(pol, norm, "pointmass2d", 100, 0)
    # measured 3.1x cost reduction at this budget; 2.5x guards the claim
    # without flaking on refactors
    assert mean >= return_target(zero_mean, 2.5)


def test_ailsrs_iteration_deterministic(riccati_demos):
    demos, _ = riccati_demos
    cfg = _small_cfg()
    rows = []
    for _ in range(2):
        _, _, run_rows = train_ailsrs("lqr2d", demos, cfg)
        rows.append(run_rows)
    assert [_row_key(r) for r in rows[0]] == [_row_key(r) for r in rows[1]]


def test_ailsrs_iteration_constant_discriminator_freezes_theta(riccati_demos):
    demos, _ = riccati_demos
    cfg = _small_cfg(disc_iters=0)  # keep the discriminator frozen too
    disc = MlpDiscriminator(np.zeros((100, 3)), np.zeros(100),
                            np.zeros((100, 100)), np.zeros(100),
                            np.zeros((1, 100)), 0.0)  # D = 0.5 everywhere
    state = TrainState(np.array([[0.25, -0.5]]),
                       ObservationNormalizer.for_dim(2), disc,
                       AdamState.zeros(disc.n_params))
    before = state.theta.copy()
    row = ailsrs_iteration(state, demos, cfg, Rng(cfg.seed), 0)
    assert row.mean_disc_return == pytest.approx(100 * math.log(2.0), rel=1e-12)
    assert row.sigma_r == 0.0
    np.testing.assert_array_equal(state.theta, before)


def test_discriminator_loss_decreases_on_first_iteration(riccati_demos):
    demos, _ = riccati_demos
    norm = ObservationNormalizer.for_dim(2)
    root = Rng(1)
    from ailsrs.discriminator import disc_init
    disc = disc_init(2, 1, root.derive(3))
    deltas = sample_directions(root.derive(DIRECTIONS_STREAM, 0), 8, 1, 2)
    _, trajs = evaluate_directions(np.zeros((1, 2)), deltas, 0.03, "lqr2d",
                                   norm, disc, root.derive(ROLLOUT_STREAM, 0))
    epool = np.concatenate(
        [np.concatenate([t.states, t.actions], axis=1) for t in demos.trajectories])
    spool = np.concatenate(
        [np.concatenate([t.states, t.actions], axis=1) for t in trajs])
    before = lsgan_loss(disc, epool, spool)
    adam = AdamState.zeros(disc.n_params)
    disc_train(disc, adam, demos, trajs, iters=3, batch_size=100, rng=Rng(7))
    after = lsgan_loss(disc, epool, spool)
    assert after < before


def test_normalizer_count_grows_by_visited_states(riccati_demos):
    demos, _ = riccati_demos
    cfg = _small_cfg(max_iterations=3)
    _, norm, rows = train_ailsrs("lqr2d", demos, cfg)
    # 2N rollouts of full horizon per iteration
    assert norm.count == 3 * 2 * cfg.ars.n_directions * 100


def test_no_environment_reward_leakage(riccati_demos):
    demos, _ = riccati_demos
    corrupted = TrajectorySet(
        demos.env_name, demos.state_dim, demos.action_dim,
        [dataclasses.replace(t, env_rewards=t.env_rewards + 1000.0)
         for t in demos.trajectories])
    cfg = _small_cfg(max_iterations=4)
    pol_a, _, rows_a = train_ailsrs("lqr2d", demos, cfg)
    pol_b, _, rows_b = train_ailsrs("lqr2d", corrupted, cfg)
    assert pol_a.theta.tobytes() == pol_b.theta.tobytes()
    assert [_row_key(r) for r in rows_a] == [_row_key(r) for r in rows_b]


def test_train_ailsrs_rejects_mismatched_demos(riccati_demos):
    demos, _ = riccati_demos
    with pytest.raises(ValueError, match="lqr2d"):
        train_ailsrs("pendulum", demos, _small_cfg())


def test_train_ailsrs_rejects_empty_expert_set():
    empty = TrajectorySet("lqr2d", 2, 1, [])
    with pytest.raises(ValueError):
        train_ailsrs("lqr2d", empty, _small_cfg())


def test_metrics_rows_have_increasing_iterations(riccati_demos):
    demos, _ = riccati_demos
    cfg = _small_cfg(max_iterations=6, eval_every=2)
    _, _, rows = train_ailsrs("lqr2d", demos, cfg)
    assert len(rows) <= cfg.max_iterations
    ids = [r.iteration for r in rows]
    assert ids == sorted(ids) and len(set(ids)) == len(ids)
    # eval columns filled exactly on the eval cadence
    for r in rows:
        has_eval = r.eval_env_return_mean is not None
        assert has_eval == ((r.iteration + 1) % 2 == 0 or r.iteration == 5)


def test_evaluate_does_not_mutate_normalizer(riccati_demos):
    demos, _ = riccati_demos
    pol, norm, _ = riccati_optimal(episodes=1)
    norm.add_states(np.array([[0.1, 0.2], [0.3, -0.1], [0.0, 0.0]]))
    count_before = norm.count
    m1 = evaluate(pol, norm, "lqr2d", 5, 3)
    m2 = evaluate(pol, norm, "lqr2d", 5, 3)
    assert m1 == m2
    assert norm.count == count_before


def test_early_stop_honors_target(riccati_demos):
    demos, mean = riccati_demos
    # a target so loose any policy meets it at the first evaluation
    cfg = _small_cfg(max_iterations=50, eval_every=2,
                     early_stop_target=-1e9)
    _, _, rows = train_ailsrs("lqr2d", demos, cfg)
    assert len(rows) == 2  # stopped at the first eval iteration
    assert rows[-1].eval_env_return_mean is not None


def test_expert_search_improves_over_iteration_windows(lqr_expert_run):
    # mean evaluation return over consecutive 50-iteration windows keeps
    # improving; once the run sits on its noise plateau (the whitening-bias
    # cost floor, see the red acceptance criterion) windows wobble ~1%, so
    # a 2% slack separates genuine regressions from plateau noise
    evals = lqr_expert_run["evals"]
    windows = []
    for w in range(10):
        vals = [m for it, m in evals if 50 * w <= it < 50 * (w + 1)]
        windows.append(float(np.mean(vals)))
    assert all(b >= a + 0.02 * a for a, b in zip(windows, windows[1:])), windows
    # the early descent itself is strictly monotone
    assert all(b >= a for a, b in zip(windows[:6], windows[1:6])), windows


def test_write_metrics_format(tmp_path, riccati_demos):
    demos, _ = riccati_demos
    cfg = _small_cfg(max_iterations=4, eval_every=2)
    _, _, rows = train_ailsrs("lqr2d", demos, cfg)
    path = tmp_path / "metrics.csv"
    write_metrics(rows, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == METRICS_HEADER
    assert len(lines) == 1 + len(rows)
    # non-eval rows leave the eval cells empty
    first = lines[1].split(",")
    assert first[0] == "0" and first[4] == "" and first[5] == ""
    # eval rows round-trip through repr exactly
    second = lines[2].split(",")
    assert float(second[4]) == rows[1].eval_env_return_mean
