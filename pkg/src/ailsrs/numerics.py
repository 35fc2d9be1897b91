"""Deterministic numeric substrate: seeded RNG, Adam, running statistics.

Everything here is driven by a splitmix64 generator so that any quantity in
the toolkit is a pure function of (seed, label path). Matrices and vectors
are plain float64 numpy arrays, row-major.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    """splitmix64 output mixer (finalizer)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Rng:
    """splitmix64 stream addressed by (seed, labels).

    The stream is a pure function of the root seed and the integer label
    path: each label is folded into the key with the splitmix64 mixer.
    Deriving sub-streams with fresh labels is how concurrent or repeated
    tasks get independent, reproducible randomness. Instances are cheap
    and must not be shared across tasks (drawing advances the state).
    """

    __slots__ = ("_key", "_state", "_gauss_cache")

    def __init__(self, seed: int, labels: tuple[int, ...] = ()):
        key = seed & _MASK64
        for lab in labels:
            key = _mix64(key ^ (lab & _MASK64))
        self._key = key
        self._state = key
        self._gauss_cache: float | None = None

    def derive(self, *labels: int) -> "Rng":
        """Independent sub-stream for the given extra labels."""
        return Rng(self._key, labels)

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK64
        return _mix64(self._state)

    def uniform(self) -> float:
        """Uniform draw in (0, 1], 53-bit resolution."""
        return ((self.next_u64() >> 11) + 1) * 2.0 ** -53

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return self.next_u64() % n

    def integers(self, n: int, size: int) -> np.ndarray:
        return np.array([self.below(n) for _ in range(size)], dtype=np.intp)

    def gaussian(self) -> float:
        """Standard normal via Box-Muller; the sine mate is cached."""
        if self._gauss_cache is not None:
            z = self._gauss_cache
            self._gauss_cache = None
            return z
        u1 = self.uniform()
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        t = 2.0 * math.pi * u2
        self._gauss_cache = r * math.sin(t)
        return r * math.cos(t)

    def gaussian_matrix(self, rows: int, cols: int) -> np.ndarray:
        """rows x cols standard-normal matrix, filled row-major."""
        if rows < 1 or cols < 1:
            raise ValueError("matrix dimensions must be >= 1")
        out = np.empty(rows * cols)
        for i in range(rows * cols):
            out[i] = self.gaussian()
        return out.reshape(rows, cols)


def rng_new(seed: int, labels: tuple[int, ...] = ()) -> Rng:
    return Rng(seed, labels)


@dataclass
class AdamState:
    """Adam moment buffers for a flat parameter vector."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n_params: int) -> "AdamState":
        return cls(m=np.zeros(n_params), v=np.zeros(n_params))


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray,
              lr: float) -> np.ndarray:
    """One Adam update with bias correction. Mutates `state`, returns new params."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError("params, grads and moment buffers must share a shape")
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return params - lr * m_hat / (np.sqrt(v_hat) + state.eps)


@dataclass
class RunningStats:
    """Welford accumulator for per-coordinate mean and population variance."""

    count: int = 0
    mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    m2: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def update(self, x: np.ndarray) -> None:
        """Fold one observation vector in (Welford's recurrence)."""
        x = np.asarray(x, dtype=float)
        if self.count == 0 and self.mean.size == 0:
            self.mean = np.zeros(x.shape)
            self.m2 = np.zeros(x.shape)
        if x.shape != self.mean.shape:
            raise ValueError(
                f"observation shape {x.shape} != stats shape {self.mean.shape}")
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    def merge_batch(self, xs: np.ndarray) -> None:
        """Fold a (B, n) block of observations in one pairwise merge."""
        xs = np.asarray(xs, dtype=float)
        if xs.size == 0:
            return
        if xs.ndim != 2:
            raise ValueError("merge_batch expects a 2-D (batch, dim) array")
        if self.count == 0 and self.mean.size == 0:
            self.mean = np.zeros(xs.shape[1])
            self.m2 = np.zeros(xs.shape[1])
        if xs.shape[1] != self.mean.shape[0]:
            raise ValueError(
                f"observation width {xs.shape[1]} != stats shape {self.mean.shape}")
        nb = xs.shape[0]
        mb = xs.mean(axis=0)
        m2b = ((xs - mb) ** 2).sum(axis=0)
        if self.count == 0:
            self.count, self.mean, self.m2 = nb, mb, m2b
            return
        na = self.count
        delta = mb - self.mean
        tot = na + nb
        self.mean = self.mean + delta * (nb / tot)
        self.m2 = self.m2 + m2b + delta * delta * (na * nb / tot)
        self.count = tot

    def variance(self) -> np.ndarray:
        """Population variance; zeros until the first observation."""
        if self.count == 0:
            return np.zeros(self.mean.shape)
        return self.m2 / self.count

    def copy(self) -> "RunningStats":
        return RunningStats(self.count, self.mean.copy(), self.m2.copy())


def welford_update(stats: RunningStats, x: np.ndarray) -> RunningStats:
    stats.update(x)
    return stats


def finite_diff(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function; test oracle only."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    grad = np.empty(x.shape)
    for i in range(x.size):
        step = np.zeros(x.shape)
        step.flat[i] = eps
        grad.flat[i] = (f(x + step) - f(x - step)) / (2.0 * eps)
    return grad
