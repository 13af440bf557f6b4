"""Welford running statistics and observation preprocessing modes."""

import numpy as np

from ..errors import ContractError


class RunningStats:
    """Per-element running mean and variance (Welford's algorithm)."""

    def __init__(self, shape):
        self.count = 0
        self.mean = np.zeros(shape, dtype=np.float64)
        self._m2 = np.zeros(shape, dtype=np.float64)

    @property
    def var(self):
        if self.count < 2:
            return np.zeros_like(self.mean)
        return self._m2 / self.count

    @property
    def std(self):
        return np.sqrt(self.var)

    def update(self, obs):
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != self.mean.shape:
            raise ContractError(
                f"observation shape {obs.shape} != stats shape {self.mean.shape}"
            )
        self.count += 1
        delta = obs - self.mean
        self.mean += delta / self.count
        self._m2 += delta * (obs - self.mean)

    def update_batch(self, batch):
        for obs in batch:
            self.update(obs)

    def state(self):
        return {"count": self.count, "mean": self.mean, "m2": self._m2}

    def load_state(self, state):
        self.count = int(state["count"])
        self.mean = np.asarray(state["mean"], dtype=np.float64).copy()
        self._m2 = np.asarray(state["m2"], dtype=np.float64).copy()


PREPROCESS_MODES = ("normalize", "mean_subtract", "none")


def preprocess(obs, mode, stats=None):
    """Apply one of the three preprocessing modes to a frame or batch.

    normalize: (x - mean) / max(std, 1e-8), clipped to [-5, 5]
    mean_subtract: x - mean
    none: x unchanged

    Pure function of (obs, mode, stats snapshot); ``stats`` is required for
    the first two modes and broadcast over a leading batch axis if present.
    """
    if mode == "none":
        return obs
    if mode not in PREPROCESS_MODES:
        raise ContractError(f"unknown preprocessing mode {mode!r}")
    if stats is None:
        raise ContractError(f"mode {mode!r} needs running stats")
    mean = stats.mean.astype(np.float32)
    if mode == "mean_subtract":
        return obs - mean
    std = np.maximum(stats.std, 1e-8).astype(np.float32)
    return np.clip((obs - mean) / std, -5.0, 5.0)
