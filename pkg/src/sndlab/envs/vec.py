"""Vectorized stepping over E independent env instances.

All instances play the same World layout with independent episode state and
per-instance RNG streams. Finished episodes auto-reset: the returned row is
the reset observation and the terminal one is kept in the info dict. The
parallel scheduler partitions instances across threads and merges results in
index order, so serial and parallel stepping are bit-identical.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import ContractError
from .gridworld import GridWorld


class VecEnv:
    def __init__(self, world, n_envs, seed, parallel=False, workers=4):
        if n_envs < 1:
            raise ContractError(f"n_envs must be >= 1, got {n_envs}")
        self.world = world
        self.n_envs = n_envs
        self.envs = [GridWorld(world, seed=seed, index=i) for i in range(n_envs)]
        self.parallel = parallel
        self._pool = ThreadPoolExecutor(max_workers=workers) if parallel else None

    @property
    def obs_shape(self):
        return self.envs[0].obs_shape

    @property
    def n_actions(self):
        return self.envs[0].n_actions

    def reset(self):
        obs = np.stack([env.reset() for env in self.envs])
        infos = [
            {"room_id": self.world.room_of(env.pos), "visited_rooms": 1}
            for env in self.envs
        ]
        return obs, infos

    def _step_one(self, i, action):
        env = self.envs[i]
        obs, reward, done, info = env.step(action)
        if done:
            info["terminal_observation"] = obs
            info["episode_steps"] = env.steps
            obs = env.reset()
        return obs, reward, done, info

    def step(self, actions):
        if len(actions) != self.n_envs:
            raise ContractError(
                f"got {len(actions)} actions for {self.n_envs} envs"
            )
        if self._pool is not None:
            rows = list(self._pool.map(self._step_one, range(self.n_envs), actions))
        else:
            rows = [self._step_one(i, a) for i, a in enumerate(actions)]
        obs = np.stack([r[0] for r in rows])
        rewards = np.array([r[1] for r in rows], dtype=np.float32)
        dones = np.array([r[2] for r in rows], dtype=bool)
        infos = [r[3] for r in rows]
        return obs, rewards, dones, infos

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None
