"""Central registry of named RNG streams.

Every stochastic consumer in a run draws from its own PCG64 stream derived
from the master seed and a fixed registry index. Adding a consumer therefore
never shifts the draws of existing ones, which is what makes runs with
different motivation variants share identical world layouts, network
initializations, and action noise.
"""

import numpy as np

from .errors import ContractError

STREAMS = {
    "world": 0,
    "env": 1,
    "policy_init": 2,
    "action": 3,
    "target_init": 4,
    "predictor_init": 5,
    "aux_init": 6,
    "predictor_batch": 7,
    "target_batch": 8,
    "minibatch": 9,
    "statelog": 10,
}


def stream(master_seed, name, *extra):
    """Independent Generator for the named stream.

    ``extra`` indices split a stream further (e.g. one per env instance).
    """
    if name not in STREAMS:
        raise ContractError(f"unknown RNG stream {name!r}")
    seq = np.random.SeedSequence(master_seed, spawn_key=(STREAMS[name], *extra))
    return np.random.Generator(np.random.PCG64(seq))
