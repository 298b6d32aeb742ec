"""Seed derivation shared by every estimator.

A trial's randomness depends only on (master seed, trial index), so serial
and threaded runs see identical streams.
"""

import os

import numpy as np

_STREAMS = {"ranks": 0, "bits": 1}

MAX_SEED = 2**64 - 1


def trial_seed(master: int, trial: int) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=(int(trial),))
    return int(ss.generate_state(1, np.uint64)[0])


def trial_rng(seed: int, stream: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), _STREAMS[stream]])


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("OBLIV_MATCH_THREADS")
    return max(1, int(env)) if env else 1
