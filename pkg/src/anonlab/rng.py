"""Deterministic random substreams derived from a master seed.

Every stochastic component takes an explicit numpy Generator.  Substreams
are keyed by an integer path (e.g. (cell_index, trial_index)), so trials
can run in any order, or in parallel, and still reproduce bit-identically.
"""

import numpy as np


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator for the given (seed, path) key."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)
