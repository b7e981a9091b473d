"""Keyed random streams.

Every stochastic step draws from a Philox generator keyed by
``(seed, op_id, *counters)`` so that results do not depend on call order
and independent jobs can be replayed or sharded.
"""

from __future__ import annotations

import numpy as np

# op ids; never renumber, they are part of the reproducibility contract
OP_DATASET = 1
OP_MASKS = 2
OP_ZBATCH = 3
OP_TRAIN = 4
OP_SAMPLE = 5
OP_BASELINE = 6
OP_HPO_SPLIT = 7
OP_HPO_TRIAL = 8
OP_HPO_EVAL = 9
OP_MEDIAN = 10
OP_EXPVAL = 11


def stream(seed: int, *key: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


def child_seed(seed: int, *key: int) -> int:
    """Derive a 63-bit integer seed from a parent seed and a key path."""
    ss = np.random.SeedSequence([int(seed), *map(int, key)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
