"""Deterministic RNG derivation.

All randomness in a run flows from one integer seed. Independent streams are
derived from (seed, stream id, index) tuples so any point in a run can be
reconstructed without replaying RNG history — this is what makes training
resumption bit-identical to an uninterrupted run.
"""

import numpy as np

STREAM_INIT = 0
STREAM_ENV = 1
STREAM_POLICY = 2
STREAM_EVAL_ENV = 3
STREAM_EVAL_POLICY = 4
STREAM_BASELINE = 5
STREAM_INTERACT = 6


def child_rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))
