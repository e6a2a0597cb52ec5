"""
Seed derivation helpers

All randomness flows from one master seed through numpy SeedSequence so that
per-sample and per-point streams depend only on (seed, index).
"""
import numpy as np


def derive_seed(seed, *path):
    """Derive a 32-bit integer seed from a master seed and an index path"""
    entropy = [int(seed)] + [int(p) for p in path]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def make_rng(seed, *path):
    """Generator seeded from (seed, *path)"""
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + [int(p) for p in path]))
