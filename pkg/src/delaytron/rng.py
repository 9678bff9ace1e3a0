"""Named, independent random streams derived from a single integer seed.

Each consumer (label sampling, delay sampling, dataset generation) draws from
its own stream so that, e.g., changing the maximum delay never perturbs the
sequence of sampled labels.
"""
import numpy as np

STREAMS = {"labels": 0, "delays": 1, "data": 2, "comparator": 3}


def rng_stream(seed: int, name: str) -> np.random.Generator:
    if name not in STREAMS:
        raise KeyError(f"unknown stream {name!r}; expected one of {sorted(STREAMS)}")
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(STREAMS[name],))
    return np.random.default_rng(seq)
