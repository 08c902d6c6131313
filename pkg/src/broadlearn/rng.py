"""Seeded, splittable random streams.

Every random draw in the package comes from a stream addressed by
(seed, kind, index) through numpy's SeedSequence spawn keys. Streams are
independent of when they are drawn, so a model grown window-by-window uses
exactly the same weights as one built with all windows up front.

Stream kinds:
  0  feature windows        (index = window position in the bank)
  1  enhancement groups     (index = group position in the bank)
  2  connection layers      (index 0)
  3  data splits / shuffles (index = purpose-specific)
  4  search trials          (index = trial number)
"""

import numpy as np

FEATURE = 0
ENHANCEMENT = 1
CONNECTION = 2
SPLIT = 3
TRIAL = 4


def stream_rng(seed: int, kind: int, index: int = 0) -> np.random.Generator:
    """Generator for the (seed, kind, index) stream."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(kind, index)))


def derive_seed(seed: int, kind: int, index: int = 0) -> int:
    """A 64-bit seed derived deterministically from the stream address."""
    state = np.random.SeedSequence(entropy=seed, spawn_key=(kind, index)).generate_state(2)
    return (int(state[0]) << 32) | int(state[1])
