"""One 64-bit seed, split into independent counter-based streams per component."""

import numpy as np

COMPONENTS = {"sampler": 0, "init": 1, "scenario": 2, "params": 3}


def rng(seed: int, component: str, *counter: int) -> np.random.Generator:
    key = (COMPONENTS[component], *counter)
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
