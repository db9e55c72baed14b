"""Order-independent seed derivation."""

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from an arbitrary tuple of str/int parts."""
    digest = hashlib.blake2b(repr(tuple(parts)).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(*parts) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(*parts)))
