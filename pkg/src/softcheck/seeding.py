"""Deterministic seed derivation and generator construction.

All randomness in the package flows through ``numpy.random.Generator``
instances built here. Sub-streams are derived by hashing a parent seed
together with a short text label, so independent concerns (weight init,
shuffling, data synthesis) never share a stream and the whole pipeline
is reproducible from a single integer.
"""

import hashlib

import numpy as np


def derive_seed(seed: int, label: str) -> int:
    """Derive a child seed from ``seed`` and a purpose label.

    The derivation is the first 8 bytes, little-endian, of
    ``SHA-256(f"{seed}:{label}")``. It is stable across platforms and
    Python versions.
    """
    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed: int) -> np.random.Generator:
    """Build a PCG64-backed generator for the given seed."""
    return np.random.Generator(np.random.PCG64(seed))
