"""Deterministic random streams.

All randomness in this package flows through numpy's PCG64 bit generator.
Independent streams are derived from a single 64-bit seed plus a string
label, so components that run side by side (population generation, each
optimizer run, each experiment cell) never share generator state and the
whole pipeline is reproducible from one integer.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["child_sequence", "stream", "as_generator"]

_SEED_MAX = 2**64


def _label_words(label: str) -> tuple[int, ...]:
    """Hash a stream label to four 32-bit words for SeedSequence spawning."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "big") for i in range(0, 16, 4))


def child_sequence(seed: int, *labels: str) -> np.random.SeedSequence:
    """Seed sequence for the stream identified by ``(seed, labels...)``."""
    seed = int(seed)
    if not 0 <= seed < _SEED_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    key: tuple[int, ...] = ()
    for label in labels:
        key = key + _label_words(label)
    return np.random.SeedSequence(entropy=seed, spawn_key=key)


def stream(seed: int, *labels: str) -> np.random.Generator:
    """Independent PCG64 generator for the stream ``(seed, labels...)``."""
    return np.random.Generator(np.random.PCG64(child_sequence(seed, *labels)))


def as_generator(seed_or_rng: int | np.random.Generator) -> np.random.Generator:
    """Pass generators through; wrap integer seeds in a fresh PCG64 stream."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return stream(seed_or_rng)
