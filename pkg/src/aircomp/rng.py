"""Seeding helpers.

The toolkit never touches numpy's global RNG state: every stochastic
operation takes either an integer seed or a ``numpy.random.Generator``.
Generators handed to parallel workers are split with ``spawn_generators``
so streams never overlap.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import InvalidArgumentError


def as_generator(seed_or_rng: int | np.random.Generator | None) -> np.random.Generator:
    """Coerce an int seed or an existing Generator into a Generator.

    ``None`` is rejected: callers that need randomness must say where it
    comes from.
    """
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    if isinstance(seed_or_rng, (int, np.integer)):
        return np.random.default_rng(int(seed_or_rng))
    raise InvalidArgumentError(
        f"expected an int seed or numpy Generator, got {type(seed_or_rng).__name__}"
    )


def spawn_generators(seed_or_rng: int | np.random.Generator, count: int) -> list[np.random.Generator]:
    """Split one seed/generator into `count` independent child generators."""
    if count < 1:
        raise InvalidArgumentError("count must be >= 1")
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng.spawn(count)
    seq = np.random.SeedSequence(int(seed_or_rng))
    return [np.random.default_rng(child) for child in seq.spawn(count)]


def derive_seed(*parts: int | str) -> int:
    """Stable 63-bit seed derived from a tuple of ints/strings.

    Used to decouple per-trial and per-round seeds from execution order:
    the same parts always yield the same seed, across runs and platforms.
    """
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
