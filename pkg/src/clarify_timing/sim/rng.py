"""Counter-based random streams keyed by experiment coordinates.

Every draw is made from a Philox generator whose key is a hash of the coordinates
it belongs to (model, variant, condition, seed, purpose). There is no shared
generator state, so results do not depend on execution order or thread count.
"""

import hashlib
from functools import lru_cache

import numpy as np


def stream_key(*parts: object) -> int:
    """128-bit Philox key derived from the given coordinates."""
    material = "\x1f".join(str(part) for part in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(material, digest_size=16).digest(), "little")


def keyed_generator(*parts: object) -> np.random.Generator:
    """Fresh generator for a coordinate tuple; equal tuples give equal streams."""
    return np.random.Generator(np.random.Philox(key=stream_key(*parts)))


@lru_cache(maxsize=4096)
def keyed_uniforms(count: int, *parts: object) -> tuple[float, ...]:
    """First `count` uniforms of the stream for `parts`."""
    return tuple(keyed_generator(*parts).random(count).tolist())
