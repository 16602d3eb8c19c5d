"""Seed handling.

Every random draw derives from one 64-bit root seed through numpy's
``SeedSequence`` spawn keys, feeding a PCG64 bit generator. PCG64 has a
fixed, published output stream, so samples are bit-reproducible across
platforms for a given numpy major version.

Keys are a path such as ``("sample", k)``; strings are hashed with CRC32
so the derivation does not depend on Python's randomized ``hash``.
"""

import zlib

import numpy as np


def _key_int(key):
    if isinstance(key, (int, np.integer)):
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def seed_sequence(seed, *keys):
    return np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(_key_int(k) for k in keys))


def derive(seed, *keys):
    """Generator for the sub-stream of ``seed`` addressed by ``keys``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *keys)))


def as_generator(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return derive(seed_or_rng)
