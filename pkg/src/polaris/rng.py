"""Counter-based random streams for trace simulation.

Every value is a pure function of its key words (seed, domain, group, trace,
cycle, lane...), so distinct keys give independent streams, identical keys
always reproduce the same bits, and traces can be generated in any order or
in parallel without changing the result.

The generator is the splitmix64 finalizer chained over the key words,
vectorized with numpy uint64 arithmetic.
"""

from __future__ import annotations

import hashlib

import numpy as np

# Stream domains; keeping them here avoids accidental key collisions between
# subsystems that share a user seed.
DOMAIN_INPUT = 0x01      # per-cycle stimulus bits
DOMAIN_SECRET = 0x02     # per-trace secret draws (random group)
DOMAIN_NOISE = 0x03      # per-trace per-gate gaussian noise
DOMAIN_FIXED_VALUE = 0x04
DOMAIN_SELECT = 0x05     # dataset-generation gate sampling
DOMAIN_PERM = 0x06       # permutation sampling in explanations

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(h: np.ndarray) -> np.ndarray:
    h = (h ^ (h >> np.uint64(30))) * _M1
    h = (h ^ (h >> np.uint64(27))) * _M2
    return h ^ (h >> np.uint64(31))


def _fold(h: np.ndarray, word) -> np.ndarray:
    return _mix((h + _GOLDEN) ^ np.asarray(word, dtype=np.uint64))


def hash_words(*words) -> np.ndarray:
    """Hash key words into uint64 values.

    Scalar words broadcast; array words may carry any mutually broadcastable
    shapes, so a full lattice of streams is produced in one call.  Strings
    are folded through a stable 64-bit digest.
    """
    with np.errstate(over="ignore"):
        h = np.asarray(np.uint64(0x243F6A8885A308D3))
        for w in words:
            if isinstance(w, str):
                w = int.from_bytes(
                    hashlib.blake2b(w.encode(), digest_size=8).digest(), "little")
            h = _fold(h, w)
        return _mix(h)


def bits(*words) -> np.ndarray:
    """Uniform {0, 1} bits, one per lattice point."""
    return (hash_words(*words) & np.uint64(1)).astype(np.uint8)


def uniforms(*words) -> np.ndarray:
    """Uniform floats in [0, 1)."""
    return (hash_words(*words) >> np.uint64(11)) * (2.0 ** -53)


def normals(*words) -> np.ndarray:
    """Standard normal draws via Box-Muller on two sub-lattices."""
    u1 = uniforms(*words, 0)
    u2 = uniforms(*words, 1)
    r = np.sqrt(-2.0 * np.log1p(-u1))
    return r * np.cos(2.0 * np.pi * u2)


def integer(*words) -> int:
    """A single derived 63-bit integer, handy for seeding sub-generators."""
    return int(hash_words(*words) >> np.uint64(1))


def generator(*words) -> np.random.Generator:
    """Sequential numpy generator deterministically keyed by the words."""
    return np.random.Generator(np.random.Philox(key=int(hash_words(*words))))
