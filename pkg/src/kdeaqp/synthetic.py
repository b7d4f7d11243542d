"""Reproducible synthetic data from a SplitMix64 stream.

The generator is fully specified so any implementation reproduces the same
fixtures from the same seed:

* state ``s_0 = seed mod 2**64``; output ``i`` (``i = 1, 2, ...``) mixes
  ``s_i = s_0 + i * 0x9E3779B97F4A7C15 (mod 2**64)`` with
  ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
  z *= 0x94D049BB133111EB; z ^= z >> 31``.
* a uniform double in ``[0, 1)`` is ``(z >> 11) * 2**-53``.
* standard normals come in pairs from consecutive uniforms ``u1, u2``
  (Box-Muller): ``r = sqrt(-2 ln(1 - u1))``, ``r cos(2 pi u2)``,
  ``r sin(2 pi u2)``.
* a ``d x n`` dataset takes normals in order, sample by sample:
  sample ``j``, dimension ``i`` is normal number ``j*d + i``.
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of SplitMix64 seeded with ``seed``."""
    s0 = np.uint64(seed % 2 ** 64)
    i = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = s0 + i * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def uniform(seed: int, count: int) -> np.ndarray:
    return (splitmix64(seed, count) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def normal(seed: int, count: int) -> np.ndarray:
    pairs = (count + 1) // 2
    u = uniform(seed, 2 * pairs)
    r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    theta = 2.0 * np.pi * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:count]


def gaussian_dataset(n: int, d: int = 1, seed: int = 0) -> Dataset:
    """``d x n`` dataset of independent standard normals."""
    return Dataset(normal(seed, n * d).reshape(n, d).T)


def uniform_dataset(n: int, d: int = 1, seed: int = 0) -> Dataset:
    return Dataset(uniform(seed, n * d).reshape(n, d).T)
