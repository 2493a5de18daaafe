"""Seeded Laplace noise.

Draws come from a PCG64 stream read as raw 64-bit words. A word ``x`` maps
to ``u = ((x >> 11) + 0.5) / 2**53``, strictly inside (0, 1), and then to
``-scale * sign(u - 1/2) * log1p(-2|u - 1/2|)``. Integer steps are exact, so
replays depend only on the platform's ``log1p``.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

_TWO53 = float(2**53)


def derive_seed(seed: int, label: str) -> int:
    """64-bit child seed for a named sub-session."""
    h = hashlib.blake2b(f"{int(seed)}/{label}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "little")


class NoiseSource:
    """Source of i.i.d. Laplace draws.

    ``mode="zero"`` returns exactly 0 from every draw so mechanisms act as
    plain threshold comparators. ``scale_factor`` multiplies every scale and
    exists only to build deliberately broken variants for the privacy probe.
    """

    def __init__(self, seed: int, mode: str = "real", scale_factor: float = 1.0):
        if mode not in ("real", "zero"):
            raise ValueError(f"unknown noise mode {mode!r}")
        self.seed = int(seed) & (2**64 - 1)
        self.mode = mode
        self.scale_factor = float(scale_factor)
        self._bits = np.random.PCG64(self.seed)

    @property
    def zero(self) -> bool:
        return self.mode == "zero"

    def spawn(self, label: str) -> "NoiseSource":
        return NoiseSource(derive_seed(self.seed, label), self.mode, self.scale_factor)

    def uniform(self, size: int) -> np.ndarray:
        raw = self._bits.random_raw(size)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) / _TWO53

    def laplace(self, scale: float) -> float:
        if not scale > 0:
            raise ValueError(f"Laplace scale must be positive, got {scale}")
        if self.zero:
            return 0.0
        x = int(self._bits.random_raw())
        u = ((x >> 11) + 0.5) / _TWO53 - 0.5
        return -scale * self.scale_factor * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))

    def laplace_array(self, scale: float, size: int) -> np.ndarray:
        if not scale > 0:
            raise ValueError(f"Laplace scale must be positive, got {scale}")
        if self.zero:
            return np.zeros(size)
        u = self.uniform(size) - 0.5
        return -scale * self.scale_factor * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def lap_sample(scale: float, src: NoiseSource) -> float:
    return src.laplace(scale)


def adaptive_laplace(value: float, delta_total: float, eps: float, src: NoiseSource) -> float:
    """``value + Lap(delta_total / eps)``.

    The caller is responsible for the whole adaptive session having
    l1-sensitivity at most ``delta_total``.
    """
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    return value + src.laplace(delta_total / eps)
