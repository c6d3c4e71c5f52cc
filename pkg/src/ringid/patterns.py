"""Ring masks, ring keys and Gaussian payloads."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Rng
from .spectral import symmetrize_mask

ANGLE_STEP_DEG = 0.25


class RadiusError(ValueError):
    pass


def _center(n: int, center) -> tuple[float, float]:
    return (n / 2.0, n / 2.0) if center is None else (float(center[0]), float(center[1]))


def _check_radius(r: int, n: int) -> None:
    if r < 0 or r >= n // 2:
        raise RadiusError(f"ring radius {r} outside [0, {n // 2})")


def rounder_ring_annulus(r: int, n: int, center=None, symmetrize: bool = True) -> np.ndarray:
    """Trace a point at distance r around the center in 0.25 degree steps and
    mark the nearest pixel of each position."""
    _check_radius(r, n)
    cy, cx = _center(n, center)
    theta = np.deg2rad(np.arange(0.0, 360.0, ANGLE_STEP_DEG))
    rows = np.floor(cy + r * np.sin(theta) + 0.5).astype(int)
    cols = np.floor(cx + r * np.cos(theta) + 0.5).astype(int)
    mask = np.zeros((n, n), dtype=bool)
    mask[rows % n, cols % n] = True
    return symmetrize_mask(mask) if symmetrize else mask


def naive_ring_annulus(r: int, n: int, center=None, symmetrize: bool = True) -> np.ndarray:
    """Pixels with ``r <= dist(pixel, center) < r + 1``."""
    _check_radius(r, n)
    cy, cx = _center(n, center)
    yy, xx = np.mgrid[0:n, 0:n]
    dist = np.hypot(yy - cy, xx - cx)
    mask = (dist >= r) & (dist < r + 1)
    return symmetrize_mask(mask) if symmetrize else mask


_RASTERIZERS = {"rounder": rounder_ring_annulus, "naive": naive_ring_annulus}


@dataclass(frozen=True, eq=False)
class RingMask:
    size: int
    r_min: int
    r_max: int
    style: str
    annuli: tuple = field(repr=False)
    center: tuple = (None, None)

    @property
    def n_rings(self) -> int:
        return len(self.annuli)

    @property
    def union(self) -> np.ndarray:
        return self.labels >= 0

    @property
    def labels(self) -> np.ndarray:
        """Ring index per pixel, -1 outside every annulus."""
        lab = np.full((self.size, self.size), -1, dtype=np.int64)
        for i, a in enumerate(self.annuli):
            lab[a] = i
        return lab

    @property
    def ring_of_support(self) -> np.ndarray:
        """Ring index of each support pixel in row-major order."""
        lab = self.labels
        return lab[lab >= 0]

    def sizes(self) -> list[int]:
        return [int(a.sum()) for a in self.annuli]


def build_ring_mask(r_min: int, r_max: int, n: int, style: str = "rounder",
                    center=None, symmetrize: bool = True) -> RingMask:
    """One annulus per radius in ``range(r_min, r_max)``; a pixel claimed by
    two annuli stays with the inner one."""
    if not (0 <= r_min < r_max <= n // 2 - 1):
        raise RadiusError(f"need 0 <= r_min < r_max <= {n // 2 - 1}, got {r_min}..{r_max}")
    try:
        raster = _RASTERIZERS[style]
    except KeyError:
        raise ValueError(f"unknown ring style {style!r}") from None
    taken = np.zeros((n, n), dtype=bool)
    annuli = []
    for r in range(r_min, r_max):
        a = raster(r, n, center=center, symmetrize=symmetrize) & ~taken
        taken |= a
        a.setflags(write=False)
        annuli.append(a)
    return RingMask(n, r_min, r_max, style, tuple(annuli), tuple(_center(n, center)))


# keys -----------------------------------------------------------------

def index_to_bits(index: int, n_bits: int) -> tuple[int, ...]:
    """Big-endian bit vector; bit 0 belongs to the innermost ring."""
    if not 0 <= index < (1 << n_bits):
        raise ValueError(f"key index {index} exceeds capacity 2**{n_bits}")
    return tuple((index >> (n_bits - 1 - i)) & 1 for i in range(n_bits))


def bits_to_index(bits) -> int:
    k = 0
    for b in bits:
        k = (k << 1) | int(b)
    return k


@dataclass(frozen=True)
class RingKey:
    bits: tuple
    alpha: float
    key_index: int

    def __post_init__(self):
        if self.key_index >= 1 << len(self.bits):
            raise ValueError("key_index exceeds 2**len(bits)")

    @classmethod
    def from_index(cls, index: int, n_rings: int, alpha: float) -> "RingKey":
        return cls(index_to_bits(index, n_rings), float(alpha), index)


@dataclass(frozen=True)
class NoiseKey:
    seed: int
    channels: tuple = (0,)


@dataclass(frozen=True, eq=False)
class Pattern:
    """Real values on a support mask; zero elsewhere."""

    values: np.ndarray = field(repr=False)
    support: np.ndarray = field(repr=False)

    @property
    def vector(self) -> np.ndarray:
        return self.values[self.support]

    def scaled(self, factor: float) -> "Pattern":
        return Pattern(self.values * factor, self.support)


def _ring_pattern(ring_values, mask: RingMask) -> Pattern:
    lut = np.asarray(ring_values, dtype=np.float64)
    lab = mask.labels
    values = np.zeros((mask.size, mask.size))
    support = lab >= 0
    values[support] = lut[lab[support]]
    return Pattern(values, support)


def encode_ring_key(key: RingKey, mask: RingMask) -> Pattern:
    """Bit 1 -> +alpha, bit 0 -> -alpha on every pixel of that ring."""
    if len(key.bits) != mask.n_rings:
        raise ValueError(f"key has {len(key.bits)} bits, mask has {mask.n_rings} rings")
    return _ring_pattern([key.alpha if b else -key.alpha for b in key.bits], mask)


def sample_treering_pattern(seed: int, mask: RingMask, sigma: float) -> Pattern:
    """One N(0, sigma^2) value per ring, shared by all its pixels."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return _ring_pattern(Rng(seed).normal(mask.n_rings) * sigma, mask)


def sample_noise_field(key: NoiseKey, n: int) -> np.ndarray:
    """Unit-variance white Gaussian plane determined by the key's seed."""
    return Rng(key.seed).normal((n, n))


# rotation diagnostics ---------------------------------------------------

def rotate_mask_nearest(mask: np.ndarray, degrees: float, center=None) -> np.ndarray:
    """Nearest-neighbour rotation of a boolean mask (inverse mapping)."""
    n = mask.shape[0]
    cy, cx = _center(n, center)
    t = math.radians(degrees)
    yy, xx = np.mgrid[0:n, 0:n]
    dy, dx = yy - cy, xx - cx
    sy = np.floor(cy + math.cos(t) * dy - math.sin(t) * dx + 0.5).astype(int)
    sx = np.floor(cx + math.sin(t) * dy + math.cos(t) * dx + 0.5).astype(int)
    ok = (sy >= 0) & (sy < n) & (sx >= 0) & (sx < n)
    out = np.zeros_like(mask, dtype=bool)
    out[ok] = mask[sy[ok], sx[ok]]
    return out


def jaccard(a: np.ndarray, b: np.ndarray) -> float:
    union = np.count_nonzero(a | b)
    return 1.0 if union == 0 else np.count_nonzero(a & b) / union


def rotational_jaccard(mask: np.ndarray, angles=(10, 37, 75, 133), center=None) -> float:
    """Minimum Jaccard similarity between a mask and its rotations."""
    return min(jaccard(mask, rotate_mask_nearest(mask, a, center)) for a in angles)
