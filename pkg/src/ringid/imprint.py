"""Watermark configuration, key sets and imprinting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from . import spectral
from .patterns import (
    NoiseKey,
    Pattern,
    RingKey,
    RingMask,
    build_ring_mask,
    encode_ring_key,
    sample_noise_field,
    sample_treering_pattern,
)
from .rng import Rng, mix64

LAMBDA_SAMPLES = 256
_RING_SEED_TAG = 0x52494E47  # "RING"
_IMAG_SEED_TAG = 0x494D4147  # "IMAG"
_LAMBDA_TAG = 0x4C414D42  # "LAMB"


class CapacityError(ValueError):
    pass


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class WatermarkConfig:
    n: int = 64
    channels: int = 4
    ring_channel: int = 3
    noise_channels: tuple = (0,)
    r_min: int = 3
    r_max: int = 14
    alpha: float = 64.0
    eta: float = 0.85
    mask_style: str = "rounder"
    enable_shift: bool = True
    enable_lossless: bool = True
    enable_discretize: bool = True
    baseline_center_offset: bool = False

    def __post_init__(self):
        object.__setattr__(self, "noise_channels", tuple(int(c) for c in self.noise_channels))
        if self.ring_channel in self.noise_channels:
            raise ValueError("ring channel cannot also carry the noise payload")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        for c in (self.ring_channel,) + self.noise_channels:
            if not 0 <= c < self.channels:
                raise ValueError(f"channel {c} outside latent with {self.channels} channels")
        if self.mask_style not in ("rounder", "naive"):
            raise ValueError(f"unknown mask style {self.mask_style!r}")
        build_ring_mask(self.r_min, self.r_max, self.n, self.mask_style)  # validates radii

    @property
    def n_rings(self) -> int:
        return self.r_max - self.r_min

    @property
    def capacity(self) -> int:
        return 1 << self.n_rings

    @property
    def ring_sigma(self) -> float:
        """Std of per-ring Gaussian values when discretization is off.

        Lossless mode matches the +-alpha RMS; the lossy baseline draws each
        component like a coefficient of white noise, N/sqrt(2).
        """
        return self.alpha if self.enable_lossless else self.n / math.sqrt(2.0)

    @property
    def mask_center(self) -> tuple[float, float]:
        c = self.n / 2.0
        return (c - 1.0, c) if self.baseline_center_offset else (c, c)

    @cached_property
    def ring_mask(self) -> RingMask:
        return build_ring_mask(self.r_min, self.r_max, self.n, self.mask_style,
                               center=self.mask_center,
                               symmetrize=not self.baseline_center_offset)

    @property
    def flags(self) -> list[str]:
        names = [("shift", self.enable_shift), ("lossless", self.enable_lossless),
                 ("discretize", self.enable_discretize), ("offset", self.baseline_center_offset)]
        return [name for name, on in names if on]

    def without(self, component: str) -> "WatermarkConfig":
        """Ablated copy: 'shift', 'lossless', 'rounder', 'discretize' or 'heterogeneous'."""
        if component == "shift":
            return replace(self, enable_shift=False)
        if component == "lossless":
            return replace(self, enable_lossless=False, baseline_center_offset=True)
        if component == "rounder":
            return replace(self, mask_style="naive")
        if component == "discretize":
            return replace(self, enable_discretize=False)
        if component == "heterogeneous":
            return replace(self, noise_channels=())
        raise ValueError(f"unknown component {component!r}")


def treering_baseline(**overrides) -> WatermarkConfig:
    """The lossy Tree-Ring path: off-center naive rings, Gaussian complex values."""
    base = dict(mask_style="naive", enable_shift=False, enable_lossless=False,
                enable_discretize=False, baseline_center_offset=True, noise_channels=(),
                eta=1.0)
    base.update(overrides)
    return WatermarkConfig(**base)


@dataclass(frozen=True)
class KeyPair:
    ring: RingKey
    noise: NoiseKey

    @property
    def key_index(self) -> int:
        return self.ring.key_index

    @property
    def ring_seed(self) -> int:
        return mix64(self.noise.seed, _RING_SEED_TAG)


def ring_pattern(pair: KeyPair, config: WatermarkConfig) -> Pattern:
    """Real part of the key's ring reference, before eta and shift."""
    if config.enable_discretize:
        return encode_ring_key(pair.ring, config.ring_mask)
    return sample_treering_pattern(pair.ring_seed, config.ring_mask, config.ring_sigma)


def ring_pattern_imag(pair: KeyPair, config: WatermarkConfig) -> Pattern:
    """Imaginary component written by the lossy path."""
    if config.enable_discretize:
        return ring_pattern(pair, config)
    return sample_treering_pattern(mix64(pair.ring_seed, _IMAG_SEED_TAG), config.ring_mask,
                                   config.ring_sigma)


def noise_field(pair: KeyPair, config: WatermarkConfig) -> np.ndarray:
    return sample_noise_field(pair.noise, config.n)


def sample_latent(seed: int, config: WatermarkConfig | None = None, channels: int | None = None,
                  n: int | None = None) -> np.ndarray:
    """Seeded unit-Gaussian latent of shape (channels, N, N)."""
    config = config or WatermarkConfig()
    c = channels or config.channels
    n = n or config.n
    return Rng(seed).normal((c, n, n))


def _check_latent(latent: np.ndarray, config: WatermarkConfig) -> np.ndarray:
    latent = np.asarray(latent, dtype=np.float64)
    if latent.shape != (config.channels, config.n, config.n):
        raise ShapeError(f"latent shape {latent.shape} does not match "
                         f"({config.channels}, {config.n}, {config.n})")
    if not np.all(np.isfinite(latent)):
        raise ValueError("latent contains non-finite values")
    return latent


def imprint(latent: np.ndarray, pair: KeyPair, config: WatermarkConfig) -> np.ndarray:
    """Watermark a latent with one key pair.

    Ring channel: masked coefficients are overwritten with the (eta-scaled,
    optionally chessboard-shifted) pattern. In lossless mode only the real
    part is written and the imaginary part zeroed, which keeps the spectrum
    conjugate symmetric so the real-part roundtrip is exact. Otherwise both
    parts are written and the roundtrip projects them onto the
    conjugate-symmetric part. Noise channels are replaced by the key's field.
    """
    out = _check_latent(latent, config).copy()
    support = config.ring_mask.union
    real = ring_pattern(pair, config).values * config.eta
    imag = None if config.enable_lossless else ring_pattern_imag(pair, config).values * config.eta
    if config.enable_shift:
        real = spectral.chessboard_modulate(real)
        if imag is not None:
            imag = spectral.chessboard_modulate(imag)
    spec = spectral.dft2(out[config.ring_channel])
    spec[support] = real[support] if imag is None else real[support] + 1j * imag[support]
    out[config.ring_channel] = spectral.idft2_real(spec)
    if config.noise_channels:
        field = noise_field(pair, config)
        for c in config.noise_channels:
            out[c] = field
    return out


def imprint_iid_noise(latent: np.ndarray, mask: np.ndarray, seed: int,
                      channel: int | None = None) -> np.ndarray:
    """Overwrite masked coefficients with fresh N_C(0, N^2) draws, no symmetry.

    Acts on every channel unless ``channel`` is given.
    """
    out = np.array(latent, dtype=np.float64, copy=True)
    mask = np.asarray(mask, dtype=bool)
    n = out.shape[-1]
    rng = Rng(seed)
    channels = range(out.shape[0]) if channel is None else [channel]
    m = int(mask.sum())
    for c in channels:
        spec = spectral.dft2(out[c])
        spec[mask] = rng.complex_normal((m,), float(n * n))
        out[c] = spectral.idft2_real(spec)
    return out


@dataclass(eq=False)
class KeySet:
    config: WatermarkConfig
    keys: list
    lam: dict
    build_seed: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.keys) > self.config.capacity:
            raise CapacityError(f"{len(self.keys)} keys exceed capacity {self.config.capacity}")
        idx = [k.key_index for k in self.keys]
        if len(set(idx)) != len(idx):
            raise ValueError("duplicate key indices")
        if any(v <= 0 for v in self.lam.values()):
            raise ValueError("lambda values must be positive")

    def __len__(self) -> int:
        return len(self.keys)

    @property
    def key_indices(self) -> np.ndarray:
        return np.array([k.key_index for k in self.keys], dtype=np.int64)

    def find(self, key_index: int) -> KeyPair:
        for k in self.keys:
            if k.key_index == key_index:
                return k
        raise KeyError(f"key {key_index} not in key set")

    def subset(self, n_keys: int) -> "KeySet":
        """The first n_keys keys, sharing normalizers and cached references."""
        sub = KeySet(self.config, self.keys[:n_keys], dict(self.lam), self.build_seed)
        sub._cache = {name: arr[:n_keys] for name, arr in self.ring_refs_and_fields().items()}
        return sub

    def ring_refs_and_fields(self) -> dict:
        if not self._cache:
            self._cache["ring"] = reference_matrix(self.keys, self.config)
            if self.config.noise_channels:
                self._cache["noise"] = np.stack(
                    [noise_field(k, self.config).ravel() for k in self.keys]) \
                    if self.keys else np.zeros((0, self.config.n ** 2))
        return self._cache

    @property
    def ring_refs(self) -> np.ndarray:
        return self.ring_refs_and_fields()["ring"]

    @property
    def noise_refs(self) -> np.ndarray:
        return self.ring_refs_and_fields()["noise"]


def reference_matrix(keys, config: WatermarkConfig) -> np.ndarray:
    """Row k: the masked real reference values of key k (row-major support)."""
    support = config.ring_mask.union
    m = int(support.sum())
    if not keys:
        return np.zeros((0, m))
    if config.enable_discretize:
        ring_of = config.ring_mask.ring_of_support
        signs = np.array([k.ring.bits for k in keys], dtype=np.float64) * 2.0 - 1.0
        alphas = np.array([k.ring.alpha for k in keys])[:, None]
        return np.ascontiguousarray(signs[:, ring_of] * alphas)
    return np.stack([ring_pattern(k, config).values[support] for k in keys])


def build_keyset(n_keys: int, config: WatermarkConfig, seed: int) -> KeySet:
    """Draw n_keys distinct ring indices and noise seeds, then estimate the
    per-channel normalizers from LAMBDA_SAMPLES unwatermarked latents."""
    if n_keys < 1:
        raise ValueError("need at least one key")
    if n_keys > config.capacity:
        raise CapacityError(f"{n_keys} keys exceed capacity 2**{config.n_rings} = {config.capacity}")
    rng = Rng(seed)
    # kept in draw order so that every prefix (see KeySet.subset) is a
    # uniform random subset rather than a run of neighbouring indices
    indices = rng.sample_without_replacement(config.capacity, n_keys)
    keys = [KeyPair(RingKey.from_index(i, config.n_rings, config.alpha),
                    NoiseKey(rng.u64(), config.noise_channels))
            for i in indices]
    ks = KeySet(config, keys, {config.ring_channel: 1.0, **{c: 1.0 for c in config.noise_channels}},
                seed)
    ks.lam = estimate_lambda(ks, mix64(seed, _LAMBDA_TAG))
    return ks


def estimate_lambda(keyset: KeySet, seed: int, samples: int = LAMBDA_SAMPLES) -> dict:
    """lambda_c = 1 / mean distance between null latents and channel c's payload.

    Null latent j is compared with key ``j % len(keys)``.
    """
    from .detect import channel_distances  # circular at import time

    config = keyset.config
    totals: dict = {}
    for j in range(samples):
        latent = sample_latent(mix64(seed, j), config)
        k = j % len(keyset)
        dists = channel_distances(latent, keyset, rows=np.array([k]))
        for c, d in dists.items():
            totals[c] = totals.get(c, 0.0) + float(d[0])
    return {c: samples / total for c, total in totals.items()}
