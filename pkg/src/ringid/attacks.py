"""Latent-space surrogate attacks and the generate/invert channel model.

Geometric attacks act on each channel plane with bilinear resampling. The
rotation pivot is ((N-1)/2, (N-1)/2) so quarter turns are exact pixel
permutations. Out-of-frame samples are filled with 0, the latent mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import uniform_filter

from . import kernels
from .rng import Rng, mix64

QUANT_RANGE = 4.0
_KINDS = ("rotate", "crop_scale", "blur", "noise", "brightness", "quantize")
_CLI_NAMES = {"rotate": "rotate", "cs": "crop_scale", "blur": "blur", "noise": "noise",
              "bright": "brightness", "quant": "quantize"}
_CLI_LABELS = {v: k for k, v in _CLI_NAMES.items()}


class AttackParseError(ValueError):
    pass


def _warp(latent: np.ndarray, y0, yi, yj, x0, xi, xj, clamp: bool) -> np.ndarray:
    latent = np.asarray(latent, dtype=np.float64)
    out = np.empty_like(latent)
    for c in range(latent.shape[0]):
        kernels.affine_bilinear(np.ascontiguousarray(latent[c]), out[c],
                                y0, yi, yj, x0, xi, xj, clamp)
    return out


def _cos_sin(degrees: float) -> tuple[float, float]:
    d = degrees % 360.0
    exact = {0.0: (1.0, 0.0), 90.0: (0.0, 1.0), 180.0: (-1.0, 0.0), 270.0: (0.0, -1.0)}
    if d in exact:
        return exact[d]
    t = math.radians(d)
    return math.cos(t), math.sin(t)


def rotate(latent: np.ndarray, degrees: float, seed: int = 0) -> np.ndarray:
    """Counter-clockwise rotation as displayed (row 0 at the top), like PIL."""
    if degrees % 360.0 == 0.0:
        return np.array(latent, dtype=np.float64, copy=True)
    n = latent.shape[-1]
    c = (n - 1) / 2.0
    cs, sn = _cos_sin(degrees)
    # inverse map: source row = c + cs*(i-c) + sn*(j-c), col = c - sn*(i-c) + cs*(j-c)
    y0 = c - cs * c - sn * c
    x0 = c + sn * c - cs * c
    return _warp(latent, y0, cs, sn, x0, -sn, cs, clamp=False)


def crop_scale(latent: np.ndarray, area_fraction: float, seed: int = 0) -> np.ndarray:
    """Random square window of the given area, resized back to N x N."""
    if not 0.0 < area_fraction <= 1.0:
        raise ValueError("area fraction must lie in (0, 1]")
    n = latent.shape[-1]
    side = math.sqrt(area_fraction) * n
    rng = Rng(seed)
    oy = rng.uniform() * (n - side)
    ox = rng.uniform() * (n - side)
    s = side / n
    # pixel-center mapping: dest i -> oy + (i + 0.5) * s - 0.5
    return _warp(latent, oy + 0.5 * s - 0.5, s, 0.0, ox + 0.5 * s - 0.5, 0.0, s, clamp=True)


def blur(latent: np.ndarray, kernel_size: int) -> np.ndarray:
    """Box filter with zero-padded borders; even kernels span -k/2 .. k/2-1."""
    if kernel_size < 1:
        raise ValueError("kernel size must be >= 1")
    latent = np.asarray(latent, dtype=np.float64)
    if kernel_size == 1:
        return latent.copy()
    return uniform_filter(latent, size=(1, kernel_size, kernel_size), mode="constant", cval=0.0)


def add_noise(latent: np.ndarray, std: float, seed: int = 0) -> np.ndarray:
    if std < 0:
        raise ValueError("noise std must be non-negative")
    latent = np.asarray(latent, dtype=np.float64)
    if std == 0:
        return latent.copy()
    return latent + std * Rng(seed).normal(latent.shape)


def brightness(latent: np.ndarray, factor: float) -> np.ndarray:
    if factor <= 0:
        raise ValueError("brightness factor must be positive")
    return np.asarray(latent, dtype=np.float64) * factor


def quantize(latent: np.ndarray, levels: int) -> np.ndarray:
    """Mid-rise uniform quantiser over [-4, 4]; values outside are clamped."""
    if levels < 2:
        raise ValueError("need at least 2 levels")
    latent = np.asarray(latent, dtype=np.float64)
    step = 2.0 * QUANT_RANGE / levels
    idx = np.clip(np.floor((latent + QUANT_RANGE) / step), 0, levels - 1)
    return -QUANT_RANGE + (idx + 0.5) * step


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    param: float

    def __post_init__(self):
        k, p = self.kind, self.param
        if k not in _KINDS:
            raise ValueError(f"unknown attack kind {k!r}")
        ok = {
            "rotate": 0.0 <= p % 360.0 < 360.0,
            "crop_scale": 0.0 < p <= 1.0,
            "blur": p >= 1 and float(p).is_integer(),
            "noise": p >= 0.0,
            "brightness": p > 0.0,
            "quantize": p >= 2 and float(p).is_integer(),
        }[k]
        if not ok or not math.isfinite(p):
            raise ValueError(f"parameter {p} out of range for {k}")

    def apply(self, latent: np.ndarray, seed: int = 0) -> np.ndarray:
        k, p = self.kind, self.param
        if k == "rotate":
            return rotate(latent, p, seed)
        if k == "crop_scale":
            return crop_scale(latent, p, seed)
        if k == "blur":
            return blur(latent, int(p))
        if k == "noise":
            return add_noise(latent, p, seed)
        if k == "brightness":
            return brightness(latent, p)
        return quantize(latent, int(p))

    @property
    def label(self) -> str:
        p = int(self.param) if float(self.param).is_integer() else self.param
        return f"{_CLI_LABELS[self.kind]}={p}"


def parse_attacks(text: str) -> list[AttackSpec]:
    """Parse ``rotate=75,cs=0.75,...``; ``clean`` or an empty string means none."""
    specs = []
    for token in (t.strip() for t in text.split(",")):
        if token in ("", "clean", "none"):
            continue
        name, sep, value = token.partition("=")
        if not sep or name not in _CLI_NAMES:
            raise AttackParseError(f"malformed attack token {token!r}")
        try:
            specs.append(AttackSpec(_CLI_NAMES[name], float(value)))
        except ValueError as exc:
            raise AttackParseError(f"malformed attack token {token!r}: {exc}") from None
    return specs


@dataclass(frozen=True)
class ChannelModel:
    """Ordered attacks followed by additive inversion noise."""

    inversion_noise_std: float = 0.0
    attacks: tuple = field(default_factory=tuple)
    seed: int = 0

    def with_seed(self, seed: int) -> "ChannelModel":
        return replace(self, seed=seed)

    @property
    def label(self) -> str:
        return ",".join(a.label for a in self.attacks) or "clean"


def apply_channel(latent: np.ndarray, model: ChannelModel) -> np.ndarray:
    out = np.asarray(latent, dtype=np.float64)
    for i, attack in enumerate(model.attacks):
        out = attack.apply(out, mix64(model.seed, i))
    if model.inversion_noise_std > 0:
        out = add_noise(out, model.inversion_noise_std, mix64(model.seed, 0xFFFF))
    elif not model.attacks:
        out = out.copy()
    return out
