"""Evidence extraction, verification scores and multi-key identification.

Identification follows the heterogeneous rule: for every candidate key the
score is the minimum over watermarked channels of ``lambda_c * d_c``, and the
candidate with the lowest score wins (ties go to the lowest key index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, spectral
from .imprint import KeyPair, KeySet, WatermarkConfig, _check_latent, ring_pattern


def extract_ring_evidence(latent: np.ndarray, config: WatermarkConfig,
                          complex_values: bool = False) -> np.ndarray:
    """Masked coefficients of the ring channel, chessboard undone if shifted.

    Real parts by default, in row-major support order.
    """
    latent = _check_latent(latent, config)
    spec = spectral.dft2(latent[config.ring_channel])
    if config.enable_shift:
        spec = spectral.chessboard_modulate(spec)
    vals = spec[config.ring_mask.union]
    return vals if complex_values else vals.real.copy()


def l1_distance(evidence: np.ndarray, reference: np.ndarray, eta: float = 1.0) -> float:
    """``sum |evidence - eta * reference|``; supports must match."""
    evidence = np.asarray(evidence)
    reference = np.asarray(reference)
    if evidence.shape != reference.shape:
        raise ValueError(f"support mismatch: {evidence.shape} vs {reference.shape}")
    return float(np.sum(np.abs(evidence - eta * reference)))


def _l1_many(x: np.ndarray, refs: np.ndarray, scale: float) -> np.ndarray:
    out = np.empty(refs.shape[0])
    kernels.l1_rows(np.ascontiguousarray(refs, dtype=np.float64),
                    np.ascontiguousarray(x, dtype=np.float64), float(scale), out)
    return out


def channel_distances(latent: np.ndarray, keyset: KeySet, rows=None) -> dict:
    """Raw (un-normalised) l1 distance per channel for the selected key rows."""
    config = keyset.config
    latent = _check_latent(latent, config)
    refs = keyset.ring_refs if rows is None else keyset.ring_refs[rows]
    evidence = extract_ring_evidence(latent, config)
    out = {config.ring_channel: _l1_many(evidence, refs, config.eta)}
    if config.noise_channels:
        fields = keyset.noise_refs if rows is None else keyset.noise_refs[rows]
        for c in config.noise_channels:
            out[c] = _l1_many(latent[c].ravel(), fields, 1.0)
    return out


@dataclass(frozen=True, eq=False)
class MatchResult:
    key_indices: np.ndarray
    channels: tuple
    distances: np.ndarray  # (keys, channels), raw l1
    combined: np.ndarray  # (keys,)
    best_key: int
    best_score: float

    @property
    def per_key(self) -> list:
        return [(int(k), {c: float(d) for c, d in zip(self.channels, row)}, float(s))
                for k, row, s in zip(self.key_indices, self.distances, self.combined)]

    def top(self, k: int) -> list:
        order = np.lexsort((self.key_indices, self.combined))[:k]
        return [(int(self.key_indices[i]), float(self.combined[i])) for i in order]

    def score_of(self, key_index: int) -> float:
        hit = np.flatnonzero(self.key_indices == key_index)
        if hit.size == 0:
            raise KeyError(key_index)
        return float(self.combined[hit[0]])


def _combine(dists: dict, lam: dict) -> tuple[tuple, np.ndarray, np.ndarray]:
    channels = tuple(sorted(dists))
    raw = np.stack([dists[c] for c in channels], axis=1)
    scaled = raw * np.array([lam[c] for c in channels])[None, :]
    return channels, raw, scaled.min(axis=1)


def identify(latent: np.ndarray, keyset: KeySet) -> MatchResult:
    if len(keyset) == 0:
        raise ValueError("empty key set")
    channels, raw, combined = _combine(channel_distances(latent, keyset), keyset.lam)
    idx = keyset.key_indices
    best = int(np.lexsort((idx, combined))[0])
    return MatchResult(idx, channels, raw, combined, int(idx[best]), float(combined[best]))


def verify_score(latent: np.ndarray, pair: KeyPair, keyset: KeySet) -> float:
    """Combined score of one key; lower means more likely watermarked with it."""
    hit = np.flatnonzero(keyset.key_indices == pair.key_index)
    if hit.size == 0:
        raise KeyError(f"key {pair.key_index} not in key set")
    _, _, combined = _combine(channel_distances(latent, keyset, rows=hit), keyset.lam)
    return float(combined[0])


def reference_distance(latent: np.ndarray, pair: KeyPair, config: WatermarkConfig,
                       complex_values: bool = False) -> float:
    """Ring-channel l1 distance to one key, optionally on complex coefficients
    (the lossy baseline writes both parts)."""
    ev = extract_ring_evidence(latent, config, complex_values=complex_values)
    support = config.ring_mask.union
    ref = ring_pattern(pair, config).values[support]
    if complex_values and not config.enable_lossless:
        from .imprint import ring_pattern_imag

        ref = ref + 1j * ring_pattern_imag(pair, config).values[support]
    return l1_distance(ev, ref, config.eta)
