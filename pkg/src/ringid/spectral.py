"""Centered 2-D DFT machinery.

Conventions used everywhere in the package:

* forward transform is unnormalised, the inverse carries ``1/N**2``, so a
  unit-variance white plane has coefficients of complex variance ``N**2``;
* spectra are centered: the DC coefficient sits at ``(N//2, N//2)``;
* the point reflection ``(u, v) -> (-u, -v)`` maps centered index ``i`` to
  ``(N - i) % N``;
* the chessboard sign is ``(-1)**(i + j)`` on centered indices with ``(0, 0)``
  at the top-left. For even N the DC coefficient keeps its sign.
"""

from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    """Plane is not square with an even side."""


def _check_plane(a: np.ndarray) -> int:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square plane, got shape {a.shape}")
    n = a.shape[0]
    if n % 2:
        raise DimensionError(f"plane side must be even, got {n}")
    return n


def dft2(plane: np.ndarray) -> np.ndarray:
    """Unnormalised forward DFT of a real plane, DC moved to the center."""
    plane = np.asarray(plane, dtype=np.float64)
    _check_plane(plane)
    return np.fft.fftshift(np.fft.fft2(plane))


def idft2(spec: np.ndarray) -> np.ndarray:
    """Complex inverse of :func:`dft2` (1/N**2 normalisation)."""
    spec = np.asarray(spec, dtype=np.complex128)
    _check_plane(spec)
    return np.fft.ifft2(np.fft.ifftshift(spec))


def idft2_real(spec: np.ndarray) -> np.ndarray:
    """Inverse DFT keeping only the real part of the spatial result."""
    return idft2(spec).real.copy()


def reflect(spec: np.ndarray) -> np.ndarray:
    """``X[-u, -v]`` in centered indexing."""
    n = _check_plane(np.asarray(spec))
    idx = (n - np.arange(n)) % n
    return spec[np.ix_(idx, idx)]


def conjugate_symmetric_part(spec: np.ndarray) -> np.ndarray:
    """``(X[u,v] + conj(X[-u,-v])) / 2``, the spectrum of the real part."""
    spec = np.asarray(spec, dtype=np.complex128)
    return (spec + np.conj(reflect(spec))) / 2.0


def conjugate_antisymmetric_part(spec: np.ndarray) -> np.ndarray:
    spec = np.asarray(spec, dtype=np.complex128)
    return (spec - np.conj(reflect(spec))) / 2.0


def chessboard(n: int) -> np.ndarray:
    i = np.arange(n)
    return np.where((i[:, None] + i[None, :]) % 2 == 0, 1.0, -1.0)


def chessboard_modulate(spec: np.ndarray) -> np.ndarray:
    """Multiply by ``(-1)**(i+j)``; equals a circular spatial shift by N/2."""
    spec = np.asarray(spec)
    n = _check_plane(spec)
    return spec * chessboard(n)


def energy(spec: np.ndarray, mask: np.ndarray | None = None) -> float:
    """Sum of ``|X|**2`` over the mask (all coefficients when mask is None)."""
    spec = np.asarray(spec)
    if mask is None:
        return float(np.sum(np.abs(spec) ** 2))
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != spec.shape:
        raise DimensionError(f"mask shape {mask.shape} does not match spectrum {spec.shape}")
    return float(np.sum(np.abs(spec[mask]) ** 2))


def symmetrize_mask(mask: np.ndarray) -> np.ndarray:
    """Close a boolean mask under point reflection about the Fourier center."""
    mask = np.asarray(mask, dtype=bool)
    return mask | reflect(mask)


def direct_dft2(plane: np.ndarray) -> np.ndarray:
    """Quadratic-time reference DFT (explicit double sum), centered.

    Independent of numpy.fft; used as a test oracle only.
    """
    plane = np.asarray(plane, dtype=np.float64)
    n = _check_plane(plane)
    m = np.arange(n)
    freqs = m - n // 2  # centered frequency of each output index
    out = np.zeros((n, n), dtype=np.complex128)
    for a, u in enumerate(freqs):
        for b, v in enumerate(freqs):
            acc = 0j
            for r in range(n):
                for c in range(n):
                    acc += plane[r, c] * np.exp(-2j * np.pi * (u * r + v * c) / n)
            out[a, b] = acc
    return out
