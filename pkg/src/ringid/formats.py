"""On-disk formats.

RLT1 latent file::

    b"RINGLAT1" | u32 channels | u32 N | u32 N | channels*N*N float32
    (all little-endian, channel-major then row-major)

RID1 key set file: ``key=value`` header lines followed by one
``key <index> bits=<binary> noise_seed=<u64>`` line per key.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .imprint import KeyPair, KeySet, WatermarkConfig
from .patterns import NoiseKey, RingKey, bits_to_index

LATENT_MAGIC = b"RINGLAT1"
KEYSET_VERSION = 1


class FormatError(ValueError):
    """Corrupt or unsupported file."""


# latents ---------------------------------------------------------------

def encode_latent(latent: np.ndarray) -> bytes:
    latent = np.asarray(latent)
    if latent.ndim != 3 or latent.shape[1] != latent.shape[2]:
        raise ValueError(f"latent must be (channels, N, N), got {latent.shape}")
    c, n, _ = latent.shape
    return LATENT_MAGIC + struct.pack("<III", c, n, n) + latent.astype("<f4").tobytes(order="C")


def decode_latent(blob: bytes) -> np.ndarray:
    if len(blob) < 20 or blob[:8] != LATENT_MAGIC:
        raise FormatError("not an RLT1 latent file (bad magic)")
    c, h, w = struct.unpack("<III", blob[8:20])
    if h != w:
        raise FormatError(f"non-square latent planes {h}x{w}")
    expected = 20 + 4 * c * h * w
    if len(blob) != expected:
        raise FormatError(f"latent payload is {len(blob)} bytes, expected {expected}")
    data = np.frombuffer(blob, dtype="<f4", offset=20).reshape(c, h, w)
    return data.astype(np.float64)


def write_latent(path, latent: np.ndarray) -> None:
    Path(path).write_bytes(encode_latent(latent))


def read_latent(path) -> np.ndarray:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return decode_latent(blob)


# key sets ----------------------------------------------------------------

def _fmt_float(x: float) -> str:
    return repr(float(x))


def dumps_keyset(ks: KeySet) -> str:
    cfg = ks.config
    lines = [
        f"version={KEYSET_VERSION}",
        f"N={cfg.n}",
        f"rings={cfg.r_min}..{cfg.r_max}",
        f"alpha={_fmt_float(cfg.alpha)}",
        f"eta={_fmt_float(cfg.eta)}",
        f"ring_channel={cfg.ring_channel}",
        f"noise_channels={','.join(str(c) for c in cfg.noise_channels)}",
        f"style={cfg.mask_style}",
        f"flags={','.join(cfg.flags)}",
        "lambda=" + ",".join(f"{c}:{_fmt_float(v)}" for c, v in sorted(ks.lam.items())),
        f"channels={cfg.channels}",
        f"seed={ks.build_seed}",
    ]
    for k in ks.keys:
        bits = "".join(str(b) for b in k.ring.bits)
        lines.append(f"key {k.key_index} bits={bits} noise_seed={k.noise.seed}")
    return "\n".join(lines) + "\n"


def _parse_channels(text: str) -> tuple:
    return tuple(int(t) for t in text.split(",") if t.strip())


def loads_keyset(text: str) -> KeySet:
    header: dict = {}
    key_lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("key "):
            key_lines.append((lineno, line))
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"line {lineno}: expected key=value, got {line!r}")
        header[name] = value
    if header.get("version") != str(KEYSET_VERSION):
        raise FormatError(f"unsupported key set version {header.get('version')!r}")
    try:
        r_min, r_max = (int(v) for v in header["rings"].split(".."))
        flags = set(f for f in header.get("flags", "").split(",") if f)
        unknown = flags - {"shift", "lossless", "discretize", "offset"}
        if unknown:
            raise FormatError(f"unknown flags {sorted(unknown)}")
        cfg = WatermarkConfig(
            n=int(header["N"]),
            channels=int(header.get("channels", 4)),
            ring_channel=int(header["ring_channel"]),
            noise_channels=_parse_channels(header["noise_channels"]),
            r_min=r_min,
            r_max=r_max,
            alpha=float(header["alpha"]),
            eta=float(header["eta"]),
            mask_style=header["style"],
            enable_shift="shift" in flags,
            enable_lossless="lossless" in flags,
            enable_discretize="discretize" in flags,
            baseline_center_offset="offset" in flags,
        )
        lam = {}
        for item in header["lambda"].split(","):
            c, v = item.split(":")
            lam[int(c)] = float(v)
        keys = []
        for lineno, line in key_lines:
            parts = line.split()
            fields = dict(p.split("=", 1) for p in parts[2:])
            index = int(parts[1])
            bits = tuple(int(b) for b in fields["bits"])
            if len(bits) != cfg.n_rings or bits_to_index(bits) != index:
                raise FormatError(f"line {lineno}: bits do not encode key {index}")
            keys.append(KeyPair(RingKey(bits, cfg.alpha, index),
                                NoiseKey(int(fields["noise_seed"]), cfg.noise_channels)))
        return KeySet(cfg, keys, lam, int(header.get("seed", 0)))
    except FormatError:
        raise
    except (KeyError, ValueError) as exc:
        raise FormatError(f"malformed key set: {exc}") from exc


def write_keyset(path, ks: KeySet) -> None:
    Path(path).write_text(dumps_keyset(ks))


def read_keyset(path) -> KeySet:
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    return loads_keyset(text)
