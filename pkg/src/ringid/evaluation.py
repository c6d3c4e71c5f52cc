"""Detection metrics, identification benchmarks and the Monte-Carlo checks of
the imaginary-discard distribution shift.

Score orientation: watermarked scores are expected to be LOWER than null
scores throughout.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .attacks import ChannelModel, apply_channel
from .detect import identify, reference_distance, verify_score
from .imprint import (
    KeySet,
    WatermarkConfig,
    imprint,
    imprint_iid_noise,
    sample_latent,
    treering_baseline,
)
from .patterns import build_ring_mask
from .rng import Rng, mix64

SHIFT_FACTOR = math.sqrt(3.0) / 2.0
MIN_TRIALS = 100
# inversion-noise std at which the lossy baseline's clean per-pixel watermarked
# distance lands near the reported control value (about 51.5), averaged over
# key draws; a single key can sit several units away
CALIBRATED_INVERSION_STD = 0.57
Z95 = 1.959963984540054


class TrialCountError(ValueError):
    pass


def _check_trials(trials: int, minimum: int = MIN_TRIALS) -> None:
    if trials < minimum:
        raise TrialCountError(f"need at least {minimum} trials, got {trials}")


# metrics ---------------------------------------------------------------

def _as_scores(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).ravel()
    if a.size == 0:
        raise ValueError("score list is empty")
    return a


def auc(watermarked, null) -> float:
    """Mann-Whitney: fraction of (w, n) pairs with w < n, ties count 1/2."""
    w = _as_scores(watermarked)
    n = np.sort(_as_scores(null))
    below = np.searchsorted(n, w, side="left")  # nulls strictly below w
    not_above = np.searchsorted(n, w, side="right")
    greater = n.size - not_above
    ties = not_above - below
    return float((greater.sum() + 0.5 * ties.sum()) / (w.size * n.size))


def tpr_at_fpr(watermarked, null, fpr_target: float = 0.01) -> float:
    """TPR of the rule ``score < t`` at the largest t whose empirical FPR
    stays within the target."""
    w = _as_scores(watermarked)
    n = np.sort(_as_scores(null))
    allowed = int(math.floor(fpr_target * n.size + 1e-12))
    if allowed >= n.size:
        return 1.0
    threshold = n[allowed]
    return float(np.mean(w < threshold))


@dataclass(frozen=True)
class RocCurve:
    points: tuple  # ((fpr, tpr), ...) sorted by fpr
    auc: float
    tpr_at_1pct_fpr: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["fpr", "tpr"])
        for f, t in self.points:
            wr.writerow([repr(f), repr(t)])
        return buf.getvalue()

    def trapezoid_area(self) -> float:
        pts = np.array(self.points)
        return float(np.sum(np.diff(pts[:, 0]) * (pts[1:, 1] + pts[:-1, 1]) / 2.0))


def roc_curve(watermarked, null) -> RocCurve:
    """Empirical ROC for the rule ``score <= t`` over all distinct scores."""
    w = np.sort(_as_scores(watermarked))
    n = np.sort(_as_scores(null))
    thresholds = np.unique(np.concatenate([w, n]))
    tpr = np.searchsorted(w, thresholds, side="right") / w.size
    fpr = np.searchsorted(n, thresholds, side="right") / n.size
    points = [(0.0, 0.0)] + [(float(f), float(t)) for f, t in zip(fpr, tpr)]
    return RocCurve(tuple(points), auc(w, n), tpr_at_fpr(w, n, 0.01))


# identification ---------------------------------------------------------

@dataclass(frozen=True)
class BenchRow:
    attack: str
    n_keys: int
    trials: int
    accuracy: float
    mean_match_dist: float
    std_match_dist: float
    mean_null_dist: float
    std_null_dist: float
    seed: int


CSV_HEADER = ("attack", "n_keys", "trials", "accuracy", "mean_match_dist", "mean_null_dist", "seed")


@dataclass
class BenchReport:
    config_digest: str
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_HEADER)
        for r in self.rows:
            wr.writerow([r.attack, r.n_keys, r.trials, f"{r.accuracy:.6f}",
                         f"{r.mean_match_dist:.6f}", f"{r.mean_null_dist:.6f}", r.seed])
        return buf.getvalue()


def identification_bench(keyset: KeySet, channel: ChannelModel, n_keys_assigned: int,
                         trials: int, seed: int) -> BenchRow:
    """Imprint a random assigned key into a fresh latent, pass it through the
    channel and identify it among the assigned keys.

    Matched distance is the true key's combined score; the null distance is
    the same key's score on an unwatermarked latent sent through the channel.
    """
    if trials <= 0:
        raise TrialCountError("trials must be positive")
    if not 1 <= n_keys_assigned <= len(keyset):
        raise ValueError(f"n_keys_assigned must lie in [1, {len(keyset)}]")
    ks = keyset.subset(n_keys_assigned)
    cfg = ks.config
    pick = Rng(mix64(seed, 0x4B4559))
    hits = 0
    matched, null = [], []
    for t in range(trials):
        tseed = mix64(seed, t)
        pair = ks.keys[pick.integer(n_keys_assigned)]
        latent = sample_latent(mix64(tseed, 1), cfg)
        received = apply_channel(imprint(latent, pair, cfg), channel.with_seed(mix64(tseed, 2)))
        result = identify(received, ks)
        hits += result.best_key == pair.key_index
        matched.append(result.score_of(pair.key_index))
        clean = apply_channel(sample_latent(mix64(tseed, 3), cfg), channel.with_seed(mix64(tseed, 4)))
        null.append(verify_score(clean, pair, ks))
    return BenchRow(channel.label, n_keys_assigned, trials, hits / trials,
                    float(np.mean(matched)), float(np.std(matched)),
                    float(np.mean(null)), float(np.std(null)), seed)


def run_bench(keyset: KeySet, attack_grid, key_counts, trials: int, sigma_inv: float,
              seed: int, workers: int = 1) -> BenchReport:
    """Grid of identification benchmarks; row order is attack-major."""
    jobs = []
    for a_i, attacks in enumerate(attack_grid):
        for n_keys in key_counts:
            model = ChannelModel(sigma_inv, tuple(attacks), 0)
            jobs.append((model, n_keys, mix64(seed, a_i)))

    def run(job):
        model, n_keys, s = job
        return identification_bench(keyset, model, n_keys, trials, s)

    keyset.ring_refs_and_fields()  # fill the cache before threads share it
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(j) for j in jobs]
    return BenchReport(config_digest(keyset.config), rows)


def config_digest(config: WatermarkConfig) -> str:
    import hashlib

    text = repr(sorted((k, v) for k, v in vars(config).items() if k != "ring_mask"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# distribution shift -----------------------------------------------------

def default_mask(n: int = 64) -> np.ndarray:
    return build_ring_mask(3, 14, n).union


def _ratio_ci(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Ratio of means with a delta-method normal half-width."""
    ma, mb = a.mean(), b.mean()
    r = ma / mb
    if a.size < 2:
        return float(r), float("inf")
    cov = np.cov(a, b)
    var = (cov[0, 0] - 2 * r * cov[0, 1] + r * r * cov[1, 1]) / (a.size * mb * mb)
    return float(r), float(Z95 * math.sqrt(max(var, 0.0)))


@dataclass(frozen=True)
class ShiftResult:
    ratio: float
    ci_halfwidth: float
    mean_shifted_l1: float
    mean_unshifted_l1: float
    samples: int


def shift_factor_experiment(n: int, mask, trials: int, seed: int) -> ShiftResult:
    """Ratio of mean per-pixel l1-to-reference between recovered coefficients
    that went through the imaginary discard and ones that did not.

    The shifted recovery is read back from an actual ``imprint_iid_noise``
    roundtrip; the unshifted recovery and the reference are fresh N_C(0, N^2).
    """
    _check_trials(trials)
    mask = default_mask(n) if mask is None else np.asarray(mask, dtype=bool)
    m = int(mask.sum())
    rng = Rng(seed)
    shifted, plain = np.empty(trials), np.empty(trials)
    var = float(n * n)
    for t in range(trials):
        latent = rng.normal((1, n, n))
        marked = imprint_iid_noise(latent, mask, mix64(seed, t))
        x_shift = spectral.dft2(marked[0])[mask]
        x_plain = rng.complex_normal((m,), var)
        ref = rng.complex_normal((m,), var)
        shifted[t] = np.mean(np.abs(x_shift - ref))
        plain[t] = np.mean(np.abs(x_plain - ref))
    ratio, half = _ratio_ci(shifted, plain)
    return ShiftResult(ratio, half, float(shifted.mean()), float(plain.mean()), trials * m)


def energy_ratio_experiment(config: WatermarkConfig | None, trials: int, seed: int) -> tuple[float, int]:
    """Masked energy after the lossy roundtrip over the energy written.

    Uses the Tree-Ring baseline path (complex Gaussian ring values).
    """
    _check_trials(trials, 1)
    config = config or treering_baseline()
    from .imprint import KeyPair, NoiseKey, RingKey

    support = config.ring_mask.union
    before = after = 0.0
    rng = Rng(seed)
    for t in range(trials):
        pair = KeyPair(RingKey.from_index(0, config.n_rings, config.alpha),
                       NoiseKey(rng.u64(), config.noise_channels))
        latent = rng.normal((config.channels, config.n, config.n))
        marked = imprint(latent, pair, config)
        from .imprint import ring_pattern, ring_pattern_imag

        written = config.eta * (ring_pattern(pair, config).values
                                + 1j * ring_pattern_imag(pair, config).values)
        if config.enable_shift:
            written = spectral.chessboard_modulate(written)
        before += spectral.energy(written, support)
        after += spectral.energy(spectral.dft2(marked[config.ring_channel]), support)
    return after / before, trials * int(support.sum())


def iid_variance_experiment(n: int, mask, trials: int, seed: int) -> tuple[float, float]:
    """Sample complex variance of masked and unmasked coefficients after
    ``imprint_iid_noise``; expected N^2/2 and N^2."""
    mask = default_mask(n) if mask is None else np.asarray(mask, dtype=bool)
    rng = Rng(seed)
    inside, outside = [], []
    for t in range(trials):
        marked = imprint_iid_noise(rng.normal((1, n, n)), mask, mix64(seed, t))
        spec = spectral.dft2(marked[0])
        inside.append(spec[mask])
        outside.append(spec[~mask])
    return float(np.mean(np.abs(np.concatenate(inside)) ** 2)), \
        float(np.mean(np.abs(np.concatenate(outside)) ** 2))


# control experiments ------------------------------------------------------

@dataclass(frozen=True)
class ControlRow:
    attack: str
    auc_control1: float
    auc_control2: float
    mean_wm: float
    mean_null: float
    mean_null_shifted: float

    @property
    def delta1(self) -> float:
        return self.mean_null - self.mean_wm

    @property
    def delta2(self) -> float:
        return self.mean_null_shifted - self.mean_wm

    @property
    def delta_auc(self) -> float:
        return self.auc_control1 - self.auc_control2


def pipeline_shift_experiment(config: WatermarkConfig, trials: int, seed: int,
                              attack_grid=None,
                              sigma_inv: float = CALIBRATED_INVERSION_STD) -> list[ControlRow]:
    """Control 1 (watermarked vs plain null distances) against Control 2
    (null distances scaled by sqrt(3)/2 to carry the same shift).

    Distances are per-pixel-mean l1 on complex ring coefficients.
    """
    _check_trials(trials)
    from .imprint import KeyPair, NoiseKey, RingKey

    grid = attack_grid if attack_grid is not None else [[]]
    support_size = int(config.ring_mask.union.sum())
    pair = KeyPair(RingKey.from_index(0, config.n_rings, config.alpha),
                   NoiseKey(mix64(seed, 0x57), config.noise_channels))
    rows = []
    for a_i, attacks in enumerate(grid):
        model = ChannelModel(sigma_inv, tuple(attacks), 0)
        wm, nl = np.empty(trials), np.empty(trials)
        for t in range(trials):
            tseed = mix64(mix64(seed, a_i), t)
            x = imprint(sample_latent(mix64(tseed, 1), config), pair, config)
            x = apply_channel(x, model.with_seed(mix64(tseed, 2)))
            y = apply_channel(sample_latent(mix64(tseed, 3), config), model.with_seed(mix64(tseed, 4)))
            wm[t] = reference_distance(x, pair, config, complex_values=True) / support_size
            nl[t] = reference_distance(y, pair, config, complex_values=True) / support_size
        shifted = nl * SHIFT_FACTOR
        rows.append(ControlRow(model.label, auc(wm, nl), auc(wm, shifted),
                               float(wm.mean()), float(nl.mean()), float(shifted.mean())))
    return rows


STANDALONE_MODES = ("gaussian", "zero_l1", "zero_l2")


def standalone_watermark_experiment(reference_mode: str, trials: int, channel: ChannelModel,
                                    seed: int, n: int = 64, mask=None) -> RocCurve:
    """Imaginary discard as a watermark on its own: i.i.d. noise is written
    into the mask of marked latents; detection measures the distance of the
    recovered masked coefficients to a reference."""
    if reference_mode not in STANDALONE_MODES:
        raise ValueError(f"reference mode must be one of {STANDALONE_MODES}")
    _check_trials(trials)
    mask = default_mask(n) if mask is None else np.asarray(mask, dtype=bool)
    m = int(mask.sum())
    wm, nl = np.empty(trials), np.empty(trials)

    def score(latent, s):
        coeffs = spectral.dft2(latent[0])[mask]
        if reference_mode == "gaussian":
            ref = Rng(s).complex_normal((m,), float(n * n))
            return float(np.sum(np.abs(coeffs - ref)))
        if reference_mode == "zero_l1":
            return float(np.sum(np.abs(coeffs)))
        return float(np.sqrt(np.sum(np.abs(coeffs) ** 2)))

    for t in range(trials):
        tseed = mix64(seed, t)
        base = Rng(mix64(tseed, 1)).normal((1, n, n))
        marked = imprint_iid_noise(base, mask, mix64(tseed, 2))
        wm[t] = score(apply_channel(marked, channel.with_seed(mix64(tseed, 3))), mix64(tseed, 4))
        clean = Rng(mix64(tseed, 5)).normal((1, n, n))
        nl[t] = score(apply_channel(clean, channel.with_seed(mix64(tseed, 6))), mix64(tseed, 7))
    return roc_curve(wm, nl)
