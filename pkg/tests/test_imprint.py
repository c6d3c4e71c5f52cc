import math

import numpy as np
import pytest
from scipy.stats import norm

from ringid import spectral
from ringid.formats import dumps_keyset
from ringid.imprint import (
    CapacityError,
    KeyPair,
    KeySet,
    ShapeError,
    WatermarkConfig,
    build_keyset,
    imprint,
    imprint_iid_noise,
    ring_pattern,
    ring_pattern_imag,
    sample_latent,
    treering_baseline,
)
from ringid.patterns import NoiseKey, RingKey


def pair_for(index, config, seed=1):
    return KeyPair(RingKey.from_index(index, config.n_rings, config.alpha),
                   NoiseKey(seed, config.noise_channels))


def test_config_validation():
    with pytest.raises(ValueError):
        WatermarkConfig(ring_channel=0, noise_channels=(0,))
    with pytest.raises(ValueError):
        WatermarkConfig(eta=0.0)
    with pytest.raises(ValueError):
        WatermarkConfig(eta=1.2)
    with pytest.raises(ValueError):
        WatermarkConfig(noise_channels=(4,))
    assert WatermarkConfig().capacity == 2048


def test_ablation_copies():
    c = WatermarkConfig()
    assert not c.without("shift").enable_shift
    assert c.without("rounder").mask_style == "naive"
    assert c.without("heterogeneous").noise_channels == ()
    lossy = c.without("lossless")
    assert not lossy.enable_lossless and lossy.baseline_center_offset
    with pytest.raises(ValueError):
        c.without("everything")


def test_lossless_roundtrip_exact():
    cfg = WatermarkConfig()
    for k in (0, 1729, 2047):
        pair = pair_for(k, cfg, seed=k)
        out = imprint(sample_latent(k, cfg), pair, cfg)
        spec = spectral.chessboard_modulate(spectral.dft2(out[cfg.ring_channel]))
        want = cfg.eta * ring_pattern(pair, cfg).vector
        assert np.max(np.abs(spec[cfg.ring_mask.union] - want)) < 1e-6 * cfg.alpha


def test_discretized_values_exact_without_shift():
    cfg = WatermarkConfig(eta=1.0, enable_shift=False)
    out = imprint(sample_latent(2, cfg), pair_for(5, cfg), cfg)
    vals = spectral.dft2(out[3])[cfg.ring_mask.union]
    assert np.allclose(np.abs(vals.real), 64.0, atol=1e-9)
    assert np.allclose(vals.imag, 0.0, atol=1e-9)


def test_untouched_coefficients_and_channels():
    cfg = WatermarkConfig()
    x = sample_latent(3, cfg)
    out = imprint(x, pair_for(9, cfg), cfg)
    a, b = spectral.dft2(x[3]), spectral.dft2(out[3])
    off = ~cfg.ring_mask.union
    np.testing.assert_allclose(a[off], b[off], atol=1e-9)
    np.testing.assert_array_equal(out[1], x[1])
    np.testing.assert_array_equal(out[2], x[2])


def test_noise_channel_replaced_by_field():
    cfg = WatermarkConfig()
    out = imprint(sample_latent(3, cfg), pair_for(9, cfg, seed=77), cfg)
    from ringid.patterns import sample_noise_field

    np.testing.assert_array_equal(out[0], sample_noise_field(NoiseKey(77), 64))


def test_baseline_projects_onto_symmetric_part():
    cfg = treering_baseline()
    pair = pair_for(0, cfg, seed=4)
    x = sample_latent(4, cfg)
    spec = spectral.dft2(x[3])
    written = cfg.eta * (ring_pattern(pair, cfg).values + 1j * ring_pattern_imag(pair, cfg).values)
    m = cfg.ring_mask.union
    spec[m] = written[m]
    expected = spectral.conjugate_symmetric_part(spec)[m]
    got = spectral.dft2(imprint(x, pair, cfg)[3])[m]
    np.testing.assert_allclose(got, expected, atol=1e-8)
    assert np.max(np.abs(got - written[m])) > 1.0  # the write did not survive


def test_shape_checks():
    cfg = WatermarkConfig()
    with pytest.raises(ShapeError):
        imprint(np.zeros((4, 32, 32)), pair_for(0, cfg), cfg)
    bad = np.zeros((4, 64, 64))
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        imprint(bad, pair_for(0, cfg), cfg)


def test_iid_noise_seeds_differ():
    mask = WatermarkConfig().ring_mask.union
    x = sample_latent(0, n=64, channels=1)
    a = spectral.dft2(imprint_iid_noise(x, mask, 1)[0])[mask]
    b = spectral.dft2(imprint_iid_noise(x, mask, 2)[0])[mask]
    assert not np.allclose(a, b)


def test_keyset_exhaustion_and_capacity():
    cfg = WatermarkConfig(n=16, r_min=2, r_max=6, noise_channels=(0,))
    ks = build_keyset(16, cfg, seed=1)
    assert sorted(ks.key_indices) == list(range(16))
    with pytest.raises(CapacityError):
        build_keyset(17, cfg, seed=1)


def test_keyset_invariants():
    cfg = WatermarkConfig(n=16, r_min=2, r_max=6)
    pair = pair_for(1, cfg)
    with pytest.raises(ValueError):
        KeySet(cfg, [pair, pair], {3: 1.0, 0: 1.0})
    with pytest.raises(ValueError):
        KeySet(cfg, [pair], {3: 0.0, 0: 1.0})


def test_keyset_deterministic(keyset32, config):
    again = build_keyset(32, config, seed=5)
    assert dumps_keyset(again) == dumps_keyset(keyset32)


def test_lambda_matches_folded_normal(keyset32, config):
    # ring channel: real parts of null coefficients are N(0, N^2/2); the
    # reference is eta * (+-alpha), so E|X - a| is a folded normal mean
    sigma = config.n / math.sqrt(2)
    a = config.eta * config.alpha
    per_pixel = sigma * math.sqrt(2 / math.pi) * math.exp(-a * a / (2 * sigma * sigma)) \
        + a * (1 - 2 * norm.cdf(-a / sigma))
    m = int(config.ring_mask.union.sum())
    assert 1 / keyset32.lam[3] == pytest.approx(m * per_pixel, rel=0.03)
    # noise channel: difference of two unit normals
    assert 1 / keyset32.lam[0] == pytest.approx(config.n ** 2 * 2 / math.sqrt(math.pi), rel=0.03)


def test_subset_shares_cache(keyset32):
    sub = keyset32.subset(8)
    assert len(sub) == 8
    np.testing.assert_array_equal(sub.ring_refs, keyset32.ring_refs[:8])
    assert sub.lam == keyset32.lam


def test_lossless_fixed_point_and_eta_linearity():
    cfg = WatermarkConfig()
    pair = pair_for(300, cfg)
    out = imprint(sample_latent(6, cfg), pair, cfg)
    again = spectral.idft2_real(spectral.dft2(out[3]))
    np.testing.assert_allclose(again, out[3], atol=1e-9)
    m = cfg.ring_mask.union
    lo = spectral.dft2(imprint(sample_latent(6, cfg), pair, WatermarkConfig(eta=0.4))[3])[m]
    hi = spectral.dft2(imprint(sample_latent(6, cfg), pair, WatermarkConfig(eta=0.8))[3])[m]
    np.testing.assert_allclose(np.abs(hi), 2 * np.abs(lo), atol=1e-9)
