import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ringid import spectral
from ringid.attacks import (
    AttackParseError,
    AttackSpec,
    ChannelModel,
    add_noise,
    apply_channel,
    blur,
    brightness,
    crop_scale,
    parse_attacks,
    quantize,
    rotate,
)
from ringid.rng import Rng


@pytest.fixture
def latent():
    return Rng(21).normal((4, 64, 64))


def smooth_plane(n=64):
    yy, xx = np.mgrid[0:n, 0:n] * (2 * np.pi / n)
    return np.sin(2 * yy + xx) + 0.5 * np.cos(yy - 2 * xx)


def test_rotate_zero_is_copy(latent):
    out = rotate(latent, 0)
    assert np.array_equal(out, latent) and out is not latent


def test_rotate_quarter_turn_is_permutation(latent):
    out = rotate(latent, 90)
    np.testing.assert_array_equal(out, np.rot90(latent, k=1, axes=(1, 2)))
    np.testing.assert_array_equal(rotate(latent, 180), latent[:, ::-1, ::-1])


def test_rotate_back_and_forth_smooth_interior():
    x = smooth_plane()[None]
    back = rotate(rotate(x, 75), -75)
    yy, xx = np.mgrid[0:64, 0:64]
    inner = np.hypot(yy - 31.5, xx - 31.5) < 64 / 2 - 2
    assert np.max(np.abs(back[0][inner] - x[0][inner])) < 0.1


def test_crop_scale_identity_and_constant(latent):
    np.testing.assert_allclose(crop_scale(latent, 1.0, 3), latent, atol=1e-12)
    const = np.full((1, 32, 32), 1.7)
    np.testing.assert_allclose(crop_scale(const, 0.25, 5), const, atol=1e-12)


def _ring_radius(plane):
    mag = np.abs(spectral.dft2(plane)) ** 2
    n = plane.shape[0]
    yy, xx = np.mgrid[0:n, 0:n]
    r = np.hypot(yy - n // 2, xx - n // 2)
    mag[n // 2, n // 2] = 0
    return float(np.sum(mag * r) / np.sum(mag))


def test_crop_scale_moves_ring_inward():
    # zooming into the picture stretches spatial detail, which compresses
    # the spectrum toward DC: the ring radius scales by sqrt(fraction)
    n, r0 = 64, 16
    from ringid.patterns import naive_ring_annulus

    spec = naive_ring_annulus(r0, n).astype(complex)
    plane = spectral.idft2_real(spec * Rng(1).normal((n, n)))
    before = _ring_radius(plane)
    after = np.mean([_ring_radius(crop_scale(plane[None], 0.75, s)[0]) for s in range(8)])
    assert after == pytest.approx(before * math.sqrt(0.75), rel=0.08)


def test_blur_cases(latent):
    np.testing.assert_array_equal(blur(latent, 1), latent)
    const = np.full((1, 32, 32), 3.0)
    np.testing.assert_allclose(blur(const, 5)[0, 4:-4, 4:-4], 3.0)
    out = blur(Rng(2).normal((1, 256, 256)), 8)
    assert out[0, 8:-8, 8:-8].var() == pytest.approx(1 / 64, rel=0.1)


def test_blur_even_kernel_window():
    x = np.zeros((1, 16, 16))
    x[0, 8, 8] = 64.0
    out = blur(x, 8)
    assert np.count_nonzero(out) == 64
    # window offsets -4..3 around the output pixel, so the impulse spreads to 5..12
    assert out[0, 5:13, 5:13].min() == pytest.approx(1.0)


def test_noise(latent):
    np.testing.assert_array_equal(add_noise(latent, 0, 1), latent)
    out = add_noise(latent, 0.3, 7)
    assert np.std(out - latent) == pytest.approx(0.3, rel=0.03)
    np.testing.assert_array_equal(out, add_noise(latent, 0.3, 7))


def test_brightness(latent):
    np.testing.assert_array_equal(brightness(latent, 1.0), latent)
    np.testing.assert_allclose(np.abs(spectral.dft2(brightness(latent, 2.0)[1])),
                               2 * np.abs(spectral.dft2(latent[1])), rtol=1e-12)


def test_quantize(latent):
    inner = np.clip(latent, -3.9, 3.9)
    np.testing.assert_allclose(quantize(inner, 2 ** 24), inner, atol=1e-5)
    assert set(np.unique(quantize(latent, 2))) == {-2.0, 2.0}
    err = quantize(latent, 16) - latent
    inside = np.abs(latent) < 4
    assert err[inside].std() == pytest.approx(0.5 / math.sqrt(12), rel=0.03)
    assert abs(err[inside].mean()) < 0.01


def test_parse_attacks():
    specs = parse_attacks("rotate=75,cs=0.75,blur=8,noise=0.1,bright=2.0,quant=16")
    assert [s.kind for s in specs] == ["rotate", "crop_scale", "blur", "noise", "brightness", "quantize"]
    assert parse_attacks("clean") == []
    assert specs[0].label == "rotate=75"
    for bad in ("rotate", "spin=3", "cs=1.5", "blur=2.5", "quant=1", "noise=-1", "bright=0"):
        with pytest.raises(AttackParseError, match=bad.split("=")[0]):
            parse_attacks(f"clean,{bad}")


def test_spec_validation():
    with pytest.raises(ValueError):
        AttackSpec("shear", 1.0)
    with pytest.raises(ValueError):
        AttackSpec("rotate", float("nan"))


def test_channel_identity_and_replay(latent):
    out = apply_channel(latent, ChannelModel())
    np.testing.assert_array_equal(out, latent)
    model = ChannelModel(0.1, tuple(parse_attacks("rotate=30,cs=0.8,noise=0.05")), 4)
    np.testing.assert_array_equal(apply_channel(latent, model), apply_channel(latent, model))
    assert not np.array_equal(apply_channel(latent, model), apply_channel(latent, model.with_seed(5)))


def test_channel_order_matters(latent):
    a = ChannelModel(0.0, tuple(parse_attacks("bright=2,quant=4")))
    b = ChannelModel(0.0, tuple(parse_attacks("quant=4,bright=2")))
    assert not np.array_equal(apply_channel(latent, a), apply_channel(latent, b))


def test_inversion_noise_keeps_identification(keyset32, config):
    from ringid.detect import identify
    from ringid.imprint import imprint, sample_latent

    model = ChannelModel(0.1, (), 0)
    for t in range(20):
        pair = keyset32.keys[t]
        x = apply_channel(imprint(sample_latent(t, config), pair, config), model.with_seed(t))
        assert identify(x, keyset32).best_key == pair.key_index


@given(st.floats(0, 359.9), st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_property_rotation_bounded(deg, seed):
    x = Rng(seed).normal((1, 16, 16))
    out = rotate(x, deg)
    assert np.all(np.isfinite(out))
    assert np.abs(out).max() <= np.abs(x).max() + 1e-12


@given(st.floats(0.05, 1.0), st.integers(0, 1000))
@settings(max_examples=25, deadline=None)
def test_property_crop_scale_within_range(frac, seed):
    x = Rng(seed).normal((1, 16, 16))
    out = crop_scale(x, frac, seed)
    assert out.min() >= x.min() - 1e-12 and out.max() <= x.max() + 1e-12
