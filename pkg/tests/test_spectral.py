import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ringid import spectral
from ringid.rng import Rng
from ringid.spectral import DimensionError


def test_direct_oracle_matches_fft(rs):
    for _ in range(5):
        x = rs.normal(size=(8, 8))
        np.testing.assert_allclose(spectral.dft2(x), spectral.direct_dft2(x), atol=1e-9)


def test_zero_and_constant_planes():
    assert np.all(spectral.dft2(np.zeros((64, 64))) == 0)
    spec = spectral.dft2(np.full((16, 16), 2.5))
    assert spec[8, 8] == pytest.approx(2.5 * 256)
    spec[8, 8] = 0
    assert np.max(np.abs(spec)) < 1e-9


@pytest.mark.parametrize("shape", [(8, 6), (7, 7), (8,)])
def test_dimension_errors(shape):
    with pytest.raises(DimensionError):
        spectral.dft2(np.zeros(shape))


def test_roundtrip_real(rs):
    x = rs.normal(size=(32, 32))
    np.testing.assert_allclose(spectral.idft2_real(spectral.dft2(x)), x, atol=1e-9)
    assert np.all(spectral.idft2_real(np.zeros((8, 8), complex)) == 0)


def test_parseval(rs):
    x = rs.normal(size=(64, 64))
    assert spectral.energy(spectral.dft2(x)) == pytest.approx(64 * 64 * np.sum(x ** 2), rel=1e-9)


def test_single_asymmetric_write_projects(rs):
    spec = spectral.dft2(rs.normal(size=(16, 16)))
    spec[5, 9] = 3.0 + 7.0j
    expected = spectral.idft2_real(spectral.conjugate_symmetric_part(spec))
    np.testing.assert_allclose(spectral.idft2_real(spec), expected, atol=1e-9)
    # explicit X_cs at the written pixel and its mirror
    back = spectral.dft2(spectral.idft2_real(spec))
    mirror = spec[16 - 5, 16 - 9]
    assert back[5, 9] == pytest.approx((spec[5, 9] + np.conj(mirror)) / 2)


def test_conjugate_symmetric_part_properties(rs):
    real_spec = spectral.dft2(rs.normal(size=(16, 16)))
    np.testing.assert_allclose(spectral.conjugate_symmetric_part(real_spec), real_spec, atol=1e-12)
    z = rs.normal(size=(16, 16)) + 1j * rs.normal(size=(16, 16))
    anti = spectral.conjugate_antisymmetric_part(z)
    assert np.max(np.abs(spectral.conjugate_symmetric_part(anti))) < 1e-12
    cs = spectral.conjugate_symmetric_part(z)
    assert np.max(np.abs(spectral.idft2(cs).imag)) < 1e-9
    np.testing.assert_allclose(cs + anti, z, atol=1e-12)


def test_chessboard_is_half_period_shift(rs):
    x = rs.normal(size=(8, 8))
    mod = spectral.chessboard_modulate(spectral.dft2(x))
    np.testing.assert_allclose(spectral.idft2(mod).real, np.roll(x, (4, 4), axis=(0, 1)), atol=1e-9)
    np.testing.assert_allclose(spectral.chessboard_modulate(mod), spectral.dft2(x), atol=1e-12)


def test_chessboard_dc_parity():
    # DC sits at (N/2, N/2); N/2 + N/2 = N is even so DC keeps its sign
    for n in (8, 10, 64):
        assert spectral.chessboard(n)[n // 2, n // 2] == 1.0
        assert spectral.chessboard(n)[n // 2, n // 2 + 1] == -1.0


def test_energy_cases():
    spec = spectral.dft2(np.ones((8, 8)))
    assert spectral.energy(spec, np.zeros((8, 8), bool)) == 0.0
    assert spectral.energy(spec, np.ones((8, 8), bool)) == pytest.approx(8 ** 4)


def test_energy_monte_carlo():
    n, m, trials = 16, 20, 10_000
    z = Rng(5).complex_normal((trials, m), float(n * n))
    assert np.mean(np.sum(np.abs(z) ** 2, axis=1)) == pytest.approx(m * n * n, rel=0.03)


def test_symmetrize_mask_closed_under_reflection(rs):
    mask = rs.random((16, 16)) < 0.1
    sym = spectral.symmetrize_mask(mask)
    assert np.array_equal(sym, spectral.reflect(sym))
    assert np.all(sym[mask])


planes = arrays(np.float64, (8, 8), elements=st.floats(-100, 100, allow_nan=False))


@given(planes)
@settings(max_examples=60, deadline=None)
def test_property_parseval_and_roundtrip(x):
    spec = spectral.dft2(x)
    assert spectral.energy(spec) == pytest.approx(64 * np.sum(x ** 2), rel=1e-9, abs=1e-6)
    np.testing.assert_allclose(spectral.idft2_real(spec), x, atol=1e-9)
    np.testing.assert_allclose(spectral.reflect(spec), np.conj(spec), atol=1e-8)


@given(planes, planes)
@settings(max_examples=40, deadline=None)
def test_property_projection_is_idempotent(a, b):
    z = spectral.dft2(a) + 1j * spectral.dft2(b) * 0.3
    cs = spectral.conjugate_symmetric_part(z)
    np.testing.assert_allclose(spectral.conjugate_symmetric_part(cs), cs, atol=1e-9)
