"""Core numerics: unitary FFT vs a naive DFT oracle, Parseval, PSD scaling,
eigendecomposition identities, and RNG stream determinism."""

import numpy as np
import pytest

from sirenlab import (
    ContractViolationError,
    EmptyInputError,
    ParameterError,
    SeededRng,
    fft2_forward,
    fft_forward,
    power_spectral_density,
    sample_arcsine,
    sample_normal,
    sample_uniform,
    symmetric_eigendecomposition,
)


def naive_dft(x):
    """O(N^2) direct evaluation of the unitary DFT (independent oracle)."""
    x = np.asarray(x, dtype=complex)
    n = x.size
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        for m in range(n):
            out[k] += x[m] * np.exp(-2j * np.pi * k * m / n)
    return out / np.sqrt(n)


class TestFft:
    def test_impulse_flat_spectrum(self):
        spectrum = fft_forward([1.0, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(spectrum, np.full(4, 0.5 + 0j), atol=1e-15)

    def test_single_tone_two_bins(self):
        n, k0 = 16, 3
        x = np.cos(2 * np.pi * np.arange(n) * k0 / n)
        spectrum = fft_forward(x)
        mags = np.abs(spectrum)
        np.testing.assert_allclose(mags[k0], 2.0, atol=1e-12)
        np.testing.assert_allclose(mags[n - k0], 2.0, atol=1e-12)
        others = np.delete(mags, [k0, n - k0])
        assert np.max(others) < 1e-12

    @pytest.mark.parametrize("n", [37, 64, 100])
    def test_matches_naive_dft(self, n):
        x = np.random.default_rng(n).standard_normal(n)
        got = fft_forward(x)
        want = naive_dft(x)
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(128)
        y = rng.standard_normal(128)
        a, b = rng.standard_normal(2)
        lhs = fft_forward(a * x + b * y)
        rhs = a * fft_forward(x) + b * fft_forward(y)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-12)

    @pytest.mark.parametrize("n", [8, 33, 256, 1000])
    def test_parseval(self, n):
        x = np.random.default_rng(n).standard_normal(n)
        energy_time = np.sum(x * x)
        energy_freq = np.sum(np.abs(fft_forward(x)) ** 2)
        np.testing.assert_allclose(energy_freq, energy_time, rtol=1e-9)

    def test_empty_input(self):
        with pytest.raises(EmptyInputError):
            fft_forward([])

    def test_fft2_is_row_column_composition(self):
        rng = np.random.default_rng(7)
        img = rng.standard_normal((12, 17))
        rows = np.array([fft_forward(row) for row in img])
        want = np.array([fft_forward(col) for col in rows.T]).T
        np.testing.assert_allclose(fft2_forward(img), want, rtol=1e-9, atol=1e-12)


class TestPsd:
    def test_constant_signal_all_dc(self):
        psd = power_spectral_density(np.full(32, 3.7))
        assert psd[0] > 0
        assert np.max(psd[1:]) < 1e-20

    @pytest.mark.parametrize("a", [2.0, 10.0, 100.0])
    def test_quadratic_scaling(self, a):
        x = np.random.default_rng(3).standard_normal(257)
        base = power_spectral_density(x)
        scaled = power_spectral_density(a * x)
        mask = base > 0
        np.testing.assert_allclose(scaled[mask] / base[mask], a * a, rtol=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_white_noise_energy(self, seed):
        x = np.random.default_rng(seed).standard_normal(512)
        psd = power_spectral_density(x)
        # Reassemble the two-sided total: DC and Nyquist unpaired.
        total = psd[0] + psd[-1] + 2 * psd[1:-1].sum()
        np.testing.assert_allclose(total, np.sum(x * x), rtol=1e-9)


class TestEigendecomposition:
    def test_identity(self):
        vals, vecs = symmetric_eigendecomposition(np.eye(3))
        np.testing.assert_allclose(vals, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(vecs @ vecs.T, np.eye(3), atol=1e-12)

    def test_diagonal_sorted_descending(self):
        vals, vecs = symmetric_eigendecomposition(np.diag([5.0, 2.0, -1.0]))
        np.testing.assert_allclose(vals, [5.0, 2.0, -1.0])
        # Axis-aligned up to sign.
        np.testing.assert_allclose(np.abs(vecs), np.eye(3), atol=1e-12)

    @pytest.mark.parametrize("n", [4, 32, 256])
    def test_reconstruction_orthonormality_trace(self, n):
        rng = np.random.default_rng(n)
        a = rng.standard_normal((n, n))
        m = (a + a.T) / 2
        vals, vecs = symmetric_eigendecomposition(m)
        scale = np.linalg.norm(m)
        assert np.all(np.diff(vals) <= 1e-12)
        recon = vecs @ np.diag(vals) @ vecs.T
        assert np.linalg.norm(recon - m) / scale < 1e-8
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(n), atol=1e-10)
        np.testing.assert_allclose(vals.sum(), np.trace(m), rtol=1e-10)

    def test_rejects_non_square(self):
        with pytest.raises(ContractViolationError):
            symmetric_eigendecomposition(np.ones((2, 3)))

    def test_rejects_asymmetric(self):
        m = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ContractViolationError):
            symmetric_eigendecomposition(m)


class TestSampling:
    def test_rng_determinism(self):
        a = SeededRng(123, 7).generator.standard_normal(64)
        b = SeededRng(123, 7).generator.standard_normal(64)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = SeededRng(123, 0).generator.standard_normal(64)
        b = SeededRng(123, 1).generator.standard_normal(64)
        assert not np.array_equal(a, b)

    def test_substream_determinism(self):
        a = sample_uniform(SeededRng(5).substream("x", 2), 0, 1, 16)
        b = sample_uniform(SeededRng(5).substream("x", 2), 0, 1, 16)
        assert np.array_equal(a, b)

    def test_normal_zero_std(self):
        np.testing.assert_array_equal(sample_normal(SeededRng(0), 0.0, 0.0, 5), np.zeros(5))

    def test_arcsine_moments(self):
        x = sample_arcsine(SeededRng(11), 10**6)
        assert abs(x.mean()) < 5e-3
        assert abs(x.var() - 0.5) / 0.5 < 0.01
        assert np.all(np.abs(x) <= 1.0)

    def test_uniform_variance(self):
        c = 3.0
        x = sample_uniform(SeededRng(13), -c, c, 10**6)
        assert abs(x.var() - c * c / 3) / (c * c / 3) < 0.02

    def test_parameter_errors(self):
        with pytest.raises(ParameterError):
            sample_uniform(SeededRng(0), 1.0, 1.0, 4)
        with pytest.raises(ParameterError):
            sample_normal(SeededRng(0), 0.0, -1.0, 4)
