"""Spectral centroid and noise-scale schedule, including reproduction of the
published per-file (psi, s0, s1) table for both modality presets."""

import numpy as np
import pytest

from sirenlab import (
    AUDIO_SCHEDULE,
    IMAGE_SCHEDULE,
    NoiseSchedule,
    ParameterError,
    UndefinedCentroidError,
    noise_scales,
    spectral_centroid_1d,
    spectral_centroid_2d,
    synth_preset,
)

# Published spectral centroids and the noise scales they map to.
# Audio rows reproduce with the audio preset's exponent constant a = 7,
# image rows with a = 5; tolerances +-1 on s0 and +-0.01 on s1.
AUDIO_TABLE = [
    ("tetris.wav", 0.5732, 3436, 1.72),
    ("tap.wav", 0.7264, 3478, 2.18),
    ("whoosh.wav", 0.5266, 3412, 1.58),
    ("radiation.wav", 0.8368, 3489, 2.51),
    ("arch.wav", 0.4996, 3394, 1.50),
    ("relay.wav", 0.6310, 3457, 1.89),
    ("voltage.wav", 0.4540, 3354, 1.36),
    ("foley.wav", 0.1772, 2487, 0.53),
    ("shattered.wav", 0.3942, 3278, 1.18),
    ("bach.wav", 0.0737, 1410, 0.22),
    ("birds.wav", 0.1789, 2499, 0.54),
]
IMAGE_TABLE = [
    ("noise.png", 0.5934, 47, 0.24),
    ("camera.png", 0.3121, 39, 0.12),
    ("castle.jpg", 0.1097, 21, 0.04),
    ("rock.jpg", 0.4055, 43, 0.16),
]


class TestCentroid1d:
    def test_dc_signal_zero(self):
        assert spectral_centroid_1d(np.full(64, 2.5)) == 0.0

    def test_nyquist_tone_one(self):
        x = np.tile([1.0, -1.0], 32)
        assert abs(spectral_centroid_1d(x) - 1.0) < 1e-12

    def test_eq6_low_matches_closed_form(self):
        signal = synth_preset("eq6-low", 2**12)
        closed_form = 2 * (0.125 * 1 + 0.25 * 2 + 0.375 * 4) / 7
        assert abs(spectral_centroid_1d(signal.samples) - closed_form) < 1e-9
        assert abs(closed_form - 0.6071) < 5e-5

    def test_eq6_high_matches_closed_form(self):
        n = 2**12
        signal = synth_preset("eq6-high", n)
        snapped = [round(f * n) / n for f in (0.425, 0.45, 0.475)]
        closed_form = 2 * sum(f * a for f, a in zip(snapped, (1, 2, 4))) / 7
        assert abs(spectral_centroid_1d(signal.samples) - closed_form) < 1e-9
        assert abs(closed_form - 0.9214) < 5e-3

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(256)
        base = spectral_centroid_1d(x)
        for c in (2.0, -3.0, 1e-4):
            assert abs(spectral_centroid_1d(c * x) - base) < 1e-12

    def test_multichannel_averages_spectra(self):
        x = np.tile([1.0, -1.0], 32)
        two = np.column_stack([x, x])
        assert abs(spectral_centroid_1d(two) - spectral_centroid_1d(x)) < 1e-12

    def test_zero_signal_rejected(self):
        with pytest.raises(UndefinedCentroidError):
            spectral_centroid_1d(np.zeros(16))

    def test_in_unit_interval(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            x = rng.standard_normal(int(rng.integers(4, 200)))
            assert 0.0 <= spectral_centroid_1d(x) <= 1.0


class TestCentroid2d:
    def test_constant_image_zero(self):
        assert spectral_centroid_2d(np.full((8, 8), 0.3)) == 0.0

    def test_checkerboard_one(self):
        yy, xx = np.meshgrid(np.arange(16), np.arange(16), indexing="ij")
        board = ((yy + xx) % 2).astype(float) * 2 - 1
        assert abs(spectral_centroid_2d(board) - 1.0) < 1e-12

    def test_pure_horizontal_tone(self):
        w = 32
        img = np.tile(np.cos(2 * np.pi * 0.25 * np.arange(w)), (8, 1))
        want = 0.25 / (0.5 * np.sqrt(2))
        assert abs(spectral_centroid_2d(img) - want) < 1e-12

    def test_zero_image_rejected(self):
        with pytest.raises(UndefinedCentroidError):
            spectral_centroid_2d(np.zeros((4, 4)))

    def test_in_unit_interval(self):
        rng = np.random.default_rng(2)
        for _ in range(5):
            img = rng.standard_normal((12, 20, 3))
            assert 0.0 <= spectral_centroid_2d(img) <= 1.0


class TestNoiseScales:
    def test_zero_centroid_zero_scales(self):
        assert noise_scales(0.0, 1, AUDIO_SCHEDULE) == (0.0, 0.0)

    @pytest.mark.parametrize("name,psi,s0_want,s1_want", AUDIO_TABLE)
    def test_audio_table_rows(self, name, psi, s0_want, s1_want):
        s0, s1 = noise_scales(psi, 1, AUDIO_SCHEDULE)
        assert abs(s0 - s0_want) <= 1.0
        assert abs(s1 - s1_want) <= 0.01

    @pytest.mark.parametrize("name,psi,s0_want,s1_want", IMAGE_TABLE)
    def test_image_table_rows(self, name, psi, s0_want, s1_want):
        s0, s1 = noise_scales(psi, 1, IMAGE_SCHEDULE)
        assert abs(s0 - s0_want) <= 1.0
        assert abs(s1 - s1_want) <= 0.01

    def test_monotone_in_psi(self):
        grid = np.linspace(0, 1, 64)
        for schedule in (AUDIO_SCHEDULE, IMAGE_SCHEDULE):
            pairs = [noise_scales(p, 1, schedule) for p in grid]
            s0s = [p[0] for p in pairs]
            s1s = [p[1] for p in pairs]
            assert all(b > a for a, b in zip(s0s, s0s[1:]))
            assert all(b > a for a, b in zip(s1s, s1s[1:]))

    def test_bounds(self):
        for psi in np.linspace(0, 1, 11):
            for channels in (1, 3):
                s0, s1 = noise_scales(psi, channels, IMAGE_SCHEDULE)
                assert 0.0 <= s0 < IMAGE_SCHEDULE.s0_max
                assert s1 <= IMAGE_SCHEDULE.b / channels

    def test_channel_division(self):
        s0_one, s1_one = noise_scales(0.6, 1, IMAGE_SCHEDULE)
        s0_three, s1_three = noise_scales(0.6, 3, IMAGE_SCHEDULE)
        assert s0_three < s0_one and s1_three == pytest.approx(s1_one / 3)

    def test_psi_out_of_range(self):
        with pytest.raises(ParameterError):
            noise_scales(1.5, 1, AUDIO_SCHEDULE)

    def test_schedule_validation(self):
        with pytest.raises(ParameterError):
            NoiseSchedule(s0_max=-1.0, a=5.0, b=0.4, modality="image-2d")
        with pytest.raises(ParameterError):
            NoiseSchedule(s0_max=50.0, a=5.0, b=0.4, modality="volume-3d")
