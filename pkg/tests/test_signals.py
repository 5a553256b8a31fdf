"""Signal I/O: WAV and PGM/PPM round trips against handcrafted byte fixtures,
synthetic target generation, normalization records, and CSV/JSON writers."""

import csv
import json
import struct
import wave

import numpy as np
import pytest

from sirenlab import (
    ParameterError,
    SeededRng,
    Signal,
    SyntheticSpec,
    UnsupportedFormatError,
    normalize,
    power_spectral_density,
    read_json,
    read_pgm_ppm,
    read_wav,
    spectral_centroid_1d,
    synth_bandlimited,
    synth_composite,
    synth_preset,
    write_csv,
    write_json,
    write_pgm_ppm,
    write_wav,
)


def build_wav_bytes(samples_i16, rate=8000, channels=1):
    """Hand-assembled 44-byte-header RIFF/WAVE PCM16 fixture."""
    data = b"".join(struct.pack("<h", s) for s in samples_i16)
    byte_rate = rate * channels * 2
    header = (
        b"RIFF"
        + struct.pack("<I", 36 + len(data))
        + b"WAVE"
        + b"fmt "
        + struct.pack("<IHHIIHH", 16, 1, channels, rate, byte_rate, channels * 2, 16)
        + b"data"
        + struct.pack("<I", len(data))
    )
    return header + data


class TestWav:
    def test_handbuilt_fixture(self, tmp_path):
        path = tmp_path / "fixture.wav"
        path.write_bytes(build_wav_bytes([0, 16384, -16384]))
        signal = read_wav(path)
        np.testing.assert_allclose(signal.samples[:, 0], [0.0, 0.5, -0.5], atol=1e-12)
        assert signal.sample_rate == 8000
        assert signal.scale == 32768.0

    def test_full_scale_negative(self, tmp_path):
        path = tmp_path / "neg.wav"
        path.write_bytes(build_wav_bytes([-32768, 32767]))
        signal = read_wav(path)
        assert signal.samples[0, 0] == -1.0
        assert signal.samples[1, 0] == 32767 / 32768

    def test_round_trip_quantization_bound(self, tmp_path):
        rng = np.random.default_rng(0)
        values = rng.uniform(-1, 1, 500)
        signal = Signal(kind="audio-1d", samples=values, sample_rate=16000)
        path = tmp_path / "rt.wav"
        write_wav(signal, path)
        back = read_wav(path)
        assert np.max(np.abs(back.samples[:, 0] - values)) <= 1 / 32768 + 1e-12

    def test_stereo_folds_to_mono(self, tmp_path):
        path = tmp_path / "stereo.wav"
        path.write_bytes(build_wav_bytes([100, 300, -100, 500], channels=2))
        signal = read_wav(path)
        np.testing.assert_allclose(signal.samples[:, 0] * 32768, [200, 200], atol=1e-9)

    def test_max_samples_truncation(self, tmp_path):
        path = tmp_path / "long.wav"
        path.write_bytes(build_wav_bytes(list(range(100))))
        assert read_wav(path, max_samples=10).samples.shape[0] == 10

    def test_rejects_wrong_bit_depth(self, tmp_path):
        path = tmp_path / "w8.wav"
        with wave.open(str(path), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(1)
            fh.setframerate(8000)
            fh.writeframes(bytes(16))
        with pytest.raises(UnsupportedFormatError):
            read_wav(path)

    def test_rejects_non_riff(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"OggS" + bytes(64))
        with pytest.raises(UnsupportedFormatError):
            read_wav(path)


class TestPnm:
    def test_p5_fixture(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 255, 128, 64]))
        signal = read_pgm_ppm(path)
        np.testing.assert_allclose(
            signal.samples[:, :, 0],
            [[0.0, 1.0], [128 / 255, 64 / 255]],
            atol=1e-9,
        )
        np.testing.assert_allclose(signal.samples[1, 0, 0], 0.50196, atol=1e-5)

    def test_p5_with_comment_header(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 2\n255\n" + bytes([10, 20, 30, 40]))
        assert read_pgm_ppm(path).samples.shape == (2, 2, 1)

    def test_p6_channel_order(self, tmp_path):
        path = tmp_path / "rgb.ppm"
        raster = bytes([255, 0, 0, 0, 128, 255, 7, 8, 9, 10, 11, 12])
        path.write_bytes(b"P6\n2 2\n255\n" + raster)
        signal = read_pgm_ppm(path)
        np.testing.assert_allclose(signal.samples[0, 0], [1.0, 0.0, 0.0])
        np.testing.assert_allclose(signal.samples[0, 1], [0.0, 128 / 255, 1.0])
        np.testing.assert_allclose(signal.samples[1, 1] * 255, [10, 11, 12])

    @pytest.mark.parametrize("maxval", [255, 65535])
    def test_round_trip(self, tmp_path, maxval):
        rng = np.random.default_rng(maxval)
        img = rng.uniform(0, 1, (6, 5, 3))
        signal = Signal(kind="image-2d", samples=img)
        path = tmp_path / "rt.ppm"
        write_pgm_ppm(signal, path, maxval=maxval)
        back = read_pgm_ppm(path)
        assert np.max(np.abs(back.samples - img)) <= 1 / (2 * maxval) + 1e-12

    def test_write_read_idempotent(self, tmp_path):
        img = np.linspace(0, 1, 24).reshape(4, 6)
        first = tmp_path / "a.pgm"
        second = tmp_path / "b.pgm"
        write_pgm_ppm(Signal(kind="image-2d", samples=img), first)
        write_pgm_ppm(read_pgm_ppm(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_rejects_ascii_variant(self, tmp_path):
        path = tmp_path / "ascii.pgm"
        path.write_bytes(b"P2\n2 2\n255\n0 1 2 3\n")
        with pytest.raises(UnsupportedFormatError):
            read_pgm_ppm(path)


class TestSynth:
    def test_single_tone_closed_form(self):
        signal = synth_composite(SyntheticSpec((1.0,), (0.25,), 8))
        np.testing.assert_allclose(
            signal.samples[:, 0], [0, 1, 0, -1, 0, 1, 0, -1], atol=1e-12
        )

    def test_eq6_low_centroid(self):
        signal = synth_preset("eq6-low", 2**12)
        assert abs(spectral_centroid_1d(signal.samples) - 0.6071) < 5e-4

    def test_eq6_high_centroid(self):
        signal = synth_preset("eq6-high", 2**12)
        assert abs(spectral_centroid_1d(signal.samples) - 0.9214) < 5e-3

    def test_aliasing_frequency_rejected(self):
        with pytest.raises(ParameterError):
            SyntheticSpec((1.0,), (0.6,), 64)

    def test_phases_deterministic_by_seed(self):
        spec = SyntheticSpec((1.0, 0.5), (0.1, 0.3), 128, phase_seed=4)
        a = synth_composite(spec).samples
        b = synth_composite(spec).samples
        assert np.array_equal(a, b)

    def test_bandlimited_full_band(self):
        signal = synth_bandlimited(0.0, 0.5, 256, SeededRng(0, "band"))
        psd = power_spectral_density(signal.samples[:, 0])
        assert np.all(psd[1:-1] > 0)
        assert np.max(np.abs(signal.samples)) == pytest.approx(1.0)

    def test_bandlimited_out_of_band_zero(self):
        n = 256
        signal = synth_bandlimited(0.4, 0.5, n, SeededRng(1, "band"))
        psd = power_spectral_density(signal.samples[:, 0])
        cutoff = int(0.4 * n)
        assert np.max(psd[:cutoff]) < 1e-10
        assert np.min(psd[cutoff : n // 2 + 1]) > 0

    def test_bandlimited_ladder_monotone_centroid(self):
        centroids = []
        for i, f_lo in enumerate(np.arange(0, 0.5, 0.0625)):
            signal = synth_bandlimited(f_lo, 0.5, 1024, SeededRng(i, "ladder"))
            centroids.append(spectral_centroid_1d(signal.samples))
        assert all(b > a for a, b in zip(centroids, centroids[1:]))

    def test_empty_band_rejected(self):
        with pytest.raises(ParameterError):
            synth_bandlimited(0.3, 0.3, 64, SeededRng(0))


class TestNormalize:
    def test_audio_peak_normalization_record(self):
        signal = Signal(kind="audio-1d", samples=np.array([0.2, -0.8, 0.4]), sample_rate=10)
        normed = normalize(signal)
        assert np.max(np.abs(normed.samples)) == pytest.approx(1.0)
        np.testing.assert_allclose(normed.raw(), signal.samples, atol=1e-15)

    def test_image_minmax_record(self):
        img = np.array([[0.25, 0.5], [0.75, 1.0]])
        signal = Signal(kind="image-2d", samples=img, scale=255.0)
        normed = normalize(signal)
        assert normed.samples.min() == 0.0 and normed.samples.max() == 1.0
        np.testing.assert_allclose(normed.raw()[:, :, 0], img * 255.0, atol=1e-12)

    def test_zero_audio_rejected(self):
        with pytest.raises(ParameterError):
            normalize(Signal(kind="audio-1d", samples=np.zeros(8)))


class TestWriters:
    def test_csv_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_csv([], ["a", "b"], path)
        assert path.read_text(encoding="utf-8").strip() == "a,b"

    def test_csv_float_round_trip(self, tmp_path):
        values = [1 / 3, 1e-17, 123456.789012345678, -2.5e-300]
        path = tmp_path / "floats.csv"
        write_csv([(i, v) for i, v in enumerate(values)], ["i", "v"], path)
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["i", "v"]
        for (_, text), want in zip(rows[1:], values):
            assert float(text) == want
            assert "." in text or "e" in text  # locale-independent decimal point

    def test_json_round_trip(self, tmp_path):
        record = {
            "schema_version": 1,
            "values": [0.1, 0.2, 1 / 3],
            "nested": {"n": 5, "name": "x"},
        }
        path = tmp_path / "r.json"
        write_json(record, path)
        assert read_json(path) == record

    def test_json_rejects_nan(self, tmp_path):
        with pytest.raises(ValueError):
            write_json({"bad": float("nan")}, tmp_path / "bad.json")

    def test_json_accepts_numpy_scalars(self, tmp_path):
        path = tmp_path / "np.json"
        write_json({"x": np.float64(0.5), "n": np.int64(3), "arr": np.arange(3)}, path)
        assert read_json(path) == {"x": 0.5, "n": 3, "arr": [0, 1, 2]}
