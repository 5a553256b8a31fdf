"""Signal ingestion and emission: WAV PCM16 audio, binary PGM/PPM images,
synthetic composites and band-limited broadband signals, normalization, and
CSV/JSON writers.

A Signal's normalization record maps stored samples back to raw units via
raw = samples * scale + offset; every reader fills it in and normalize()
composes with it, so raw units are always recoverable.
"""

from __future__ import annotations

import csv
import json
import math
import wave
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, UnsupportedFormatError
from .numerics import SeededRng

# Tone amplitudes and normalized frequencies of the low/high three-tone
# composite targets (amplitudes sum to 1; frequencies in cycles per sample).
COMPOSITE_AMPLITUDES = (1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0)
COMPOSITE_PRESETS = {
    "eq6-low": (0.125, 0.25, 0.375),
    "eq6-high": (0.425, 0.45, 0.475),
}

DEFAULT_WAV_MAX_SAMPLES = 150_000


@dataclass
class Signal:
    kind: str  # "audio-1d" | "image-2d"
    samples: np.ndarray  # (N, C) or (H, W, C), float64
    sample_rate: int | None = None
    offset: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.kind == "audio-1d":
            if self.samples.ndim == 1:
                self.samples = self.samples[:, np.newaxis]
            if self.samples.ndim != 2 or self.samples.shape[0] < 2:
                raise ParameterError(f"audio signal needs (N>=2, C) samples, got {self.samples.shape}")
        elif self.kind == "image-2d":
            if self.samples.ndim == 2:
                self.samples = self.samples[:, :, np.newaxis]
            if self.samples.ndim != 3 or min(self.samples.shape[:2]) < 2:
                raise ParameterError(f"image signal needs (H>=2, W>=2, C) samples, got {self.samples.shape}")
        else:
            raise ParameterError(f"unknown signal kind {self.kind!r}")

    @property
    def channels(self) -> int:
        return self.samples.shape[-1]

    @property
    def n_points(self) -> int:
        """Number of grid points (samples or pixels), excluding channels."""
        return int(np.prod(self.samples.shape[:-1]))

    def flat_values(self) -> np.ndarray:
        """Samples reshaped to (n_points, channels) in row-major grid order."""
        return self.samples.reshape(self.n_points, self.channels)

    def raw(self) -> np.ndarray:
        return self.samples * self.scale + self.offset


@dataclass
class SyntheticSpec:
    amplitudes: tuple
    frequencies: tuple  # normalized, cycles per sample, in (0, 0.5]
    n: int
    phases: tuple | None = None  # None -> all-zero phases
    phase_seed: int | None = None  # draws U(-pi, pi) phases when set

    def __post_init__(self):
        if len(self.amplitudes) != len(self.frequencies):
            raise ParameterError("SyntheticSpec: amplitudes and frequencies length mismatch")
        if self.n < 2:
            raise ParameterError(f"SyntheticSpec: need n >= 2, got {self.n}")
        for f in self.frequencies:
            if not 0.0 < f <= 0.5:
                raise ParameterError(
                    f"SyntheticSpec: frequency {f} outside (0, 0.5] would alias"
                )
        if self.phases is not None and len(self.phases) != len(self.frequencies):
            raise ParameterError("SyntheticSpec: phases length mismatch")


def synth_composite(spec: SyntheticSpec) -> Signal:
    """Sum of sinusoids s(n) = sum_i A_i*sin(2*pi*f_i*n + phi_i), n = 0..N-1."""
    if spec.phases is not None:
        phases = np.asarray(spec.phases, dtype=float)
    elif spec.phase_seed is not None:
        phases = SeededRng(spec.phase_seed, "phases").generator.uniform(
            -np.pi, np.pi, len(spec.frequencies)
        )
    else:
        phases = np.zeros(len(spec.frequencies))
    n = np.arange(spec.n)
    samples = np.zeros(spec.n)
    for amp, freq, phi in zip(spec.amplitudes, spec.frequencies, phases):
        samples += amp * np.sin(2.0 * np.pi * freq * n + phi)
    return Signal(kind="audio-1d", samples=samples)


def synth_preset(name: str, n: int) -> Signal:
    """Three-tone composite presets "eq6-low" / "eq6-high" at N samples.

    Tone frequencies are snapped to the nearest integer number of cycles over
    the N-sample window, so each tone is an exact DFT bin: spectra are
    leakage-free and the spectral centroid equals the closed-form
    amplitude-weighted mean of the tone frequencies.
    """
    if name not in COMPOSITE_PRESETS:
        raise ParameterError(
            f"unknown synth preset {name!r}; available: {sorted(COMPOSITE_PRESETS)}"
        )
    snapped = tuple(round(f * n) / n for f in COMPOSITE_PRESETS[name])
    return synth_composite(SyntheticSpec(COMPOSITE_AMPLITUDES, snapped, n))


def synth_bandlimited(f_lo: float, f_hi: float, n: int, rng: SeededRng) -> Signal:
    """Flat-band broadband signal: unit-amplitude random-phase sinusoids at
    every DFT bin inside [f_lo, f_hi], rescaled to peak 1.
    """
    if not (0.0 <= f_lo < f_hi <= 0.5):
        raise ParameterError(f"synth_bandlimited: need 0 <= f_lo < f_hi <= 0.5, got ({f_lo}, {f_hi})")
    k_lo = max(1, int(math.ceil(f_lo * n - 1e-9)))
    k_hi = min(n // 2, int(math.floor(f_hi * n + 1e-9)))
    if k_hi < k_lo:
        raise ParameterError(f"synth_bandlimited: empty band [{f_lo}, {f_hi}] at N={n}")
    bins = np.arange(k_lo, k_hi + 1)
    phases = rng.generator.uniform(-np.pi, np.pi, bins.size)
    m = np.arange(n)
    samples = np.cos(2.0 * np.pi * np.outer(m, bins / n) + phases).sum(axis=1)
    samples /= np.max(np.abs(samples))
    return Signal(kind="audio-1d", samples=samples)


def normalize(signal: Signal) -> Signal:
    """Peak-normalize audio to [-1, 1] or min-max images to [0, 1], composing
    the affine change into the signal's raw-unit record."""
    values = signal.samples
    if signal.kind == "audio-1d":
        peak = float(np.max(np.abs(values)))
        if peak == 0:
            raise ParameterError("normalize: all-zero audio signal")
        return replace(
            signal, samples=values / peak, scale=signal.scale * peak, offset=signal.offset
        )
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        raise ParameterError("normalize: constant image has no dynamic range")
    return replace(
        signal,
        samples=(values - lo) / (hi - lo),
        scale=signal.scale * (hi - lo),
        offset=signal.offset + signal.scale * lo,
    )


# ---------------------------------------------------------------------------
# WAV (RIFF PCM 16-bit little-endian)
# ---------------------------------------------------------------------------

def read_wav(path, max_samples: int = DEFAULT_WAV_MAX_SAMPLES) -> Signal:
    """Read a PCM16 mono/stereo WAV file; stereo is folded to mono by
    averaging.  Values are raw/32768 in [-1, 1); truncated to max_samples."""
    try:
        with wave.open(str(path), "rb") as fh:
            if fh.getcomptype() != "NONE":
                raise UnsupportedFormatError(
                    f"{path}: compressed WAV (format tag {fh.getcomptype()!r}) unsupported"
                )
            if fh.getsampwidth() != 2:
                raise UnsupportedFormatError(
                    f"{path}: only 16-bit PCM supported, got {8 * fh.getsampwidth()}-bit"
                )
            channels = fh.getnchannels()
            if channels not in (1, 2):
                raise UnsupportedFormatError(f"{path}: {channels} channels unsupported (want 1-2)")
            n_frames = min(fh.getnframes(), max_samples)
            raw = np.frombuffer(fh.readframes(n_frames), dtype="<i2")
            rate = fh.getframerate()
    except wave.Error as exc:
        raise UnsupportedFormatError(f"{path}: {exc}") from exc
    values = raw.astype(float).reshape(-1, channels).mean(axis=1) / 32768.0
    return Signal(kind="audio-1d", samples=values, sample_rate=rate, scale=32768.0)


def write_wav(signal: Signal, path) -> None:
    """Write mono PCM16; samples are rounded to nearest and clamped."""
    if signal.kind != "audio-1d":
        raise ParameterError("write_wav: audio-1d signal required")
    values = signal.flat_values().mean(axis=1)
    quantized = np.clip(np.rint(values * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(signal.sample_rate or 44_100)
        fh.writeframes(quantized.tobytes())


# ---------------------------------------------------------------------------
# PGM (P5) / PPM (P6), binary, maxval 255 or 65535
# ---------------------------------------------------------------------------

def _read_pnm_header(data: bytes) -> tuple[bytes, list[int], int]:
    """Magic, [width, height, maxval], and offset of the raster start."""
    magic = data[:2]
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] not in (0x0A, 0x0D):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if pos == start:
            raise UnsupportedFormatError("truncated PNM header")
        tokens.append(int(data[start:pos]))
    return magic, tokens, pos + 1  # single whitespace byte after maxval


def read_pgm_ppm(path) -> Signal:
    """Read binary P5 (grayscale) or P6 (RGB); values scaled to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise UnsupportedFormatError(
            f"{path}: unsupported magic {magic!r} (binary P5/P6 only)"
        )
    _, (width, height, maxval), ofs = _read_pnm_header(data)
    if not 0 < maxval < 65536:
        raise UnsupportedFormatError(f"{path}: invalid maxval {maxval}")
    channels = 1 if magic == b"P5" else 3
    count = width * height * channels
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    raster = np.frombuffer(data, dtype=dtype, count=count, offset=ofs)
    if raster.size < count:
        raise UnsupportedFormatError(f"{path}: truncated raster")
    values = raster.astype(float).reshape(height, width, channels) / maxval
    return Signal(kind="image-2d", samples=values, scale=float(maxval))


def write_pgm_ppm(signal: Signal, path, maxval: int = 255) -> None:
    """Write binary P5 (1 channel) or P6 (3 channels) from [0, 1] samples."""
    if signal.kind != "image-2d":
        raise ParameterError("write_pgm_ppm: image-2d signal required")
    if maxval not in (255, 65535):
        raise ParameterError(f"write_pgm_ppm: maxval must be 255 or 65535, got {maxval}")
    h, w, c = signal.samples.shape
    if c == 1:
        magic = b"P5"
    elif c == 3:
        magic = b"P6"
    else:
        raise ParameterError(f"write_pgm_ppm: {c}-channel images unsupported (want 1 or 3)")
    quantized = np.clip(np.rint(signal.samples * maxval), 0, maxval)
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    with open(path, "wb") as fh:
        fh.write(magic + b"\n")
        fh.write(f"{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(quantized.astype(dtype).tobytes())


# ---------------------------------------------------------------------------
# CSV / JSON emitters
# ---------------------------------------------------------------------------

def _csv_cell(value) -> str:
    # repr() of a float is its shortest exact representation; '.' decimal
    # point regardless of locale.
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(rows, headers, path) -> None:
    """RFC-4180-style CSV with a header row; floats round-trip exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def write_json(record, path) -> None:
    """Schema-versioned JSON; floats are exact (shortest round-trip repr),
    non-finite values are rejected so infinities must be encoded explicitly."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, allow_nan=False, default=_jsonable)
        fh.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
