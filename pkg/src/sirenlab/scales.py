"""Target-aware noise-scale selection.

The spectral centroid psi of a target signal (magnitude-weighted mean
normalized frequency, mapped to [0, 1]) drives the Gaussian perturbation
scales (s0, s1) through

    s0 = s0_max * (1 - exp(-a * psi / C)),    s1 = b * psi / C,

where C is the channel count.  Presets: (s0_max, a, b) = (3500, 7, 3) for 1D
audio and (50, 5, 0.4) for 2D images; both exponent constants reproduce the
published scale tables for their modality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UndefinedCentroidError
from .numerics import fft2_forward, fft_forward


@dataclass(frozen=True)
class NoiseSchedule:
    s0_max: float
    a: float
    b: float
    modality: str  # "audio-1d" | "image-2d"

    def __post_init__(self):
        if self.s0_max < 0 or not self.a > 0 or self.b < 0:
            raise ParameterError(
                f"NoiseSchedule: need s0_max >= 0, a > 0, b >= 0; got "
                f"({self.s0_max}, {self.a}, {self.b})"
            )
        if self.modality not in ("audio-1d", "image-2d"):
            raise ParameterError(f"NoiseSchedule: unknown modality {self.modality!r}")

    def to_dict(self) -> dict:
        return {"s0_max": self.s0_max, "a": self.a, "b": self.b, "modality": self.modality}


AUDIO_SCHEDULE = NoiseSchedule(s0_max=3500.0, a=7.0, b=3.0, modality="audio-1d")
IMAGE_SCHEDULE = NoiseSchedule(s0_max=50.0, a=5.0, b=0.4, modality="image-2d")


@dataclass
class CentroidReport:
    psi: float
    channels: int
    magnitude_spectrum: np.ndarray  # channel-averaged one-sided magnitudes


def _channel_view(samples: np.ndarray, grid_ndim: int) -> np.ndarray:
    """Reshape (..., C) or bare grid arrays to grid dims + channel axis."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == grid_ndim:
        return samples[..., np.newaxis]
    if samples.ndim == grid_ndim + 1:
        return samples
    raise ParameterError(
        f"expected a {grid_ndim}D grid with optional channel axis, got shape {samples.shape}"
    )


def spectral_centroid_1d(signal: np.ndarray) -> float:
    """Normalized spectral centroid of a 1D signal, in [0, 1].

    psi = 2 * sum_k f_k |y(k)| / sum_k |y(k)| over one-sided bins
    k = 0..floor(N/2) with f_k = k/N; multichannel magnitude spectra are
    averaged across channels first.
    """
    samples = _channel_view(signal, 1)
    n = samples.shape[0]
    if n < 2:
        raise ParameterError(f"spectral_centroid_1d: need N >= 2 samples, got {n}")
    half = n // 2
    mags = np.mean(
        [np.abs(fft_forward(samples[:, c])[: half + 1]) for c in range(samples.shape[1])],
        axis=0,
    )
    total = mags.sum()
    if total == 0:
        raise UndefinedCentroidError("spectral_centroid_1d: all-zero signal")
    freqs = np.arange(half + 1) / n
    return float(2.0 * np.sum(freqs * mags) / total)


def spectral_centroid_2d(image: np.ndarray) -> float:
    """Radial spectral centroid of an image, in [0, 1].

    Uses the full 2D magnitude spectrum (row-column transform, channels
    averaged) weighted by radial frequency r = sqrt(fx^2 + fy^2) with folded
    per-axis frequencies fx, fy in [0, 0.5], normalized by r_max = 0.5*sqrt(2).
    """
    samples = _channel_view(image, 2)
    h, w = samples.shape[:2]
    if h < 2 or w < 2:
        raise ParameterError(f"spectral_centroid_2d: need H, W >= 2, got {(h, w)}")
    mags = np.mean(
        [np.abs(fft2_forward(samples[:, :, c])) for c in range(samples.shape[2])], axis=0
    )
    total = mags.sum()
    if total == 0:
        raise UndefinedCentroidError("spectral_centroid_2d: all-zero image")
    fy = np.minimum(np.arange(h), h - np.arange(h)) / h
    fx = np.minimum(np.arange(w), w - np.arange(w)) / w
    radial = np.sqrt(fy[:, np.newaxis] ** 2 + fx[np.newaxis, :] ** 2)
    r_max = 0.5 * np.sqrt(2.0)
    return float(np.sum(radial * mags) / (r_max * total))


def centroid_report(samples: np.ndarray, kind: str) -> CentroidReport:
    """CentroidReport for audio-1d or image-2d sample grids."""
    if kind == "audio-1d":
        view = _channel_view(samples, 1)
        psi = spectral_centroid_1d(view)
        half = view.shape[0] // 2
        mags = np.mean(
            [np.abs(fft_forward(view[:, c])[: half + 1]) for c in range(view.shape[1])], axis=0
        )
        return CentroidReport(psi=psi, channels=view.shape[1], magnitude_spectrum=mags)
    if kind == "image-2d":
        view = _channel_view(samples, 2)
        psi = spectral_centroid_2d(view)
        spec2d = np.mean(
            [np.abs(fft2_forward(view[:, :, c])) for c in range(view.shape[2])], axis=0
        )
        # Radially sorted magnitudes, summarized as the per-row mean spectrum.
        return CentroidReport(psi=psi, channels=view.shape[2], magnitude_spectrum=spec2d.mean(axis=0))
    raise ParameterError(f"centroid_report: unknown kind {kind!r}")


def noise_scales(psi: float, channels: int, schedule: NoiseSchedule) -> tuple[float, float]:
    """Map a spectral centroid to perturbation scales (s0, s1)."""
    if not 0.0 <= psi <= 1.0:
        raise ParameterError(f"noise_scales: psi must be in [0, 1], got {psi}")
    if channels < 1:
        raise ParameterError(f"noise_scales: channels must be >= 1, got {channels}")
    ratio = psi / channels
    s0 = schedule.s0_max * (1.0 - np.exp(-schedule.a * ratio))
    s1 = schedule.b * ratio
    return float(s0), float(s1)


def schedule_for_kind(kind: str) -> NoiseSchedule:
    if kind == "audio-1d":
        return AUDIO_SCHEDULE
    if kind == "image-2d":
        return IMAGE_SCHEDULE
    raise ParameterError(f"schedule_for_kind: unknown kind {kind!r}")
