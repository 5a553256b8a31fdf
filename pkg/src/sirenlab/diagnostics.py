"""Spectral diagnostics: empirical NTK construction and eigenanalysis,
eigenvalue-weighted spectral energy, linearized error-decay prediction,
activation distribution/PSD probes, and STFT spectrograms.

The NTK Gram matrix has entries Theta_ij = grad_theta f(x_i) . grad_theta
f(x_j).  Its eigensystem gives per-mode convergence rates under linearized
gradient-flow dynamics; the spectral energy

    S(k) = sum_i lambda_i |fft(v_i)(k)|^2

measures the kernel's receptivity per frequency bin.  S is reported
one-sided with paired interior bins folded (DC and Nyquist unpaired), so the
identity sum_k S(k) == trace(Theta) is preserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolationError,
    ParameterError,
    ResourceLimitError,
    UnsupportedGridError,
)
from .network import NetworkConfig, Parameters, forward, jacobian_matrix
from .numerics import fft_forward, symmetric_eigendecomposition

DEFAULT_N_CAP = 2048
DEFAULT_PARAM_CAP = 20_000
HISTOGRAM_BINS = 64


@dataclass
class NtkAnalysis:
    kernel: np.ndarray  # (n, n), bitwise symmetric
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # orthonormal columns, one per eigenvalue
    grid: np.ndarray  # the (n, d) input coordinates
    spectral_energy: np.ndarray | None = None  # one-sided folded S(k)


@dataclass
class ErrorDecayPrediction:
    times: np.ndarray
    magnitudes: np.ndarray  # (len(times), n) two-sided |error_hat(t)|(k)


@dataclass
class LayerStats:
    layer: int  # 1-based; the readout layer carries outputs in `pre`
    name: str  # "hidden" | "output"
    pre_hist_edges: np.ndarray
    pre_hist_counts: np.ndarray
    pre_mean: float
    pre_std: float
    pre_psd: np.ndarray  # unit-averaged one-sided PSD
    post_hist_edges: np.ndarray | None = None
    post_hist_counts: np.ndarray | None = None
    post_mean: float | None = None
    post_std: float | None = None
    post_psd: np.ndarray | None = None


@dataclass
class ActivationStats:
    layers: list[LayerStats] = field(default_factory=list)


def empirical_ntk(
    config: NetworkConfig,
    params: Parameters,
    inputs: np.ndarray,
    n_cap: int = DEFAULT_N_CAP,
    param_cap: int = DEFAULT_PARAM_CAP,
) -> NtkAnalysis:
    """Empirical NTK kernel and eigensystem on the given inputs.

    Capped at diagnostics scale (n <= n_cap inputs, <= param_cap parameters);
    caps are overridable for larger desks.  The kernel is built from per-input
    Jacobian rows and symmetrized exactly, so Theta == Theta.T bitwise.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim == 1:
        inputs = inputs[:, np.newaxis]
    n = inputs.shape[0]
    if n > n_cap:
        raise ResourceLimitError(f"empirical_ntk: n = {n} exceeds cap {n_cap}")
    if config.n_params > param_cap:
        raise ResourceLimitError(
            f"empirical_ntk: parameter count {config.n_params} exceeds cap {param_cap}"
        )
    if config.output_dim != 1:
        raise ContractViolationError("empirical_ntk: scalar network output required")
    jac = jacobian_matrix(config, params, inputs)
    kernel = jac @ jac.T
    kernel = (kernel + kernel.T) / 2.0
    eigenvalues, eigenvectors = symmetric_eigendecomposition(kernel)
    return NtkAnalysis(kernel=kernel, eigenvalues=eigenvalues, eigenvectors=eigenvectors, grid=inputs)


def _require_uniform_1d_grid(grid: np.ndarray) -> None:
    if grid.shape[1] != 1:
        raise UnsupportedGridError(
            f"Fourier bins need a 1D coordinate grid, got d={grid.shape[1]}"
        )
    x = grid[:, 0]
    steps = np.diff(x)
    if steps.size == 0:
        return
    span = np.max(np.abs(x)) or 1.0
    if np.max(np.abs(steps - steps[0])) > 1e-9 * span:
        raise UnsupportedGridError("Fourier bins need uniformly spaced grid points")


def ntk_spectral_energy(analysis: NtkAnalysis) -> np.ndarray:
    """Eigenvalue-weighted spectral energy S(k), one-sided with interior bins
    folded; stores the result on the analysis and returns it.

    sum_k S(k) equals trace(Theta) (Parseval over orthonormal eigenvectors).
    """
    _require_uniform_1d_grid(analysis.grid)
    n = analysis.eigenvectors.shape[0]
    hatv = np.fft.fft(analysis.eigenvectors, axis=0, norm="ortho")
    two_sided = (np.abs(hatv) ** 2) @ analysis.eigenvalues
    half = n // 2
    folded = two_sided[: half + 1].copy()
    if n % 2 == 0:
        folded[1:half] += two_sided[n - 1 : half : -1]
    else:
        folded[1 : half + 1] += two_sided[n - 1 : half : -1]
    analysis.spectral_energy = folded
    return folded


def error_decay_predict(
    analysis: NtkAnalysis, initial_error: np.ndarray, times: np.ndarray
) -> ErrorDecayPrediction:
    """Frequency-domain error magnitudes under linearized training dynamics.

    The error evolves as E(t) = V diag(exp(-2 lambda_i t)) V^T E(0) in the NTK
    eigenbasis; each row of the result is |fft(E(t))| on the analysis grid.
    """
    initial_error = np.asarray(initial_error, dtype=float).ravel()
    n = analysis.eigenvectors.shape[0]
    if initial_error.size != n:
        raise ContractViolationError(
            f"error_decay_predict: initial error length {initial_error.size} != n = {n}"
        )
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ParameterError("error_decay_predict: negative time")
    coords = analysis.eigenvectors.T @ initial_error
    mags = np.empty((times.size, n))
    for row, t in enumerate(times):
        decayed = analysis.eigenvectors @ (coords * np.exp(-2.0 * analysis.eigenvalues * t))
        mags[row] = np.abs(fft_forward(decayed))
    return ErrorDecayPrediction(times=times, magnitudes=mags)


def _histogram(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    counts, edges = np.histogram(values.ravel(), bins=HISTOGRAM_BINS)
    return edges, counts


def _unit_averaged_psd(matrix: np.ndarray) -> np.ndarray:
    """One-sided PSD along the input axis, averaged over units (columns)."""
    n = matrix.shape[0]
    spectra = np.fft.fft(matrix, axis=0, norm="ortho")
    return (np.abs(spectra[: n // 2 + 1]) ** 2).mean(axis=1)


def activation_stats(
    config: NetworkConfig, params: Parameters, inputs: np.ndarray
) -> ActivationStats:
    """Distribution and spectral probes of every hidden layer (scaled
    pre-activations and post-activations) plus the network output.

    Expects inputs on a uniform 1D grid so the per-unit transforms along the
    input axis are meaningful.
    """
    outputs, trace = forward(config, params, inputs, return_trace=True)
    stats = ActivationStats()
    for l, (pre, post) in enumerate(zip(trace.pre, trace.post), start=1):
        pre_edges, pre_counts = _histogram(pre)
        post_edges, post_counts = _histogram(post)
        stats.layers.append(
            LayerStats(
                layer=l,
                name="hidden",
                pre_hist_edges=pre_edges,
                pre_hist_counts=pre_counts,
                pre_mean=float(pre.mean()),
                pre_std=float(pre.std()),
                pre_psd=_unit_averaged_psd(pre),
                post_hist_edges=post_edges,
                post_hist_counts=post_counts,
                post_mean=float(post.mean()),
                post_std=float(post.std()),
                post_psd=_unit_averaged_psd(post),
            )
        )
    out_edges, out_counts = _histogram(outputs)
    stats.layers.append(
        LayerStats(
            layer=config.n_layers,
            name="output",
            pre_hist_edges=out_edges,
            pre_hist_counts=out_counts,
            pre_mean=float(outputs.mean()),
            pre_std=float(outputs.std()),
            pre_psd=_unit_averaged_psd(outputs),
        )
    )
    return stats


def stft_spectrogram(signal: np.ndarray, window_size: int, hop: int) -> np.ndarray:
    """Hann-windowed short-time magnitude spectra, one frame per row.

    Frame count is floor((N - window_size)/hop) + 1; window_size must be a
    power of two <= N and 1 <= hop <= window_size.
    """
    signal = np.asarray(signal, dtype=float).ravel()
    n = signal.size
    if window_size < 2 or window_size & (window_size - 1):
        raise ParameterError(f"stft_spectrogram: window {window_size} is not a power of two")
    if window_size > n:
        raise ParameterError(f"stft_spectrogram: window {window_size} exceeds signal length {n}")
    if not 1 <= hop <= window_size:
        raise ParameterError(f"stft_spectrogram: hop {hop} outside [1, {window_size}]")
    window = np.hanning(window_size)
    n_frames = (n - window_size) // hop + 1
    grid = np.empty((n_frames, window_size // 2 + 1))
    for frame in range(n_frames):
        chunk = signal[frame * hop : frame * hop + window_size] * window
        grid[frame] = np.abs(fft_forward(chunk)[: window_size // 2 + 1])
    return grid


# ---------------------------------------------------------------------------
# CSV emitters (fixed column headers)
# ---------------------------------------------------------------------------

def write_eigenvalues_csv(analysis: NtkAnalysis, path) -> None:
    from .signals import write_csv

    rows = [(i, float(lam)) for i, lam in enumerate(analysis.eigenvalues)]
    write_csv(rows, ["index", "lambda"], path)


def write_spectral_energy_csv(analysis: NtkAnalysis, path) -> None:
    from .signals import write_csv

    energy = analysis.spectral_energy
    if energy is None:
        energy = ntk_spectral_energy(analysis)
    write_csv([(k, float(s)) for k, s in enumerate(energy)], ["k", "S"], path)


def write_activation_psd_csv(stats: ActivationStats, path, which: str = "pre") -> None:
    from .signals import write_csv

    if which not in ("pre", "post"):
        raise ParameterError(f"write_activation_psd_csv: which must be pre/post, got {which!r}")
    rows = []
    for layer in stats.layers:
        psd = layer.pre_psd if which == "pre" else layer.post_psd
        if psd is None:
            continue
        rows.extend((layer.layer, k, float(v)) for k, v in enumerate(psd))
    write_csv(rows, ["layer", "k", "psd"], path)


def write_histograms_csv(stats: ActivationStats, path, which: str = "pre") -> None:
    from .signals import write_csv

    if which not in ("pre", "post"):
        raise ParameterError(f"write_histograms_csv: which must be pre/post, got {which!r}")
    rows = []
    for layer in stats.layers:
        edges = layer.pre_hist_edges if which == "pre" else layer.post_hist_edges
        counts = layer.pre_hist_counts if which == "pre" else layer.post_hist_counts
        if edges is None:
            continue
        rows.extend(
            (layer.layer, float(edges[i]), int(counts[i])) for i in range(counts.size)
        )
    write_csv(rows, ["layer", "bin_left", "count"], path)
