"""Signal fitting and self-supervised denoising: MSE loss, Adam, stepped
learning-rate decay, quality metrics (PSNR, SSIM, MAE), and the training
loops that assemble TrainReports.

All randomness funnels through one seed: per-purpose substreams ("init",
"perturb", "holdout", "batches") are derived internally, so identical
(seed, spec, signal) runs produce bit-identical loss traces.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolationError,
    DivergedRunError,
    ParameterError,
    UndefinedSnrError,
)
from .network import (
    NetworkConfig,
    Parameters,
    _forward_full,
    apply_winner_perturbation,
    backward,
    forward,
    init_siren_uniform,
)
from .numerics import SeededRng
from .scales import NoiseSchedule, schedule_for_kind, spectral_centroid_1d, spectral_centroid_2d
from .signals import Signal

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TrainSpec:
    epochs: int
    lr0: float = 1e-4
    decay_fraction: float = 0.01
    decay_interval: int = 20
    batch_size: int | None = None  # None = full batch
    seed: int = 0
    snapshot_interval: int = 100

    def __post_init__(self):
        if self.epochs < 1:
            raise ParameterError(f"TrainSpec: epochs must be >= 1, got {self.epochs}")
        if not self.lr0 > 0:
            raise ParameterError(f"TrainSpec: lr0 must be > 0, got {self.lr0}")
        if not 0.0 <= self.decay_fraction < 1.0:
            raise ParameterError(
                f"TrainSpec: decay_fraction must be in [0, 1), got {self.decay_fraction}"
            )
        if self.decay_interval < 1:
            raise ParameterError(f"TrainSpec: decay_interval must be >= 1, got {self.decay_interval}")
        if self.snapshot_interval < 1:
            raise ParameterError(f"TrainSpec: snapshot_interval must be >= 1")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "lr0": self.lr0,
            "decay_fraction": self.decay_fraction,
            "decay_interval": self.decay_interval,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "snapshot_interval": self.snapshot_interval,
        }


@dataclass(frozen=True)
class DenoiseSpec:
    holdout_fraction: float = 0.02
    validation_interval: int = 50
    patience: int = 10

    def __post_init__(self):
        if not 0.0 < self.holdout_fraction < 0.5:
            raise ParameterError(
                f"DenoiseSpec: holdout_fraction must be in (0, 0.5), got {self.holdout_fraction}"
            )
        if self.validation_interval < 1:
            raise ParameterError("DenoiseSpec: validation_interval must be >= 1")
        if self.patience < 0:
            raise ParameterError("DenoiseSpec: patience must be >= 0")

    def to_dict(self) -> dict:
        return {
            "holdout_fraction": self.holdout_fraction,
            "validation_interval": self.validation_interval,
            "patience": self.patience,
        }


@dataclass(frozen=True)
class InitSpec:
    scheme: str  # "uniform" | "winner"
    s0: float | None = None
    s1: float | None = None
    auto_scales: bool = False
    schedule: NoiseSchedule | None = None  # overrides the modality preset

    def __post_init__(self):
        if self.scheme not in ("uniform", "winner"):
            raise ParameterError(f"InitSpec: unknown scheme {self.scheme!r}")
        if self.scheme == "uniform" and (
            self.s0 is not None or self.s1 is not None or self.auto_scales
        ):
            raise ParameterError("InitSpec: noise scales only apply to the winner scheme")
        if self.scheme == "winner" and not self.auto_scales and (self.s0 is None or self.s1 is None):
            raise ParameterError("InitSpec: winner scheme needs s0 and s1, or auto_scales")


@dataclass
class TrainReport:
    losses: list[float]
    lr_trace: list[float]
    snapshots: list[tuple[int, float]]  # (epoch, psnr); epoch == epochs_run is post-final-step
    best_psnr: float
    best_epoch: int
    best_params: Parameters
    final_params: Parameters
    epochs_run: int
    wall_time_s: float
    init_info: dict
    validation: list[tuple[int, float]] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "epochs_run": self.epochs_run,
            "loss_history": [float(v) for v in self.losses],
            "lr_history": [float(v) for v in self.lr_trace],
            "psnr_snapshots": [_psnr_entry(e, v) for e, v in self.snapshots],
            "best": _psnr_entry(self.best_epoch, self.best_psnr),
            "wall_time_s": self.wall_time_s,
            "init": self.init_info,
            "validation_history": [
                {"epoch": e, "mse": float(v)} for e, v in self.validation
            ],
            "extras": self.extras,
        }


def _psnr_entry(epoch: int, value: float) -> dict:
    if math.isinf(value):
        return {"epoch": int(epoch), "psnr": None, "infinite": True}
    return {"epoch": int(epoch), "psnr": float(value), "infinite": False}


# ---------------------------------------------------------------------------
# Loss, optimizer, schedule, metrics
# ---------------------------------------------------------------------------

def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ContractViolationError(f"mse_loss: shapes {pred.shape} != {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_loss_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Gradient of mse_loss w.r.t. pred: 2*(pred - target)/n_entries."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ContractViolationError(f"mse_loss_grad: shapes {pred.shape} != {target.shape}")
    return 2.0 * (pred - target) / pred.size


class Adam:
    """Standard Adam with bias correction; updates parameters in place."""

    def __init__(self, params: Parameters, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = Parameters(
            [np.zeros_like(w) for w in params.weights], [np.zeros_like(b) for b in params.biases]
        )
        self.v = Parameters(
            [np.zeros_like(w) for w in params.weights], [np.zeros_like(b) for b in params.biases]
        )

    def step(self, params: Parameters, grads: Parameters, lr: float) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for group in ("weights", "biases"):
            targets = getattr(params, group)
            gs = getattr(grads, group)
            ms = getattr(self.m, group)
            vs = getattr(self.v, group)
            for value, g, m, v in zip(targets, gs, ms, vs):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * (g * g)
                value -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def lr_schedule(spec: TrainSpec, epoch: int) -> float:
    """lr0 * (1 - decay_fraction)^floor(epoch / decay_interval)."""
    if epoch < 0:
        raise ParameterError(f"lr_schedule: epoch must be >= 0, got {epoch}")
    return spec.lr0 * (1.0 - spec.decay_fraction) ** (epoch // spec.decay_interval)


def psnr(pred: np.ndarray, target: np.ndarray, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE) in dB; +inf when MSE is exactly zero."""
    if not peak > 0:
        raise ParameterError(f"psnr: peak must be > 0, got {peak}")
    mse = mse_loss(pred, target)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / mse))


def mae(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ContractViolationError(f"mae: shapes {pred.shape} != {target.shape}")
    return float(np.mean(np.abs(pred - target)))


_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def _filter_valid(img: np.ndarray, kernel1d: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation of a 2D image with a 1D kernel."""
    win = np.lib.stride_tricks.sliding_window_view(img, kernel1d.size, axis=0)
    rows = win @ kernel1d
    win = np.lib.stride_tricks.sliding_window_view(rows, kernel1d.size, axis=1)
    return win @ kernel1d


def _ssim_single(a: np.ndarray, b: np.ndarray) -> float:
    window = _gaussian_window(_SSIM_WINDOW, _SSIM_SIGMA)
    mu_a = _filter_valid(a, window)
    mu_b = _filter_valid(b, window)
    var_a = _filter_valid(a * a, window) - mu_a * mu_a
    var_b = _filter_valid(b * b, window) - mu_b * mu_b
    cov = _filter_valid(a * b, window) - mu_a * mu_b
    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(pred: np.ndarray, target: np.ndarray) -> float:
    """Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), dynamic
    range 1, averaged over valid window positions (and channels)."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ContractViolationError(f"ssim: shapes {pred.shape} != {target.shape}")
    if pred.ndim == 2:
        pred = pred[:, :, np.newaxis]
        target = target[:, :, np.newaxis]
    if pred.ndim != 3:
        raise ParameterError(f"ssim: expected 2D image (+channels), got shape {pred.shape}")
    if pred.shape[0] < _SSIM_WINDOW or pred.shape[1] < _SSIM_WINDOW:
        raise ParameterError(
            f"ssim: image {pred.shape[:2]} smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} window"
        )
    return float(
        np.mean([_ssim_single(pred[:, :, c], target[:, :, c]) for c in range(pred.shape[2])])
    )


def add_gaussian_noise_snr(signal: Signal, snr_db: float, rng: SeededRng) -> Signal:
    """Additive white Gaussian noise with variance mean(s^2) * 10^(-snr/10).

    An infinite snr_db returns the signal unchanged.
    """
    if math.isinf(snr_db) and snr_db > 0:
        out = Signal(signal.kind, signal.samples.copy(), signal.sample_rate)
        out.offset, out.scale = signal.offset, signal.scale
        return out
    power = float(np.mean(signal.samples**2))
    if power == 0.0:
        raise UndefinedSnrError("add_gaussian_noise_snr: zero signal has no defined SNR")
    sigma = math.sqrt(power * 10.0 ** (-snr_db / 10.0))
    noisy = signal.samples + rng.generator.normal(0.0, sigma, signal.samples.shape)
    out = Signal(signal.kind, noisy, signal.sample_rate)
    out.offset, out.scale = signal.offset, signal.scale
    return out


# ---------------------------------------------------------------------------
# Coordinates, initialization, training loops
# ---------------------------------------------------------------------------

def coordinate_grid(signal: Signal) -> np.ndarray:
    """Uniform coordinates on [-1,1] (1D) or [-1,1]^2 (2D, row-major (y, x))."""
    if signal.kind == "audio-1d":
        n = signal.samples.shape[0]
        return np.linspace(-1.0, 1.0, n)[:, np.newaxis]
    h, w = signal.samples.shape[:2]
    ys = np.linspace(-1.0, 1.0, h)
    xs = np.linspace(-1.0, 1.0, w)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.column_stack([yy.ravel(), xx.ravel()])


def initialize(
    config: NetworkConfig, init_spec: InitSpec, signal: Signal, rng: SeededRng
) -> tuple[Parameters, dict]:
    """Initialize parameters per the init spec, resolving auto noise scales
    from the target's spectral centroid when requested."""
    params = init_siren_uniform(config, rng.substream("init"))
    info: dict = {"scheme": init_spec.scheme}
    if init_spec.scheme == "uniform":
        return params, info
    if init_spec.auto_scales:
        schedule = init_spec.schedule or schedule_for_kind(signal.kind)
        if signal.kind == "audio-1d":
            psi = spectral_centroid_1d(signal.samples)
        else:
            psi = spectral_centroid_2d(signal.samples)
        from .scales import noise_scales

        s0, s1 = noise_scales(psi, signal.channels, schedule)
        info.update({"psi": psi, "schedule": schedule.to_dict(), "auto_scales": True})
    else:
        s0, s1 = float(init_spec.s0), float(init_spec.s1)
        info["auto_scales"] = False
    info.update({"s0": s0, "s1": s1})
    params = apply_winner_perturbation(params, config, s0, s1, rng.substream("perturb"))
    return params, info


def _check_target(config: NetworkConfig, signal: Signal) -> np.ndarray:
    target = signal.flat_values()
    if target.shape[1] != config.output_dim:
        raise ContractViolationError(
            f"target has {target.shape[1]} channels but network output_dim is {config.output_dim}"
        )
    return target


def fit(
    config: NetworkConfig, init_spec: InitSpec, signal: Signal, train_spec: TrainSpec
) -> TrainReport:
    """Supervised fit of the network to a normalized signal.

    Full-batch (or fixed-seed mini-batch) Adam on MSE with the stepped
    learning-rate decay; PSNR is snapshot every snapshot_interval epochs and
    once more after the final update.  Raises DivergedRunError on a
    non-finite loss.
    """
    start = time.perf_counter()
    coords = coordinate_grid(signal)
    target = _check_target(config, signal)
    rng = SeededRng(train_spec.seed)
    params, init_info = initialize(config, init_spec, signal, rng)
    adam = Adam(params)
    batch_rng = rng.substream("batches")

    losses: list[float] = []
    lr_trace: list[float] = []
    snapshots: list[tuple[int, float]] = []
    best_psnr = -math.inf
    best_epoch = -1
    best_params = params.copy()

    def record_snapshot(epoch: int, outputs: np.ndarray, current: Parameters) -> None:
        nonlocal best_psnr, best_epoch, best_params
        value = psnr(outputs, target)
        snapshots.append((epoch, value))
        if value > best_psnr:
            best_psnr = value
            best_epoch = epoch
            best_params = current.copy()

    for epoch in range(train_spec.epochs):
        lr = lr_schedule(train_spec, epoch)
        lr_trace.append(lr)
        if train_spec.batch_size is None:
            outputs, h, pre = _forward_full(config, params, coords)
            loss = mse_loss(outputs, target)
            if not math.isfinite(loss):
                raise DivergedRunError(
                    f"fit: non-finite loss at epoch {epoch}", last_finite_epoch=epoch - 1
                )
            if epoch % train_spec.snapshot_interval == 0:
                record_snapshot(epoch, outputs, params)
            grads = backward(config, params, coords, mse_loss_grad(outputs, target), _cache=(outputs, h, pre))
            adam.step(params, grads, lr)
        else:
            order = batch_rng.generator.permutation(coords.shape[0])
            batch_losses = []
            for lo in range(0, coords.shape[0], train_spec.batch_size):
                idx = order[lo : lo + train_spec.batch_size]
                outputs, h, pre = _forward_full(config, params, coords[idx])
                loss_b = mse_loss(outputs, target[idx])
                if not math.isfinite(loss_b):
                    raise DivergedRunError(
                        f"fit: non-finite loss at epoch {epoch}", last_finite_epoch=epoch - 1
                    )
                grads = backward(
                    config, params, coords[idx], mse_loss_grad(outputs, target[idx]), _cache=(outputs, h, pre)
                )
                adam.step(params, grads, lr)
                batch_losses.append(loss_b * len(idx))
            loss = float(sum(batch_losses) / coords.shape[0])
            if epoch % train_spec.snapshot_interval == 0:
                record_snapshot(epoch, forward(config, params, coords), params)
        losses.append(loss)

    record_snapshot(train_spec.epochs, forward(config, params, coords), params)
    return TrainReport(
        losses=losses,
        lr_trace=lr_trace,
        snapshots=snapshots,
        best_psnr=best_psnr,
        best_epoch=best_epoch,
        best_params=best_params,
        final_params=params,
        epochs_run=train_spec.epochs,
        wall_time_s=time.perf_counter() - start,
        init_info=init_info,
    )


def masked_mse_and_grad(
    pred: np.ndarray, target: np.ndarray, kept: np.ndarray
) -> tuple[float, np.ndarray]:
    """MSE over kept grid points only, and its gradient w.r.t. pred.

    The gradient is exactly zero at held-out points, which is what makes the
    held-out set a J-invariant validation probe.
    """
    kept = np.asarray(kept, dtype=bool)
    diff = (pred - target) * kept[:, np.newaxis]
    n_terms = int(kept.sum()) * pred.shape[1]
    loss = float(np.sum(diff * diff) / n_terms)
    return loss, 2.0 * diff / n_terms


def denoise_fit(
    config: NetworkConfig,
    init_spec: InitSpec,
    noisy_signal: Signal,
    denoise_spec: DenoiseSpec,
    train_spec: TrainSpec,
    clean_signal: Signal | None = None,
) -> tuple[TrainReport, Signal]:
    """Self-supervised denoising fit with a held-out validation subset.

    A fixed random subset of grid points is excluded from the training loss;
    their MSE serves as the early-stopping criterion (stop after `patience`
    consecutive non-improving checks, checked every validation_interval
    epochs).  The returned parameters/output are from the best validation
    checkpoint.  A clean reference, when given, is used for reported metrics
    only, never for selection.
    """
    start = time.perf_counter()
    coords = coordinate_grid(noisy_signal)
    target = _check_target(config, noisy_signal)
    n = coords.shape[0]
    rng = SeededRng(train_spec.seed)
    params, init_info = initialize(config, init_spec, noisy_signal, rng)
    adam = Adam(params)

    n_holdout = max(1, round(denoise_spec.holdout_fraction * n))
    holdout = rng.substream("holdout").generator.choice(n, size=n_holdout, replace=False)
    kept = np.ones(n, dtype=bool)
    kept[holdout] = False

    losses: list[float] = []
    lr_trace: list[float] = []
    validation: list[tuple[int, float]] = []
    best_val = math.inf
    best_epoch = -1
    best_params = params.copy()
    stale_checks = 0
    epochs_run = 0

    for epoch in range(train_spec.epochs):
        lr = lr_schedule(train_spec, epoch)
        lr_trace.append(lr)
        outputs, h, pre = _forward_full(config, params, coords)
        loss, out_grad = masked_mse_and_grad(outputs, target, kept)
        if not math.isfinite(loss):
            raise DivergedRunError(
                f"denoise_fit: non-finite loss at epoch {epoch}", last_finite_epoch=epoch - 1
            )
        losses.append(loss)
        grads = backward(config, params, coords, out_grad, _cache=(outputs, h, pre))
        adam.step(params, grads, lr)
        epochs_run = epoch + 1
        if (epoch + 1) % denoise_spec.validation_interval == 0:
            val_pred = forward(config, params, coords[holdout])
            val_mse = mse_loss(val_pred, target[holdout])
            validation.append((epoch + 1, val_mse))
            if val_mse < best_val:
                best_val = val_mse
                best_epoch = epoch + 1
                best_params = params.copy()
                stale_checks = 0
            else:
                stale_checks += 1
            if stale_checks >= denoise_spec.patience:
                break

    denoised_values = forward(config, best_params, coords)
    denoised = Signal(
        noisy_signal.kind,
        denoised_values.reshape(noisy_signal.samples.shape),
        noisy_signal.sample_rate,
    )
    denoised.offset, denoised.scale = noisy_signal.offset, noisy_signal.scale

    extras: dict = {
        "holdout_count": int(n_holdout),
        "best_validation_mse": None if math.isinf(best_val) else float(best_val),
    }
    if clean_signal is not None:
        clean = clean_signal.flat_values()
        extras["psnr_noisy_vs_clean"] = psnr(target, clean)
        extras["psnr_denoised_vs_clean"] = psnr(denoised_values, clean)
        extras["mae_denoised_vs_clean"] = mae(denoised_values, clean)
        if noisy_signal.kind == "image-2d":
            extras["ssim_denoised_vs_clean"] = ssim(
                denoised.samples, clean_signal.samples
            )
    report = TrainReport(
        losses=losses,
        lr_trace=lr_trace,
        snapshots=[],
        best_psnr=extras.get("psnr_denoised_vs_clean", -math.inf),
        best_epoch=best_epoch,
        best_params=best_params,
        final_params=params,
        epochs_run=epochs_run,
        wall_time_s=time.perf_counter() - start,
        init_info=init_info,
        validation=validation,
        extras=extras,
    )
    return report, denoised
