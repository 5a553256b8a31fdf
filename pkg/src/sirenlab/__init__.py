"""Sinusoidal implicit neural representations with target-aware noisy
initialization and NTK spectral diagnostics."""

from .errors import (
    ContractViolationError,
    DivergedRunError,
    EmptyInputError,
    ParameterError,
    ResourceLimitError,
    SirenlabError,
    UndefinedCentroidError,
    UndefinedSnrError,
    UnsupportedFormatError,
    UnsupportedGridError,
)
from .numerics import (
    SeededRng,
    fft2_forward,
    fft_forward,
    power_spectral_density,
    sample_arcsine,
    sample_normal,
    sample_uniform,
    symmetric_eigendecomposition,
)
from .network import (
    ActivationTrace,
    NetworkConfig,
    Parameters,
    apply_winner_perturbation,
    backward,
    flatten_parameters,
    forward,
    init_siren_uniform,
    jacobian_matrix,
    jacobian_row,
    load_checkpoint,
    save_checkpoint,
    unflatten_parameters,
)
from .scales import (
    AUDIO_SCHEDULE,
    IMAGE_SCHEDULE,
    CentroidReport,
    NoiseSchedule,
    centroid_report,
    noise_scales,
    schedule_for_kind,
    spectral_centroid_1d,
    spectral_centroid_2d,
)
from .signals import (
    Signal,
    SyntheticSpec,
    normalize,
    read_json,
    read_pgm_ppm,
    read_wav,
    synth_bandlimited,
    synth_composite,
    synth_preset,
    write_csv,
    write_json,
    write_pgm_ppm,
    write_wav,
)
from .diagnostics import (
    ActivationStats,
    ErrorDecayPrediction,
    NtkAnalysis,
    activation_stats,
    empirical_ntk,
    error_decay_predict,
    ntk_spectral_energy,
    stft_spectrogram,
)
from .training import (
    Adam,
    DenoiseSpec,
    InitSpec,
    TrainReport,
    TrainSpec,
    add_gaussian_noise_snr,
    coordinate_grid,
    denoise_fit,
    fit,
    initialize,
    lr_schedule,
    mae,
    masked_mse_and_grad,
    mse_loss,
    mse_loss_grad,
    psnr,
    ssim,
)

__version__ = "0.1.0"
