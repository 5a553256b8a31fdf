"""Command-line entry point wiring the library into reproducible experiments.

Every run writes a manifest (resolved arguments, seed, inputs, outputs) that
is sufficient to re-execute it via `sirenlab rerun`.  All randomized behavior
funnels through --seed; per-purpose streams are derived internally.

Exit codes: 0 success, 2 argument errors, 3 I/O errors, 4 diverged run.
"""

from __future__ import annotations

import argparse
import datetime
import itertools
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (
    activation_stats,
    empirical_ntk,
    ntk_spectral_energy,
    write_activation_psd_csv,
    write_eigenvalues_csv,
    write_histograms_csv,
    write_spectral_energy_csv,
)
from .errors import (
    DivergedRunError,
    ParameterError,
    SirenlabError,
    UnsupportedFormatError,
)
from .network import NetworkConfig, forward, load_checkpoint, save_checkpoint
from .numerics import SeededRng
from .scales import centroid_report, noise_scales, schedule_for_kind
from .signals import (
    Signal,
    normalize,
    read_json,
    read_pgm_ppm,
    read_wav,
    synth_bandlimited,
    synth_preset,
    write_csv,
    write_json,
    write_pgm_ppm,
    write_wav,
)
from .training import (
    DenoiseSpec,
    InitSpec,
    TrainSpec,
    add_gaussian_noise_snr,
    coordinate_grid,
    denoise_fit,
    fit,
    initialize,
)

MANIFEST_SCHEMA_VERSION = 1


class CliError(Exception):
    """Argument-level error (exit 2) with a message naming the failing flag."""


def parse_arch(text: str) -> tuple[int, ...]:
    """Hidden widths from 'DxW' (D layers of width W) or a comma list."""
    text = text.strip().lower()
    try:
        if "x" in text:
            depth, width = text.split("x")
            widths = (int(width),) * int(depth)
        else:
            widths = tuple(int(tok) for tok in text.split(","))
        if not widths or any(w < 1 for w in widths):
            raise ValueError
        return widths
    except ValueError:
        raise CliError(f"--arch: expected 'DxW' or comma list of widths, got {text!r}")


def _resolve_out(path_text: str) -> Path:
    root = os.environ.get("SIRENLAB_OUT_ROOT")
    path = Path(path_text)
    if root and not path.is_absolute():
        path = Path(root) / path
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_input(args, need_n: bool = True) -> Signal:
    """Load --input: a .wav/.pgm/.ppm path or synth:eq6-low / synth:eq6-high."""
    spec = args.input
    if spec.startswith("synth:"):
        name = spec.split(":", 1)[1]
        n = getattr(args, "n", None)
        if need_n and not n:
            raise CliError("--n: required with synth: inputs")
        return synth_preset(name, n)
    path = Path(spec)
    suffix = path.suffix.lower()
    if suffix == ".wav":
        return normalize(read_wav(path, max_samples=getattr(args, "max_samples", 150_000)))
    if suffix in (".pgm", ".ppm"):
        return read_pgm_ppm(path)
    raise UnsupportedFormatError(f"--input: unsupported file type {suffix!r} for {spec!r}")


def _build_config(args, input_dim: int, output_dim: int) -> NetworkConfig:
    return NetworkConfig(
        input_dim=input_dim,
        hidden_widths=parse_arch(args.arch),
        output_dim=output_dim,
        omega0=args.omega0,
        first_layer_omega_scale=args.first_layer_scale,
        input_scale=args.input_scale,
    )


def _build_init_spec(args) -> InitSpec:
    if args.init == "uniform":
        if args.s0 is not None or args.s1 is not None:
            raise CliError("--s0/--s1: only valid with --init winner")
        if args.auto_scales:
            raise CliError("--auto-scales: only valid with --init winner")
        return InitSpec(scheme="uniform")
    if args.auto_scales:
        if args.s0 is not None or args.s1 is not None:
            raise CliError("--auto-scales: conflicts with explicit --s0/--s1")
        return InitSpec(scheme="winner", auto_scales=True)
    if args.s0 is None or args.s1 is None:
        raise CliError("--init winner: needs --s0 and --s1, or --auto-scales")
    return InitSpec(scheme="winner", s0=args.s0, s1=args.s1)


def _write_manifest(out_dir: Path, command: str, argv: list[str], seed, inputs, outputs) -> None:
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "package_version": __version__,
        "command": command,
        "argv": list(argv),
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "timestamp_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    write_json(manifest, out_dir / "manifest.json")


def _self_check(outputs: list[Path]) -> None:
    """Exit 0 only if every declared output exists and reloads cleanly."""
    for path in outputs:
        if not path.exists():
            raise OSError(f"declared output missing: {path}")
        if path.suffix == ".json":
            read_json(path)
        elif path.suffix == ".ckpt":
            load_checkpoint(path)


def _write_reconstruction(signal_like: Signal, values: np.ndarray, out_dir: Path) -> Path:
    recon = Signal(signal_like.kind, values.reshape(signal_like.samples.shape),
                   signal_like.sample_rate)
    if signal_like.kind == "audio-1d":
        path = out_dir / "reconstruction.wav"
        write_wav(recon, path)
    else:
        path = out_dir / ("reconstruction.ppm" if recon.channels == 3 else "reconstruction.pgm")
        write_pgm_ppm(recon, path)
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_fit(args, argv) -> int:
    signal = _load_input(args)
    out_dir = _resolve_out(args.out)
    config = _build_config(args, 1 if signal.kind == "audio-1d" else 2, signal.channels)
    init_spec = _build_init_spec(args)
    train_spec = TrainSpec(
        epochs=args.epochs,
        lr0=args.lr0,
        decay_fraction=args.decay_fraction,
        decay_interval=args.decay_interval,
        batch_size=args.batch_size,
        seed=args.seed,
        snapshot_interval=args.snapshot_interval,
    )
    report = fit(config, init_spec, signal, train_spec)

    report_dict = report.to_dict()
    report_dict["task"] = "fit"
    report_dict["network"] = config.to_dict()
    report_dict["train_spec"] = train_spec.to_dict()
    write_json(report_dict, out_dir / "report.json")
    write_csv(enumerate(report.losses), ["epoch", "loss"], out_dir / "loss.csv")
    psnr_rows = [(e, "" if np.isinf(v) else v) for e, v in report.snapshots]
    write_csv(psnr_rows, ["epoch", "psnr_db"], out_dir / "psnr.csv")
    save_checkpoint(out_dir / "best.ckpt", config, report.best_params)
    save_checkpoint(out_dir / "final.ckpt", config, report.final_params)
    recon_path = _write_reconstruction(
        signal, forward(config, report.best_params, coordinate_grid(signal)), out_dir
    )
    outputs = [out_dir / "report.json", out_dir / "loss.csv", out_dir / "psnr.csv",
               out_dir / "best.ckpt", out_dir / "final.ckpt", recon_path]
    _self_check(outputs)
    _write_manifest(out_dir, "fit", argv, args.seed, [args.input], outputs)
    best = report.best_psnr
    print(f"fit: best PSNR {best:.2f} dB at epoch {report.best_epoch} "
          f"({report.epochs_run} epochs, {report.wall_time_s:.1f}s)")
    return 0


def cmd_denoise(args, argv) -> int:
    noisy = _load_input(args)
    out_dir = _resolve_out(args.out)
    clean = None
    if args.clean:
        clean_path = Path(args.clean)
        clean = (normalize(read_wav(clean_path)) if clean_path.suffix.lower() == ".wav"
                 else read_pgm_ppm(clean_path))
    if args.pre_noised:
        if args.snr is not None:
            raise CliError("--snr: conflicts with --pre-noised")
    else:
        if args.snr is None:
            raise CliError("--snr: required unless --pre-noised is given")
        base = clean if clean is not None else noisy
        noisy = add_gaussian_noise_snr(base, args.snr, SeededRng(args.seed).substream("noise"))
    config = _build_config(args, 1 if noisy.kind == "audio-1d" else 2, noisy.channels)
    init_spec = _build_init_spec(args)
    train_spec = TrainSpec(
        epochs=args.epochs,
        lr0=args.lr0,
        decay_fraction=args.decay_fraction,
        decay_interval=args.decay_interval,
        seed=args.seed,
        snapshot_interval=args.snapshot_interval,
    )
    denoise_spec = DenoiseSpec(
        holdout_fraction=args.holdout,
        validation_interval=args.validation_interval,
        patience=args.patience,
    )
    report, denoised = denoise_fit(config, init_spec, noisy, denoise_spec, train_spec, clean)

    report_dict = report.to_dict()
    report_dict["task"] = "denoise"
    report_dict["network"] = config.to_dict()
    report_dict["train_spec"] = train_spec.to_dict()
    report_dict["denoise_spec"] = denoise_spec.to_dict()
    write_json(report_dict, out_dir / "report.json")
    write_csv(enumerate(report.losses), ["epoch", "loss"], out_dir / "loss.csv")
    write_csv(report.validation, ["epoch", "validation_mse"], out_dir / "validation.csv")
    save_checkpoint(out_dir / "best.ckpt", config, report.best_params)
    if denoised.kind == "audio-1d":
        denoised_path = out_dir / "denoised.wav"
        write_wav(denoised, denoised_path)
    else:
        denoised_path = out_dir / ("denoised.ppm" if denoised.channels == 3 else "denoised.pgm")
        write_pgm_ppm(denoised, denoised_path)
    outputs = [out_dir / "report.json", out_dir / "loss.csv", out_dir / "validation.csv",
               out_dir / "best.ckpt", denoised_path]
    _self_check(outputs)
    _write_manifest(out_dir, "denoise", argv, args.seed, [args.input], outputs)
    gain = report.extras.get("psnr_denoised_vs_clean")
    if gain is not None:
        print(f"denoise: {report.extras['psnr_noisy_vs_clean']:.2f} -> {gain:.2f} dB "
              f"(stopped after {report.epochs_run} epochs)")
    else:
        print(f"denoise: stopped after {report.epochs_run} epochs "
              f"(best validation MSE {report.extras['best_validation_mse']:.3e})")
    return 0


def _ntk_pair_job(payload) -> dict:
    (config_dict, init_scheme, s0, s1, seed, n, out_dir_text) = payload
    config = NetworkConfig.from_dict(config_dict)
    out_dir = Path(out_dir_text)
    grid = np.linspace(-1.0, 1.0, n)[:, np.newaxis]
    rng = SeededRng(seed)
    dummy = Signal(kind="audio-1d", samples=np.zeros(max(n, 2)) + 1.0)
    spec = (InitSpec(scheme="uniform") if init_scheme == "uniform"
            else InitSpec(scheme="winner", s0=s0, s1=s1))
    params, _ = initialize(config, spec, dummy, rng)
    analysis = empirical_ntk(config, params, grid)
    energy = ntk_spectral_energy(analysis)
    tag = f"s0_{s0:g}_s1_{s1:g}" if init_scheme == "winner" else "uniform"
    eig_path = out_dir / f"eigenvalues_{tag}.csv"
    energy_path = out_dir / f"spectral_energy_{tag}.csv"
    write_eigenvalues_csv(analysis, eig_path)
    write_spectral_energy_csv(analysis, energy_path)
    half = n // 4
    return {
        "init": init_scheme, "s0": s0, "s1": s1,
        "eigenvalues_csv": eig_path.name, "spectral_energy_csv": energy_path.name,
        "trace": float(np.trace(analysis.kernel)),
        "max_eigenvalue": float(analysis.eigenvalues[0]),
        "high_frequency_mass_fraction": float(energy[half + 1 :].sum() / energy.sum()),
    }


def cmd_analyze_ntk(args, argv) -> int:
    out_dir = _resolve_out(args.out)
    config = _build_config(args, 1, 1)
    if args.init == "uniform":
        pairs = [(0.0, 0.0)]
    else:
        s0_list = [float(v) for v in args.s0_list.split(",")] if args.s0_list else None
        s1_list = [float(v) for v in args.s1_list.split(",")] if args.s1_list else None
        if not s0_list or not s1_list:
            raise CliError("--s0-list/--s1-list: required with --init winner")
        pairs = list(itertools.product(s0_list, s1_list))
    jobs = [
        (config.to_dict(), args.init, s0, s1, args.seed, args.n, str(out_dir))
        for s0, s1 in pairs
    ]
    workers = int(os.environ.get("SIRENLAB_WORKERS", "1"))
    if workers > 1 and len(jobs) > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_ntk_pair_job, jobs))
    else:
        entries = [_ntk_pair_job(job) for job in jobs]
    index = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "network": config.to_dict(),
        "n": args.n,
        "seed": args.seed,
        "runs": entries,
    }
    write_json(index, out_dir / "index.json")
    outputs = [out_dir / "index.json"]
    for entry in entries:
        outputs += [out_dir / entry["eigenvalues_csv"], out_dir / entry["spectral_energy_csv"]]
    _self_check(outputs)
    _write_manifest(out_dir, "analyze-ntk", argv, args.seed, [], outputs)
    print(f"analyze-ntk: {len(entries)} run(s) -> {out_dir}")
    return 0


def cmd_analyze_activations(args, argv) -> int:
    out_dir = _resolve_out(args.out)
    config = _build_config(args, 1, 1)
    init_spec = _build_init_spec(args)
    grid = np.linspace(-1.0, 1.0, args.n)[:, np.newaxis]
    dummy = Signal(kind="audio-1d", samples=np.ones(max(args.n, 2)))
    params, init_info = initialize(config, init_spec, dummy, SeededRng(args.seed))
    stats = activation_stats(config, params, grid)
    write_histograms_csv(stats, out_dir / "hist_pre.csv", which="pre")
    write_histograms_csv(stats, out_dir / "hist_post.csv", which="post")
    write_activation_psd_csv(stats, out_dir / "psd_pre.csv", which="pre")
    write_activation_psd_csv(stats, out_dir / "psd_post.csv", which="post")
    summary = {
        "network": config.to_dict(),
        "init": init_info,
        "n": args.n,
        "layers": [
            {
                "layer": layer.layer, "name": layer.name,
                "pre_mean": layer.pre_mean, "pre_std": layer.pre_std,
                "post_mean": layer.post_mean, "post_std": layer.post_std,
            }
            for layer in stats.layers
        ],
    }
    write_json(summary, out_dir / "summary.json")
    outputs = [out_dir / name for name in
               ("hist_pre.csv", "hist_post.csv", "psd_pre.csv", "psd_post.csv", "summary.json")]
    _self_check(outputs)
    _write_manifest(out_dir, "analyze-activations", argv, args.seed, [], outputs)
    print(f"analyze-activations: wrote stats for {len(stats.layers)} layers -> {out_dir}")
    return 0


def cmd_scales(args, argv) -> int:
    signal = _load_input(args)
    out_dir = _resolve_out(args.out)
    report = centroid_report(signal.samples, signal.kind)
    schedule = schedule_for_kind(signal.kind)
    if args.schedule_a is not None:
        from dataclasses import replace

        schedule = replace(schedule, a=args.schedule_a)
    s0, s1 = noise_scales(report.psi, report.channels, schedule)
    record = {
        "psi": report.psi,
        "C": report.channels,
        "s0": s0,
        "s1": s1,
        "schedule": schedule.to_dict(),
        "input": args.input,
    }
    write_json(record, out_dir / "scales.json")
    _self_check([out_dir / "scales.json"])
    _write_manifest(out_dir, "scales", argv, None, [args.input], [out_dir / "scales.json"])
    print(f"scales: psi={report.psi:.4f} C={report.channels} s0={s0:.4f} s1={s1:.4f}")
    return 0


def cmd_synth(args, argv) -> int:
    out_dir = _resolve_out(args.out)
    if args.preset:
        signal = synth_preset(args.preset, args.n)
        name = args.preset
    elif args.band:
        try:
            f_lo, f_hi = (float(v) for v in args.band.split(","))
        except ValueError:
            raise CliError(f"--band: expected 'f_lo,f_hi', got {args.band!r}")
        signal = synth_bandlimited(f_lo, f_hi, args.n, SeededRng(args.seed).substream("band"))
        name = f"band_{f_lo:g}_{f_hi:g}"
    else:
        raise CliError("--preset or --band: one is required")
    signal.sample_rate = args.sample_rate
    wav_path = out_dir / f"{name}.wav"
    write_wav(signal, wav_path)
    meta = {"name": name, "n": args.n, "seed": args.seed, "sample_rate": args.sample_rate,
            "peak": float(np.max(np.abs(signal.samples)))}
    write_json(meta, out_dir / f"{name}.json")
    outputs = [wav_path, out_dir / f"{name}.json"]
    _self_check(outputs)
    _write_manifest(out_dir, "synth", argv, args.seed, [], outputs)
    print(f"synth: wrote {wav_path}")
    return 0


def cmd_rerun(args, argv) -> int:
    manifest = read_json(args.manifest)
    stored = manifest.get("argv")
    if not stored:
        raise CliError("--manifest: file has no argv record")
    return main(stored)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_arch_flags(sub) -> None:
    sub.add_argument("--arch", required=True, help="hidden layers as DxW or comma list")
    sub.add_argument("--omega0", type=float, default=30.0)
    sub.add_argument("--first-layer-scale", type=float, default=1.0, dest="first_layer_scale")
    sub.add_argument("--input-scale", type=float, default=1.0, dest="input_scale")


def _add_init_flags(sub) -> None:
    sub.add_argument("--init", choices=("uniform", "winner"), required=True)
    sub.add_argument("--s0", type=float, default=None)
    sub.add_argument("--s1", type=float, default=None)
    sub.add_argument("--auto-scales", action="store_true", dest="auto_scales")


def _add_train_flags(sub) -> None:
    sub.add_argument("--epochs", type=int, required=True)
    sub.add_argument("--lr0", type=float, default=1e-4)
    sub.add_argument("--decay-fraction", type=float, default=0.01, dest="decay_fraction")
    sub.add_argument("--decay-interval", type=int, default=20, dest="decay_interval")
    sub.add_argument("--snapshot-interval", type=int, default=100, dest="snapshot_interval")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sirenlab")
    parser.add_argument("--version", action="version", version=f"sirenlab {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("fit", help="fit a network to a signal")
    p.add_argument("--input", required=True, help="wav/pgm/ppm path or synth:eq6-low|eq6-high")
    p.add_argument("--n", type=int, default=None, help="sample count for synth: inputs")
    p.add_argument("--max-samples", type=int, default=150_000, dest="max_samples")
    _add_arch_flags(p)
    _add_init_flags(p)
    _add_train_flags(p)
    p.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = subs.add_parser("denoise", help="self-supervised denoising fit")
    p.add_argument("--input", required=True)
    p.add_argument("--clean", default=None, help="clean reference (metrics only)")
    p.add_argument("--snr", type=float, default=None, help="corrupt input at this SNR (dB)")
    p.add_argument("--pre-noised", action="store_true", dest="pre_noised")
    p.add_argument("--holdout", type=float, default=0.02)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--validation-interval", type=int, default=50, dest="validation_interval")
    p.add_argument("--max-samples", type=int, default=150_000, dest="max_samples")
    _add_arch_flags(p)
    _add_init_flags(p)
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_denoise)

    p = subs.add_parser("analyze-ntk", help="empirical NTK eigenvalues and spectral energy")
    _add_arch_flags(p)
    p.add_argument("--n", type=int, default=512, help="uniform grid size")
    p.add_argument("--init", choices=("uniform", "winner"), required=True)
    p.add_argument("--s0-list", default=None, dest="s0_list", help="comma list of s0 values")
    p.add_argument("--s1-list", default=None, dest="s1_list", help="comma list of s1 values")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze_ntk)

    p = subs.add_parser("analyze-activations", help="activation histograms and spectra")
    _add_arch_flags(p)
    _add_init_flags(p)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze_activations)

    p = subs.add_parser("scales", help="spectral centroid and noise scales for a target")
    p.add_argument("--input", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--max-samples", type=int, default=150_000, dest="max_samples")
    p.add_argument("--schedule-a", type=float, default=None, dest="schedule_a",
                   help="override the schedule exponent constant")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scales)

    p = subs.add_parser("synth", help="write a synthetic target signal")
    p.add_argument("--preset", choices=("eq6-low", "eq6-high"), default=None)
    p.add_argument("--band", default=None, help="flat band as 'f_lo,f_hi'")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sample-rate", type=int, default=44_100, dest="sample_rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("rerun", help="re-execute a run from its manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_rerun)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args, list(argv))
    except (CliError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergedRunError as exc:
        print(f"error: diverged run: {exc} (last finite epoch {exc.last_finite_epoch})",
              file=sys.stderr)
        return 4
    except (OSError, UnsupportedFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except SirenlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
