"""Sinusoidal multilayer perceptron: configuration, initialization (uniform
baseline and Gaussian weight perturbation), forward/backward passes, and
per-input parameter Jacobians.

Layer convention: a network with hidden widths (w1, ..., w_{L-1}) has L
layers.  Hidden layer l computes sin(omega_l * (W h + b)) where omega_l is
omega0 * first_layer_omega_scale for l = 1 and omega0 otherwise; layer L is a
linear readout.  The omega factor multiplies the whole affine pre-activation,
so the standard weight law U(-sqrt(6/fan_in)/omega0, +sqrt(6/fan_in)/omega0)
yields unit pre-activation standard deviation, and the *scaled* value
omega_l * (W h + b) is what activation traces record.

Parameter flattening order (used by Jacobians and checkpoints): layer 1
weights row-major, layer 1 biases, layer 2 weights, layer 2 biases, ...
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, ParameterError, UnsupportedFormatError
from .numerics import SeededRng

_CHECKPOINT_MAGIC = b"SNET"
_CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int
    hidden_widths: tuple[int, ...]
    output_dim: int = 1
    omega0: float = 30.0
    first_layer_omega_scale: float = 1.0
    input_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1 or self.output_dim < 1 or not self.hidden_widths:
            raise ParameterError("NetworkConfig: all dimensions must be >= 1")
        if any(w < 1 for w in self.hidden_widths):
            raise ParameterError("NetworkConfig: hidden widths must be >= 1")
        if not self.omega0 > 0:
            raise ParameterError(f"NetworkConfig: omega0 must be > 0, got {self.omega0}")
        if self.first_layer_omega_scale < 1:
            raise ParameterError("NetworkConfig: first_layer_omega_scale must be >= 1")
        if self.input_scale < 1:
            raise ParameterError("NetworkConfig: input_scale must be >= 1")

    @property
    def n_layers(self) -> int:
        return len(self.hidden_widths) + 1

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        """(fan_in, fan_out) per layer, in layer order."""
        sizes = [self.input_dim, *self.hidden_widths, self.output_dim]
        return list(zip(sizes[:-1], sizes[1:]))

    def omega_eff(self, layer: int) -> float:
        """Activation periodicity applied at hidden layer `layer` (1-based)."""
        if layer == 1:
            return self.omega0 * self.first_layer_omega_scale
        return self.omega0

    @property
    def n_params(self) -> int:
        return sum(fi * fo + fo for fi, fo in self.layer_dims)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden_widths": list(self.hidden_widths),
            "output_dim": self.output_dim,
            "omega0": self.omega0,
            "first_layer_omega_scale": self.first_layer_omega_scale,
            "input_scale": self.input_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        return cls(
            input_dim=d["input_dim"],
            hidden_widths=tuple(d["hidden_widths"]),
            output_dim=d["output_dim"],
            omega0=d["omega0"],
            first_layer_omega_scale=d["first_layer_omega_scale"],
            input_scale=d["input_scale"],
        )


@dataclass
class Parameters:
    """Per-layer weight matrices (fan_out x fan_in) and bias vectors (fan_out)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "Parameters":
        return Parameters([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def validate(self, config: NetworkConfig) -> None:
        dims = config.layer_dims
        if len(self.weights) != len(dims) or len(self.biases) != len(dims):
            raise ContractViolationError(
                f"Parameters: expected {len(dims)} layers, got {len(self.weights)}"
            )
        for l, (fan_in, fan_out) in enumerate(dims):
            if self.weights[l].shape != (fan_out, fan_in) or self.biases[l].shape != (fan_out,):
                raise ContractViolationError(
                    f"Parameters: layer {l + 1} shape mismatch "
                    f"(want W {(fan_out, fan_in)}, b {(fan_out,)}; "
                    f"got W {self.weights[l].shape}, b {self.biases[l].shape})"
                )


@dataclass
class ActivationTrace:
    """Scaled pre-activations omega*(Wh+b) and post-activations per hidden layer."""

    pre: list[np.ndarray] = field(default_factory=list)
    post: list[np.ndarray] = field(default_factory=list)


def init_siren_uniform(config: NetworkConfig, rng: SeededRng) -> Parameters:
    """Baseline uniform initialization.

    Layer 1 weights ~ U(-1/d, 1/d); layers l >= 2 (hidden and readout)
    ~ U(-sqrt(6/fan_in)/omega0, +sqrt(6/fan_in)/omega0); all biases
    ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)).  One RNG substream per layer.
    """
    weights, biases = [], []
    for l, (fan_in, fan_out) in enumerate(config.layer_dims, start=1):
        stream = rng.substream(l)
        if l == 1:
            bound = 1.0 / fan_in
        else:
            bound = np.sqrt(6.0 / fan_in) / config.omega0
        weights.append(stream.generator.uniform(-bound, bound, (fan_out, fan_in)))
        b_bound = 1.0 / np.sqrt(fan_in)
        biases.append(stream.generator.uniform(-b_bound, b_bound, fan_out))
    return Parameters(weights, biases)


def apply_winner_perturbation(
    params: Parameters, config: NetworkConfig, s0: float, s1: float, rng: SeededRng
) -> Parameters:
    """Add Gaussian noise to the first two weight matrices of a freshly
    initialized network: W1 += N(0, (s0/omega0)^2), W2 += N(0, (s1/omega0)^2)
    entrywise.  Deeper layers and all biases are untouched.
    """
    if s0 < 0 or s1 < 0:
        raise ParameterError(f"apply_winner_perturbation: scales must be >= 0, got ({s0}, {s1})")
    out = params.copy()
    for layer, scale in ((1, s0), (2, s1)):
        if scale > 0 and layer <= len(out.weights):
            w = out.weights[layer - 1]
            noise = rng.substream(layer).generator.normal(0.0, scale / config.omega0, w.shape)
            out.weights[layer - 1] = w + noise
    return out


def _forward_full(config: NetworkConfig, params: Parameters, inputs: np.ndarray):
    """Forward pass keeping per-layer values for backprop.

    Returns (outputs, h, pre) where h[0] is the scaled input, h[l] the hidden
    post-activations, and pre[l-1] the scaled pre-activation of hidden layer l.
    """
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != config.input_dim:
        raise ContractViolationError(
            f"forward: inputs must be (n, {config.input_dim}), got {inputs.shape}"
        )
    params.validate(config)
    h = [config.input_scale * inputs]
    pre = []
    n_hidden = config.n_layers - 1
    for l in range(1, n_hidden + 1):
        z = h[-1] @ params.weights[l - 1].T + params.biases[l - 1]
        scaled = config.omega_eff(l) * z
        pre.append(scaled)
        h.append(np.sin(scaled))
    outputs = h[-1] @ params.weights[-1].T + params.biases[-1]
    return outputs, h, pre


def forward(
    config: NetworkConfig,
    params: Parameters,
    inputs: np.ndarray,
    return_trace: bool = False,
):
    """Network outputs for an (n x d) coordinate matrix; optionally also the
    per-hidden-layer activation trace."""
    outputs, h, pre = _forward_full(config, params, inputs)
    if return_trace:
        return outputs, ActivationTrace(pre=pre, post=h[1:])
    return outputs


def backward(
    config: NetworkConfig,
    params: Parameters,
    inputs: np.ndarray,
    output_grad: np.ndarray,
    _cache=None,
) -> Parameters:
    """Parameter gradient of the scalar loss whose output gradient is given.

    `output_grad` is dLoss/doutputs with the same shape as forward's outputs.
    Returns gradients in a Parameters container (same shapes).
    """
    if _cache is None:
        outputs, h, pre = _forward_full(config, params, inputs)
    else:
        outputs, h, pre = _cache
    output_grad = np.asarray(output_grad, dtype=float)
    if output_grad.shape != outputs.shape:
        raise ContractViolationError(
            f"backward: output_grad shape {output_grad.shape} != outputs {outputs.shape}"
        )
    n_layers = config.n_layers
    grad_w = [None] * n_layers
    grad_b = [None] * n_layers
    delta = output_grad
    grad_w[-1] = delta.T @ h[-1]
    grad_b[-1] = delta.sum(axis=0)
    upstream = delta @ params.weights[-1]
    for l in range(n_layers - 1, 0, -1):
        delta = upstream * (config.omega_eff(l) * np.cos(pre[l - 1]))
        grad_w[l - 1] = delta.T @ h[l - 1]
        grad_b[l - 1] = delta.sum(axis=0)
        if l > 1:
            upstream = delta @ params.weights[l - 1]
    return Parameters(grad_w, grad_b)


def flatten_parameters(params: Parameters) -> np.ndarray:
    """Concatenate all parameters in the documented flattening order."""
    parts = []
    for w, b in zip(params.weights, params.biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts)


def unflatten_parameters(flat: np.ndarray, config: NetworkConfig) -> Parameters:
    flat = np.asarray(flat, dtype=float)
    if flat.size != config.n_params:
        raise ContractViolationError(
            f"unflatten_parameters: expected {config.n_params} values, got {flat.size}"
        )
    weights, biases, ofs = [], [], 0
    for fan_in, fan_out in config.layer_dims:
        weights.append(flat[ofs : ofs + fan_out * fan_in].reshape(fan_out, fan_in).copy())
        ofs += fan_out * fan_in
        biases.append(flat[ofs : ofs + fan_out].copy())
        ofs += fan_out
    return Parameters(weights, biases)


def jacobian_matrix(config: NetworkConfig, params: Parameters, inputs: np.ndarray) -> np.ndarray:
    """Per-input parameter gradients, stacked: row i is grad_theta f(x_i).

    Requires a scalar network output.  Memory is capped at the n x P result
    plus one layer-sized block; blocks are assembled in flattening order.
    """
    if config.output_dim != 1:
        raise ContractViolationError(
            f"jacobian_matrix: scalar output required, got output_dim={config.output_dim}"
        )
    outputs, h, pre = _forward_full(config, params, inputs)
    n = outputs.shape[0]
    n_layers = config.n_layers
    blocks_w = [None] * n_layers
    blocks_b = [None] * n_layers
    # Readout layer: df/dW_L per sample is the last hidden activation row.
    blocks_w[-1] = h[-1]
    blocks_b[-1] = np.ones((n, 1))
    upstream = np.broadcast_to(params.weights[-1][0], h[-1].shape)
    for l in range(n_layers - 1, 0, -1):
        delta = upstream * (config.omega_eff(l) * np.cos(pre[l - 1]))
        blocks_w[l - 1] = np.einsum("no,ni->noi", delta, h[l - 1]).reshape(n, -1)
        blocks_b[l - 1] = delta
        if l > 1:
            upstream = delta @ params.weights[l - 1]
    jac = np.empty((n, config.n_params))
    ofs = 0
    for bw, bb in zip(blocks_w, blocks_b):
        jac[:, ofs : ofs + bw.shape[1]] = bw
        ofs += bw.shape[1]
        jac[:, ofs : ofs + bb.shape[1]] = bb
        ofs += bb.shape[1]
    return jac


def jacobian_row(config: NetworkConfig, params: Parameters, x: np.ndarray) -> np.ndarray:
    """Flat gradient of the scalar network output at a single input."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return jacobian_matrix(config, params, x)[0]


def save_checkpoint(path, config: NetworkConfig, params: Parameters) -> None:
    """Versioned binary checkpoint.

    Layout: magic b"SNET" | u32 LE version | u32 LE config-JSON length |
    config JSON (UTF-8) | per layer in order: W float64 LE row-major, then b
    float64 LE.  Matches the parameter flattening order.
    """
    params.validate(config)
    blob = json.dumps(config.to_dict(), sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", _CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for w, b in zip(params.weights, params.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[NetworkConfig, Parameters]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CHECKPOINT_MAGIC:
            raise UnsupportedFormatError(f"checkpoint {path}: bad magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _CHECKPOINT_VERSION:
            raise UnsupportedFormatError(f"checkpoint {path}: unsupported version {version}")
        (blob_len,) = struct.unpack("<I", fh.read(4))
        config = NetworkConfig.from_dict(json.loads(fh.read(blob_len).decode("utf-8")))
        weights, biases = [], []
        for fan_in, fan_out in config.layer_dims:
            w = np.frombuffer(fh.read(8 * fan_out * fan_in), dtype="<f8").reshape(fan_out, fan_in)
            b = np.frombuffer(fh.read(8 * fan_out), dtype="<f8")
            weights.append(w.astype(float))
            biases.append(b.astype(float))
    return config, Parameters(weights, biases)
