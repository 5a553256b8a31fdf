"""Shared test oracles: finite-difference gradients and their comparison rule."""

import numpy as np

from sirenlab import flatten_parameters, forward, unflatten_parameters


def finite_difference_grads(config, params, inputs, target, step=1e-5):
    """Central finite differences of the MSE loss through the flat vector."""
    flat = flatten_parameters(params)
    grads = np.zeros_like(flat)

    def loss_at(vec):
        p = unflatten_parameters(vec, config)
        out = forward(config, p, inputs)
        return np.mean((out - target) ** 2)

    for i in range(flat.size):
        plus = flat.copy()
        plus[i] += step
        minus = flat.copy()
        minus[i] -= step
        grads[i] = (loss_at(plus) - loss_at(minus)) / (2 * step)
    return grads


def max_relative_gradient_error(analytic, numeric):
    """Componentwise relative deviation, floored at 1e-3 of the largest
    gradient magnitude so near-null components are compared absolutely
    (central differences carry ~1e-9 absolute noise of their own)."""
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    floor = 1e-3 * np.max(np.abs(numeric)) + 1e-12
    denom = np.maximum(np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))
