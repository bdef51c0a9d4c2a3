import numpy as np
import pytest

import softcheck as sc


def finite_difference_grads(params, id_batch, ood_batch, spec, loss_cfg, h=1e-5):
    """Central-difference gradient of the composite loss, one entry at a time."""

    def loss_at():
        value, _, _ = sc.backward(params, id_batch, ood_batch, spec, loss_cfg)
        return value

    fd = sc.Gradients(
        weights=[np.zeros_like(w) for w in params.weights],
        biases=[np.zeros_like(b) for b in params.biases],
    )
    for arrs, outs in ((params.weights, fd.weights), (params.biases, fd.biases)):
        for arr, out in zip(arrs, outs):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                i = it.multi_index
                old = arr[i]
                arr[i] = old + h
                plus = loss_at()
                arr[i] = old - h
                minus = loss_at()
                arr[i] = old
                out[i] = (plus - minus) / (2.0 * h)
    return fd


def max_relative_gradient_error(analytic, fd, floor=1e-6):
    worst = 0.0
    for a_arrs, f_arrs in ((analytic.weights, fd.weights), (analytic.biases, fd.biases)):
        for a, f in zip(a_arrs, f_arrs):
            denom = np.maximum(floor, np.maximum(np.abs(a), np.abs(f)))
            worst = max(worst, float(np.max(np.abs(a - f) / denom)))
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
