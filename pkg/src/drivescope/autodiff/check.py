"""Central-difference gradient verification harness."""
from __future__ import annotations

import numpy as np

from .tensor import Tensor, backward, grad_of


def check_gradients(fn, inputs, eps=1e-5, n_samples=200, rng=None):
    """Compare reverse-mode gradients of `fn` against central differences.

    fn: callable taking a list of Tensors, returning a scalar Tensor.
    inputs: list of float64 arrays (the leaves to differentiate).
    Samples >= n_samples coordinates across the inputs (all of them if
    fewer exist) and returns the worst relative error.

    The relative denominator is floored at 1e-3 of the largest sampled
    gradient magnitude (and an absolute 1e-5): the absolute precision of a
    central difference is ~eps_mach*|f|/(2*eps), so coordinates whose true
    gradient sits near zero cannot be resolved to any relative precision,
    while errors of that size on them are still far below the gradient
    scale that matters.
    """
    if not (eps > 0):
        raise ValueError("eps must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)
    leaves = [Tensor(np.asarray(x, dtype=np.float64), requires_grad=True) for x in inputs]
    out = fn(leaves)
    if out.data.size != 1:
        raise ValueError("fn must return a scalar")
    grads = backward(out)
    analytic = [grad_of(grads, leaf) for leaf in leaves]

    coords = []
    for i, x in enumerate(inputs):
        for flat in range(np.asarray(x).size):
            coords.append((i, flat))
    if len(coords) > n_samples:
        pick = rng.choice(len(coords), size=n_samples, replace=False)
        coords = [coords[int(k)] for k in pick]

    scale = max(abs(analytic[i].flat[flat]) for i, flat in coords)
    floor = max(1e-3 * scale, 1e-5)
    worst = 0.0
    arrays = [np.array(x, dtype=np.float64) for x in inputs]
    for i, flat in coords:
        orig = arrays[i].flat[flat]
        arrays[i].flat[flat] = orig + eps
        f_plus = fn([Tensor(a) for a in arrays]).item()
        arrays[i].flat[flat] = orig - eps
        f_minus = fn([Tensor(a) for a in arrays]).item()
        arrays[i].flat[flat] = orig
        fd = (f_plus - f_minus) / (2.0 * eps)
        an = analytic[i].flat[flat]
        err = abs(an - fd) / max(abs(an), abs(fd), floor)
        worst = max(worst, err)
    return worst
