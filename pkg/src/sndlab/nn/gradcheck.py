"""Finite-difference gradient oracle for verifying hand-written backward passes."""

import numpy as np

from ..errors import ContractError


def finite_diff_grad(loss_fn, net, eps=1e-4):
    """Central-difference gradient of ``loss_fn`` w.r.t. every net parameter.

    Args:
        loss_fn: maps a parameter dict (same keys as ``net.params``) to a
            scalar loss; must be deterministic.
        net: the network whose parameters define the evaluation point.
        eps: perturbation size, restricted to [1e-5, 1e-2].

    Returns:
        dict of float64 gradients, one entry per parameter.

    This walks every scalar entry, so keep it to small nets (hundreds of
    parameters). Run it on float64 copies of a net when tolerances are tight;
    float32 arithmetic drowns central differences in rounding noise.
    """
    if not 1e-5 <= eps <= 1e-2:
        raise ContractError(f"eps must be in [1e-5, 1e-2], got {eps}")
    params = {k: v.copy() for k, v in net.params.items()}
    grads = {}
    for name, p in params.items():
        g = np.zeros(p.shape, dtype=np.float64)
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = float(loss_fn(params))
            flat[i] = orig - eps
            down = float(loss_fn(params))
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * eps)
        grads[name] = g
    return grads


def max_relative_error(analytic, numeric, rtol=1e-3, atol=1e-5):
    """Worst relative disagreement between two gradient dicts.

    Per element the error is |a − n| / max(|a|, |n|, atol/rtol); flooring the
    denominator at atol/rtol means asserting the result <= rtol is the same
    as the elementwise check |a − n| <= max(rtol * max(|a|, |n|), atol).
    """
    worst = 0.0
    for name, n in numeric.items():
        a = np.asarray(analytic[name], dtype=np.float64)
        n = np.asarray(n, dtype=np.float64)
        scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), atol / rtol)
        worst = max(worst, float(np.max(np.abs(a - n) / scale)))
    return worst
