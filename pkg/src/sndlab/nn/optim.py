"""Adam optimizer and global-norm gradient clipping."""

import numpy as np

from ..errors import ContractError, NumericError


class Adam:
    """Bias-corrected Adam over a named parameter dict.

    Holds references to the parameter arrays and updates them in place.
    Moment accumulators are exposed (``m``, ``v``, ``t``) so checkpoints can
    capture and restore the full optimizer state.
    """

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        if lr <= 0:
            raise ContractError(f"Adam needs lr > 0, got {lr}")
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads):
        """Apply one update. Rejects the whole step if any grad is bad."""
        for name in self.params:
            if name not in grads:
                raise ContractError(f"missing gradient for {name}")
            if not np.isfinite(grads[name]).all():
                raise NumericError(f"non-finite gradient for {name}")
            if grads[name].shape != self.params[name].shape:
                raise ContractError(
                    f"gradient shape {grads[name].shape} != parameter "
                    f"shape {self.params[name].shape} for {name}"
                )
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, p in self.params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= (self.lr / c1) * m / (np.sqrt(v / c2) + self.eps)


def clip_global_norm(grads, max_norm):
    """Scale ``grads`` in place so their joint L2 norm is at most ``max_norm``.

    Returns the pre-clip norm.
    """
    total = 0.0
    for g in grads.values():
        total += float(np.dot(g.reshape(-1), g.reshape(-1)))
    norm = np.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm
