"""Weight initialization."""

import numpy as np

from ..errors import ContractError


def orthogonal(shape, gain, rng, dtype=np.float32):
    """Orthogonal matrix of the given (rows, cols) shape, scaled by ``gain``.

    When rows <= cols the rows are mutually orthogonal with L2 norm ``gain``
    (so Q @ Q.T == gain**2 * I); otherwise the columns are. Drawn from a QR
    decomposition of a standard normal matrix with the usual sign fix so the
    result is a deterministic function of the RNG stream.
    """
    rows, cols = shape
    if rows < 1 or cols < 1:
        raise ContractError(f"orthogonal init needs positive dims, got {shape}")
    if gain <= 0:
        raise ContractError(f"orthogonal init needs gain > 0, got {gain}")
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return (gain * q).astype(dtype)
