"""State augmentation pipeline for contrastive target training.

Order of application matches the pipeline figure: random convolution (when
the scheme includes it), then random tile masking, then per-pixel uniform
noise, then a clip back to the valid range. Noise is always applied; the
other two stages fire independently per state with probability 0.5.
"""

import numpy as np

from ..errors import ContractError

SCHEMES = ("noise", "noise_tiles", "noise_tiles_conv")


class AugmentationConfig:
    def __init__(
        self,
        scheme="noise_tiles",
        noise_range=(-0.2, 0.2),
        tile_sizes=(1, 2, 4, 8, 12, 16),
        prob=0.5,
        mask_fraction=0.5,
    ):
        if scheme not in SCHEMES:
            raise ContractError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
        if not 0.0 <= prob <= 1.0:
            raise ContractError(f"probability must be in [0, 1], got {prob}")
        if not 0.0 <= mask_fraction <= 1.0:
            raise ContractError(f"mask_fraction must be in [0, 1], got {mask_fraction}")
        if noise_range[0] > noise_range[1]:
            raise ContractError(f"empty noise range {noise_range}")
        self.scheme = scheme
        self.noise_range = tuple(noise_range)
        self.tile_sizes = tuple(tile_sizes)
        self.prob = prob
        self.mask_fraction = mask_fraction

    def validate_for(self, frame_hw):
        for t in self.tile_sizes:
            if t > min(frame_hw):
                raise ContractError(
                    f"tile size {t} exceeds frame size {frame_hw}"
                )


def _random_conv(state, rng):
    """Convolve every channel with one random 3x3 kernel of unit L2 norm."""
    kernel = rng.standard_normal((3, 3)).astype(state.dtype)
    kernel /= max(float(np.linalg.norm(kernel)), 1e-8)
    c, h, w = state.shape
    padded = np.pad(state, ((0, 0), (1, 1), (1, 1)))
    out = np.zeros_like(state)
    for i in range(3):
        for j in range(3):
            out += kernel[i, j] * padded[:, i : i + h, j : j + w]
    return out


def _tile_mask(state, tile, rng, mask_fraction):
    """Zero a random fraction of tile x tile blocks (rounded up)."""
    c, h, w = state.shape
    th, tw = -(-h // tile), -(-w // tile)
    n_tiles = th * tw
    n_mask = int(np.ceil(mask_fraction * n_tiles))
    chosen = rng.choice(n_tiles, size=n_mask, replace=False)
    mask = np.ones((th, tw), dtype=state.dtype)
    mask.reshape(-1)[chosen] = 0.0
    mask = np.kron(mask, np.ones((tile, tile), dtype=state.dtype))[:h, :w]
    return state * mask


def augment(state, config, rng):
    """Augmented copy of a single (C, H, W) state in [0, 1]."""
    if state.ndim != 3:
        raise ContractError(f"state must be (C, H, W), got {state.shape}")
    config.validate_for(state.shape[1:])
    out = state.astype(np.float32, copy=True)
    if config.scheme == "noise_tiles_conv" and rng.random() < config.prob:
        out = _random_conv(out, rng)
    if config.scheme in ("noise_tiles", "noise_tiles_conv") and rng.random() < config.prob:
        tile = int(config.tile_sizes[rng.integers(len(config.tile_sizes))])
        out = _tile_mask(out, tile, rng, config.mask_fraction)
    lo, hi = config.noise_range
    if hi > lo:
        out = out + rng.uniform(lo, hi, size=out.shape).astype(np.float32)
    elif lo != 0.0:
        out = out + np.float32(lo)
    return np.clip(out, 0.0, 1.0)


def augment_batch(states, config, rng):
    """Augment each state independently; one RNG stream, sequential order."""
    return np.stack([augment(s, config, rng) for s in states])
