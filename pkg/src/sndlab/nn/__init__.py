from .init import orthogonal
from .layers import Conv2D, Dense, Elu, Relu
from .network import Network, Tape
from .optim import Adam, clip_global_norm
from .gradcheck import finite_diff_grad, max_relative_error
from .serialize import (
    blob_from_arrays,
    arrays_from_blob,
    network_manifest,
    network_from_manifest,
)

__all__ = [
    "orthogonal",
    "Conv2D",
    "Dense",
    "Elu",
    "Relu",
    "Network",
    "Tape",
    "Adam",
    "clip_global_norm",
    "finite_diff_grad",
    "max_relative_error",
    "blob_from_arrays",
    "arrays_from_blob",
    "network_manifest",
    "network_from_manifest",
]
