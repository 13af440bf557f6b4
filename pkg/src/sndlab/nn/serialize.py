"""Network serialization: JSON manifest plus a flat little-endian f32 blob."""

import numpy as np

from ..errors import CheckpointError, ContractError
from .layers import Conv2D, Dense, Elu, Relu


def _layer_spec(layer):
    if isinstance(layer, Conv2D):
        return {
            "kind": "conv2d",
            "in_channels": layer.in_channels,
            "out_channels": layer.out_channels,
            "kernel_size": layer.kernel_size,
            "stride": layer.stride,
            "padding": layer.padding,
        }
    if isinstance(layer, Dense):
        return {
            "kind": "dense",
            "in_features": layer.in_features,
            "out_features": layer.out_features,
        }
    if isinstance(layer, Elu):
        return {"kind": "elu"}
    if isinstance(layer, Relu):
        return {"kind": "relu"}
    raise ContractError(f"cannot serialize layer of type {type(layer).__name__}")


def _layer_from_spec(spec):
    kind = spec.get("kind")
    if kind == "conv2d":
        return Conv2D(
            spec["in_channels"],
            spec["out_channels"],
            spec["kernel_size"],
            stride=spec["stride"],
            padding=spec["padding"],
        )
    if kind == "dense":
        return Dense(spec["in_features"], spec["out_features"])
    if kind == "elu":
        return Elu()
    if kind == "relu":
        return Relu()
    raise ContractError(f"unknown layer kind {kind!r}")


def network_manifest(net, seed=None):
    """JSON-serializable description of a net: layers, shapes, param order."""
    return {
        "in_shape": list(net.in_shape),
        "gain": net.gain,
        "local_layer": net.local_layer,
        "seed": seed,
        "layers": [_layer_spec(layer) for layer in net.layers],
        "params": [
            {"name": name, "shape": list(arr.shape)}
            for name, arr in net.param_items()
        ],
    }


def network_from_manifest(manifest, blob):
    """Rebuild a Network from its manifest and parameter blob."""
    from .network import Network

    layers = [_layer_from_spec(s) for s in manifest["layers"]]
    shapes = [tuple(p["shape"]) for p in manifest["params"]]
    arrays = arrays_from_blob(blob, shapes)
    params = {
        p["name"]: arr for p, arr in zip(manifest["params"], arrays)
    }
    return Network(
        layers,
        tuple(manifest["in_shape"]),
        gain=manifest["gain"],
        local_layer=manifest["local_layer"],
        params=params,
    )


def blob_from_arrays(arrays):
    """Concatenate arrays as little-endian float32 bytes, in order."""
    return b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in arrays)


def arrays_from_blob(blob, shapes):
    """Split a float32 blob back into arrays of the given shapes.

    Raises CheckpointError when the blob length does not match, which is how
    truncated or oversized files surface.
    """
    total = sum(int(np.prod(s)) for s in shapes)
    if len(blob) != 4 * total:
        raise CheckpointError(
            f"parameter blob holds {len(blob)} bytes, expected {4 * total}"
        )
    flat = np.frombuffer(blob, dtype="<f4")
    arrays = []
    offset = 0
    for shape in shapes:
        size = int(np.prod(shape))
        arrays.append(flat[offset : offset + size].reshape(shape).copy())
        offset += size
    return arrays
