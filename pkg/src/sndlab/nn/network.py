"""Feed-forward network container with cached-activation reverse mode.

A Network owns an ordered layer list and a flat parameter dict keyed
"{layer_index}.{param}". The functional entry point is :meth:`Network.run`,
which returns a :class:`Tape` holding every intermediate activation; losses
that touch two networks (distillation, contrastive pairs) keep one tape per
forward pass and drive each backward independently. ``forward``/``backward``
are thin stateful wrappers for the common single-pass case.
"""

import numpy as np

from ..errors import ContractError, NumericError, StateError
from .init import orthogonal


class Tape:
    """Cached activations from one forward pass, ready for backward."""

    def __init__(self, net, x, params):
        self.net = net
        self.params = params
        x = np.asarray(x, dtype=net.dtype)
        if x.shape[1:] != net.in_shape:
            raise ContractError(
                f"expected input shape (N, {', '.join(map(str, net.in_shape))}), got {x.shape}"
            )
        if not np.isfinite(x).all():
            raise NumericError("non-finite values in network input")
        self.caches = []
        self.locals = None
        for i, layer in enumerate(net.layers):
            x, cache = layer.forward(x, net._layer_params(params, i))
            self.caches.append(cache)
            if not np.isfinite(x).all():
                raise NumericError(f"non-finite activation after {net.layer_name(i)}")
            if i == net.local_layer:
                self.locals = x
        self.output = x

    def backward(self, dout, dlocals=None):
        """Return (input_grad, param_grads) for upstream gradient ``dout``.

        ``dlocals``, when given, is injected at the designated local-feature
        layer in addition to whatever flows down from above; losses defined
        purely on the local features pass zeros for ``dout``.
        """
        net = self.net
        dout = np.asarray(dout, dtype=net.dtype)
        if dout.shape != self.output.shape:
            raise ContractError(
                f"output grad shape {dout.shape} != output shape {self.output.shape}"
            )
        if dlocals is not None:
            if net.local_layer is None:
                raise ContractError("local grad given but no local-feature layer set")
            dlocals = np.asarray(dlocals, dtype=net.dtype)
            if dlocals.shape != self.locals.shape:
                raise ContractError(
                    f"local grad shape {dlocals.shape} != locals shape {self.locals.shape}"
                )
        grads = {}
        d = dout
        for i in range(len(net.layers) - 1, -1, -1):
            if i == net.local_layer and dlocals is not None:
                d = d + dlocals
            d, layer_grads = net.layers[i].backward(
                d, self.caches[i], net._layer_params(self.params, i)
            )
            for pname, g in layer_grads.items():
                grads[f"{i}.{pname}"] = g
        return d, grads


class Network:
    """Ordered feed-forward layers plus their parameters.

    Args:
        layers: layer objects (Conv2D, Dense, Elu, Relu) applied in order.
        in_shape: per-sample input shape, e.g. (channels, height, width).
        gain: orthogonal init gain for every weight; biases start at zero.
        rng: numpy Generator consumed for init (omit when params are given).
        local_layer: index of the layer whose output is the local feature
            map used by patch-level contrastive losses; that output must be
            (N, C, H, W).
        params: pre-built parameter dict, bypassing initialization.
    """

    def __init__(
        self,
        layers,
        in_shape,
        gain=np.sqrt(2.0),
        rng=None,
        dtype=np.float32,
        local_layer=None,
        params=None,
    ):
        self.layers = list(layers)
        self.in_shape = tuple(in_shape)
        self.gain = float(gain)
        self.dtype = np.dtype(dtype)
        self.local_layer = local_layer
        self._tape = None

        shape = self.in_shape
        self.layer_shapes = []
        for layer in self.layers:
            shape = layer.out_shape(shape)
            self.layer_shapes.append(shape)
        self.out_shape = shape
        if local_layer is not None:
            if not 0 <= local_layer < len(self.layers):
                raise ContractError(f"local_layer {local_layer} out of range")
            if len(self.layer_shapes[local_layer]) != 3:
                raise ContractError(
                    f"local-feature layer must output (C, H, W) per sample, "
                    f"got {self.layer_shapes[local_layer]}"
                )

        if params is not None:
            self.params = dict(params)
            self._check_param_shapes()
        else:
            if rng is None:
                raise ContractError("Network needs an rng unless params are given")
            self.params = {}
            for i, layer in enumerate(self.layers):
                specs = layer.init_specs()
                for pname, pshape in layer.param_shapes().items():
                    if pname in specs:
                        w = orthogonal(specs[pname], self.gain, rng, self.dtype)
                        self.params[f"{i}.{pname}"] = w.reshape(pshape)
                    else:
                        self.params[f"{i}.{pname}"] = np.zeros(pshape, self.dtype)

    def _check_param_shapes(self):
        for i, layer in enumerate(self.layers):
            for pname, pshape in layer.param_shapes().items():
                key = f"{i}.{pname}"
                if key not in self.params:
                    raise ContractError(f"missing parameter {key}")
                if self.params[key].shape != pshape:
                    raise ContractError(
                        f"parameter {key} has shape {self.params[key].shape}, "
                        f"expected {pshape}"
                    )

    def _layer_params(self, params, i):
        prefix = f"{i}."
        return {k[len(prefix) :]: v for k, v in params.items() if k.startswith(prefix)}

    def layer_name(self, i):
        return f"layer {i} ({type(self.layers[i]).__name__})"

    def param_items(self):
        """Parameters as (name, array) pairs in canonical (manifest) order."""
        return list(self.params.items())

    @property
    def n_params(self):
        return sum(int(v.size) for v in self.params.values())

    def run(self, x, params=None):
        """Functional forward pass; returns a Tape."""
        return Tape(self, x, self.params if params is None else params)

    def forward(self, x):
        """Stateful forward; caches the tape for a later :meth:`backward`."""
        self._tape = self.run(x)
        return self._tape.output

    def backward(self, dout, dlocals=None):
        if self._tape is None:
            raise StateError("backward called before forward")
        return self._tape.backward(dout, dlocals)

    @property
    def locals(self):
        if self._tape is None:
            raise StateError("no forward pass cached")
        return self._tape.locals

    def to_dtype(self, dtype):
        """Copy of this net with parameters cast (layers are shared)."""
        params = {k: v.astype(dtype) for k, v in self.params.items()}
        return Network(
            self.layers,
            self.in_shape,
            gain=self.gain,
            dtype=dtype,
            local_layer=self.local_layer,
            params=params,
        )
