"""Dense and convolution layers with hand-written reverse-mode gradients.

Layers are stateless shape/compute descriptions. Parameters live in the
owning network and are passed to forward/backward as dicts; forward returns
(output, cache) and backward consumes that cache, so the same layer object
can serve several parameter sets (finite-difference probes, float64 shadow
nets).
"""

import numpy as np

from ..errors import ContractError


class Dense:
    """Affine layer y = x @ w.T + b with w of shape (out, in).

    Inputs with more than two dims are flattened per sample, so a Dense
    placed after a convolution consumes the (C, H, W) feature map directly.
    """

    def __init__(self, in_features, out_features):
        if in_features < 1 or out_features < 1:
            raise ContractError(
                f"Dense needs positive sizes, got ({in_features}, {out_features})"
            )
        self.in_features = in_features
        self.out_features = out_features

    def param_shapes(self):
        return {"w": (self.out_features, self.in_features), "b": (self.out_features,)}

    def init_specs(self):
        # weight is drawn orthogonally on its natural 2D shape, bias is zero
        return {"w": (self.out_features, self.in_features)}

    def out_shape(self, in_shape):
        flat = int(np.prod(in_shape))
        if flat != self.in_features:
            raise ContractError(
                f"Dense expects {self.in_features} input features, got shape {in_shape}"
            )
        return (self.out_features,)

    def forward(self, x, params):
        xf = x.reshape(x.shape[0], -1)
        y = xf @ params["w"].T + params["b"]
        return y, (x.shape, xf)

    def backward(self, dy, cache, params):
        x_shape, xf = cache
        dw = dy.T @ xf
        db = dy.sum(axis=0)
        dx = (dy @ params["w"]).reshape(x_shape)
        return dx, {"w": dw, "b": db}


class Conv2D:
    """2D convolution over (N, C, H, W) batches, zero padding, square kernel."""

    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0):
        if min(in_channels, out_channels, kernel_size, stride) < 1 or padding < 0:
            raise ContractError(
                "Conv2D needs positive channels/kernel/stride and padding >= 0"
            )
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding

    def param_shapes(self):
        k = self.kernel_size
        return {
            "w": (self.out_channels, self.in_channels, k, k),
            "b": (self.out_channels,),
        }

    def init_specs(self):
        # kernels are flattened to (out, in*kh*kw) for the orthogonal draw
        k = self.kernel_size
        return {"w": (self.out_channels, self.in_channels * k * k)}

    def out_shape(self, in_shape):
        c, h, w = in_shape
        if c != self.in_channels:
            raise ContractError(
                f"Conv2D expects {self.in_channels} input channels, got shape {in_shape}"
            )
        k, s, p = self.kernel_size, self.stride, self.padding
        if h + 2 * p < k or w + 2 * p < k:
            raise ContractError(f"Conv2D kernel {k} exceeds padded input {in_shape}")
        return (self.out_channels, (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1)

    def _im2col(self, xp, h_out, w_out):
        n, c, _, _ = xp.shape
        k, s = self.kernel_size, self.stride
        sn, sc, sh, sw = xp.strides
        view = np.lib.stride_tricks.as_strided(
            xp,
            shape=(n, c, k, k, h_out, w_out),
            strides=(sn, sc, sh, sw, sh * s, sw * s),
            writeable=False,
        )
        return view.reshape(n, c * k * k, h_out * w_out)

    def forward(self, x, params):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ContractError(
                f"Conv2D expects (N, {self.in_channels}, H, W), got {x.shape}"
            )
        p = self.padding
        _, h_out, w_out = self.out_shape(x.shape[1:])
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        cols = self._im2col(xp, h_out, w_out)
        w2d = params["w"].reshape(self.out_channels, -1)
        y = np.matmul(w2d, cols) + params["b"][:, None]
        y = y.reshape(x.shape[0], self.out_channels, h_out, w_out)
        return y, (x.shape, xp.shape, cols)

    def backward(self, dy, cache, params):
        x_shape, xp_shape, cols = cache
        n = x_shape[0]
        k, s, p = self.kernel_size, self.stride, self.padding
        h_out, w_out = dy.shape[2], dy.shape[3]
        dy2 = dy.reshape(n, self.out_channels, h_out * w_out)

        db = dy2.sum(axis=(0, 2))
        dw = np.matmul(dy2, cols.transpose(0, 2, 1)).sum(axis=0)
        dw = dw.reshape(params["w"].shape)

        w2d = params["w"].reshape(self.out_channels, -1)
        dcols = np.matmul(w2d.T, dy2)
        dcols = dcols.reshape(n, self.in_channels, k, k, h_out, w_out)
        dxp = np.zeros(xp_shape, dtype=dy.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i : i + s * h_out : s, j : j + s * w_out : s] += dcols[
                    :, :, i, j
                ]
        dx = dxp[:, :, p : p + x_shape[2], p : p + x_shape[3]] if p else dxp
        return dx, {"w": dw, "b": db}


class Elu:
    """ELU activation, alpha fixed at 1.0."""

    alpha = 1.0

    def param_shapes(self):
        return {}

    def init_specs(self):
        return {}

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x, params):
        neg = self.alpha * np.expm1(np.minimum(x, 0))
        y = np.where(x > 0, x, neg)
        # slope on the negative branch is alpha*exp(x) = neg + alpha
        return y, np.where(x > 0, 1.0, neg + self.alpha).astype(x.dtype)

    def backward(self, dy, cache, params):
        return dy * cache, {}


class Relu:
    """ReLU activation."""

    def param_shapes(self):
        return {}

    def init_specs(self):
        return {}

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x, params):
        return np.maximum(x, 0), x > 0

    def backward(self, dy, cache, params):
        return dy * cache, {}
