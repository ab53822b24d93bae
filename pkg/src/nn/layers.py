# Path: /src/nn/layers.py
# Layer kinds of the engine. Every layer keeps its parameters, their gradients
# and the cache of its last forward pass; tensors are (batch, channels, height, width).
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.special import expit

from src.nn.utils import conv_output_size, gather_windows, pair, scatter_windows

LAYER_KINDS = ("conv", "deconv", "batchnorm", "lrelu", "tanh", "sigmoid", "gap", "linear")
PARAMETRIC_KINDS = ("conv", "deconv", "linear")

INIT_STD = 0.02
DEFAULT_SLOPE = 0.2
BN_MOMENTUM = 0.9
BN_EPSILON = 1e-5


class ShapeMismatchError(ValueError):
    def __init__(self, index, expected, got):
        self.index = index
        self.message = f"Layer {index}: expected input shape {expected}, got {got}"
        super().__init__(self.message)


@dataclass(frozen=True)
class LayerSpec:
    """Declarative description of one layer.

    ``kernel`` is (width, height) and ``channels`` is (in, out), following the
    usual "kernel width x kernel height x in x out" notation. ``stride`` and
    ``padding`` are (vertical, horizontal). ``output_size`` fixes the
    (height, width) a deconv layer crops to.
    """
    kind: str
    kernel: Optional[Tuple[int, int]] = None
    channels: Optional[Tuple[int, int]] = None
    stride: Tuple[int, int] = (1, 1)
    padding: Tuple[int, int] = (0, 0)
    slope: float = DEFAULT_SLOPE
    output_size: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"Unknown layer kind '{self.kind}', expected one of {LAYER_KINDS}")
        object.__setattr__(self, "stride", pair(self.stride))
        object.__setattr__(self, "padding", pair(self.padding))
        needs_shape = self.kind in PARAMETRIC_KINDS
        if needs_shape and self.channels is None:
            raise ValueError(f"A {self.kind} layer needs channels")
        if self.kind in ("conv", "deconv") and self.kernel is None:
            raise ValueError(f"A {self.kind} layer needs a kernel")
        if not needs_shape and (self.kernel is not None or self.channels is not None):
            raise ValueError(f"A {self.kind} layer takes no kernel or channels")
        if min(self.stride) < 1:
            raise ValueError(f"Stride must be >= 1, got {self.stride}")
        if min(self.padding) < 0:
            raise ValueError(f"Padding must be >= 0, got {self.padding}")

    def to_dict(self):
        return {
            "kind": self.kind,
            "kernel": list(self.kernel) if self.kernel else None,
            "channels": list(self.channels) if self.channels else None,
            "stride": list(self.stride),
            "padding": list(self.padding),
            "slope": self.slope,
            "output_size": list(self.output_size) if self.output_size else None,
        }

    @staticmethod
    def from_dict(data):
        return LayerSpec(
            kind=data["kind"],
            kernel=tuple(data["kernel"]) if data.get("kernel") else None,
            channels=tuple(data["channels"]) if data.get("channels") else None,
            stride=tuple(data["stride"]),
            padding=tuple(data["padding"]),
            slope=data.get("slope", DEFAULT_SLOPE),
            output_size=tuple(data["output_size"]) if data.get("output_size") else None,
        )


class Layer:
    """Base layer: stateless unless a subclass adds parameters or buffers."""

    def __init__(self, spec: LayerSpec, input_shape, rng, dtype):
        self.spec = spec
        self.input_shape = tuple(input_shape)
        self.dtype = dtype
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.buffers: Dict[str, np.ndarray] = {}
        self._cache = None

    @property
    def output_shape(self):
        return self.input_shape

    def _init_weight(self, rng, shape):
        return rng.normal(0.0, INIT_STD, size=shape).astype(self.dtype)

    def zero_grad(self):
        self.grads = {name: np.zeros_like(value) for name, value in self.params.items()}

    def forward(self, x, train):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError

    def _accumulate(self, name, grad):
        if name in self.grads:
            self.grads[name] = self.grads[name] + grad
        else:
            self.grads[name] = grad


class Conv2D(Layer):
    """Cross-correlation with stride and zero padding; weight is (out, in, kh, kw)."""

    def __init__(self, spec, input_shape, rng, dtype):
        super().__init__(spec, input_shape, rng, dtype)
        kw, kh = spec.kernel
        c_in, c_out = spec.channels
        self.kernel = (kh, kw)
        if input_shape[0] != c_in:
            raise ValueError(f"Conv expects {c_in} input channels, got shape {input_shape}")
        self.params["weight"] = self._init_weight(rng, (c_out, c_in, kh, kw))
        self.params["bias"] = np.zeros(c_out, dtype=dtype)
        if min(self.output_shape[1:]) < 1:
            raise ValueError(f"Conv kernel {spec.kernel} does not fit input {input_shape}")

    @property
    def output_shape(self):
        _, height, width = self.input_shape
        (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.spec.stride, self.spec.padding
        return (self.spec.channels[1], conv_output_size(height, kh, sh, ph), conv_output_size(width, kw, sw, pw))

    def forward(self, x, train):
        ph, pw = self.spec.padding
        padded = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        windows = gather_windows(padded, self.kernel, self.spec.stride)
        y = np.tensordot(windows, self.params["weight"], axes=([1, 4, 5], [1, 2, 3]))
        self._cache = (x.shape, padded.shape, windows)
        return y.transpose(0, 3, 1, 2) + self.params["bias"][:, None, None]

    def backward(self, dy):
        x_shape, padded_shape, windows = self._cache
        weight = self.params["weight"]
        self._accumulate("weight", np.tensordot(dy, windows, axes=([0, 2, 3], [0, 2, 3])))
        self._accumulate("bias", dy.sum(axis=(0, 2, 3)))
        cols = np.tensordot(dy, weight, axes=([1], [0]))
        dpadded = scatter_windows(cols, self.spec.stride, padded_shape[2:])
        ph, pw = self.spec.padding
        return dpadded[:, :, ph:ph + x_shape[2], pw:pw + x_shape[3]]


class Deconv2D(Layer):
    """Transposed convolution, the adjoint of :class:`Conv2D`; weight is (in, out, kh, kw).

    The full transposed output is cropped by ``padding`` at the top/left and to
    ``output_size`` (or the standard transposed-convolution size).
    """

    def __init__(self, spec, input_shape, rng, dtype):
        super().__init__(spec, input_shape, rng, dtype)
        kw, kh = spec.kernel
        c_in, c_out = spec.channels
        self.kernel = (kh, kw)
        if input_shape[0] != c_in:
            raise ValueError(f"Deconv expects {c_in} input channels, got shape {input_shape}")
        self.params["weight"] = self._init_weight(rng, (c_in, c_out, kh, kw))
        self.params["bias"] = np.zeros(c_out, dtype=dtype)
        if min(self.output_shape[1:]) < 1:
            raise ValueError(f"Deconv output size {self.output_shape} is empty")

    @property
    def output_shape(self):
        _, height, width = self.input_shape
        if self.spec.output_size is not None:
            out_h, out_w = self.spec.output_size
        else:
            (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.spec.stride, self.spec.padding
            out_h = (height - 1) * sh + kh - 2 * ph
            out_w = (width - 1) * sw + kw - 2 * pw
        return self.spec.channels[1], out_h, out_w

    def _buffer_size(self):
        _, height, width = self.input_shape
        _, out_h, out_w = self.output_shape
        (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.spec.stride, self.spec.padding
        return max((height - 1) * sh + kh, ph + out_h), max((width - 1) * sw + kw, pw + out_w)

    def forward(self, x, train):
        _, out_h, out_w = self.output_shape
        ph, pw = self.spec.padding
        cols = np.tensordot(x, self.params["weight"], axes=([1], [0]))
        full = scatter_windows(cols, self.spec.stride, self._buffer_size())
        self._cache = x
        return full[:, :, ph:ph + out_h, pw:pw + out_w] + self.params["bias"][:, None, None]

    def backward(self, dy):
        x = self._cache
        ph, pw = self.spec.padding
        _, out_h, out_w = self.output_shape
        full = np.zeros(dy.shape[:2] + self._buffer_size(), dtype=dy.dtype)
        full[:, :, ph:ph + out_h, pw:pw + out_w] = dy
        windows = gather_windows(full, self.kernel, self.spec.stride, count=x.shape[2:])
        self._accumulate("weight", np.tensordot(x, windows, axes=([0, 2, 3], [0, 2, 3])))
        self._accumulate("bias", dy.sum(axis=(0, 2, 3)))
        dx = np.tensordot(windows, self.params["weight"], axes=([1, 4, 5], [1, 2, 3]))
        return dx.transpose(0, 3, 1, 2)


class BatchNorm(Layer):
    """Per-channel normalization; batch statistics in train mode, running ones in infer mode."""

    def __init__(self, spec, input_shape, rng, dtype):
        super().__init__(spec, input_shape, rng, dtype)
        channels = input_shape[0]
        self.params["scale"] = np.ones(channels, dtype=dtype)
        self.params["shift"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_mean"] = np.zeros(channels, dtype=dtype)
        self.buffers["running_var"] = np.ones(channels, dtype=dtype)

    def _axes(self, x):
        return (0,) if x.ndim == 2 else (0, 2, 3)

    def _expand(self, v, x):
        return v if x.ndim == 2 else v[:, None, None]

    def forward(self, x, train):
        axes = self._axes(x)
        if train:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.buffers["running_mean"] = BN_MOMENTUM * self.buffers["running_mean"] + (1 - BN_MOMENTUM) * mean
            self.buffers["running_var"] = BN_MOMENTUM * self.buffers["running_var"] + (1 - BN_MOMENTUM) * var
        else:
            mean, var = self.buffers["running_mean"], self.buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + BN_EPSILON)
        normalized = (x - self._expand(mean, x)) * self._expand(inv_std, x)
        self._cache = (normalized, inv_std, train)
        return normalized * self._expand(self.params["scale"], x) + self._expand(self.params["shift"], x)

    def backward(self, dy):
        normalized, inv_std, train = self._cache
        axes = self._axes(dy)
        self._accumulate("scale", (dy * normalized).sum(axis=axes))
        self._accumulate("shift", dy.sum(axis=axes))
        dnorm = dy * self._expand(self.params["scale"], dy)
        if not train:
            return dnorm * self._expand(inv_std, dy)
        count = dy.size // dy.shape[1]
        sum_d = self._expand(dnorm.sum(axis=axes), dy)
        sum_dn = self._expand((dnorm * normalized).sum(axis=axes), dy)
        return self._expand(inv_std, dy) / count * (count * dnorm - sum_d - normalized * sum_dn)


class LeakyReLU(Layer):
    def forward(self, x, train):
        self._cache = x > 0
        return np.where(self._cache, x, self.spec.slope * x)

    def backward(self, dy):
        return np.where(self._cache, dy, self.spec.slope * dy)


class Tanh(Layer):
    def forward(self, x, train):
        self._cache = np.tanh(x)
        return self._cache

    def backward(self, dy):
        return dy * (1.0 - self._cache ** 2)


class Sigmoid(Layer):
    def forward(self, x, train):
        self._cache = expit(x)
        return self._cache

    def backward(self, dy):
        return dy * self._cache * (1.0 - self._cache)


class GlobalAvgPool(Layer):
    """(B, C, H, W) -> (B, C): mean over the spatial axes."""

    @property
    def output_shape(self):
        return (self.input_shape[0],)

    def forward(self, x, train):
        self._cache = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, dy):
        shape = self._cache
        return np.broadcast_to(dy[:, :, None, None] / (shape[2] * shape[3]), shape).copy()


class Linear(Layer):
    """Affine map on (B, in) inputs; weight is (out, in)."""

    def __init__(self, spec, input_shape, rng, dtype):
        super().__init__(spec, input_shape, rng, dtype)
        c_in, c_out = spec.channels
        if tuple(input_shape) != (c_in,):
            raise ValueError(f"Linear expects input shape ({c_in},), got {input_shape}")
        self.params["weight"] = self._init_weight(rng, (c_out, c_in))
        self.params["bias"] = np.zeros(c_out, dtype=dtype)

    @property
    def output_shape(self):
        return (self.spec.channels[1],)

    def forward(self, x, train):
        self._cache = x
        return x @ self.params["weight"].T + self.params["bias"]

    def backward(self, dy):
        x = self._cache
        self._accumulate("weight", dy.T @ x)
        self._accumulate("bias", dy.sum(axis=0))
        return dy @ self.params["weight"]


LAYER_CLASSES = {
    "conv": Conv2D,
    "deconv": Deconv2D,
    "batchnorm": BatchNorm,
    "lrelu": LeakyReLU,
    "tanh": Tanh,
    "sigmoid": Sigmoid,
    "gap": GlobalAvgPool,
    "linear": Linear,
}


def build_layer(spec: LayerSpec, input_shape, rng, dtype=np.float64) -> Layer:
    return LAYER_CLASSES[spec.kind](spec, input_shape, rng, dtype)
