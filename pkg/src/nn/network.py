# Path: /src/nn/network.py
# Sequential network container: shape inference at build time, forward/backward
# passes with a finiteness guard, and parameter/buffer access for the optimizer
# and checkpoints.
import logging
from typing import Dict, List, Sequence

import numpy as np

from src.nn.layers import Layer, LayerSpec, ShapeMismatchError, build_layer

logger = logging.getLogger(__name__)

MODES = ("train", "infer")


class BackwardBeforeForwardError(RuntimeError):
    def __init__(self, name):
        self.message = f"Network '{name}': backward called without a recorded forward pass"
        super().__init__(self.message)


class NonFiniteError(FloatingPointError):
    def __init__(self, name, index, phase):
        self.index = index
        self.message = f"Network '{name}': non-finite values after layer {index} ({phase})"
        super().__init__(self.message)


class Network:
    def __init__(self, specs: Sequence[LayerSpec], input_shape, seed=0, dtype=np.float64, name="net"):
        self.name = name
        self.specs: List[LayerSpec] = list(specs)
        self.input_shape = tuple(input_shape)
        self.dtype = np.dtype(dtype)
        self.mode = "train"
        rng = np.random.default_rng(seed)
        self.layers: List[Layer] = []
        shape = self.input_shape
        for index, spec in enumerate(self.specs):
            try:
                layer = build_layer(spec, shape, rng, self.dtype)
            except ValueError as e:
                raise ShapeMismatchError(index, shape, str(e))
            self.layers.append(layer)
            shape = layer.output_shape
        self.output_shape = shape
        self._recorded = False

    def set_mode(self, mode):
        if mode not in MODES:
            raise ValueError(f"Unknown mode '{mode}', expected one of {MODES}")
        self.mode = mode
        return self

    def train(self):
        return self.set_mode("train")

    def infer(self):
        return self.set_mode("infer")

    def forward(self, batch) -> np.ndarray:
        """Run a batch through every layer; ``batch`` is an array or a list of samples."""
        x = np.stack(batch) if isinstance(batch, (list, tuple)) else np.asarray(batch)
        if x.shape[0] == 0:
            raise ValueError(f"Network '{self.name}': empty batch")
        x = x.astype(self.dtype, copy=False)
        training = self.mode == "train"
        for index, layer in enumerate(self.layers):
            if x.shape[1:] != layer.input_shape:
                raise ShapeMismatchError(index, layer.input_shape, x.shape[1:])
            x = layer.forward(x, training)
            if not np.all(np.isfinite(x)):
                raise NonFiniteError(self.name, index, "forward")
        self._recorded = True
        return x

    __call__ = forward

    def backward(self, grad_output) -> np.ndarray:
        """Propagate ``grad_output`` back; parameter gradients land in each layer's ``grads``.

        Gradients accumulate across calls until :meth:`zero_grad`.
        """
        if not self._recorded:
            raise BackwardBeforeForwardError(self.name)
        grad = np.asarray(grad_output, dtype=self.dtype)
        for index in range(len(self.layers) - 1, -1, -1):
            grad = self.layers[index].backward(grad)
            if not np.all(np.isfinite(grad)):
                raise NonFiniteError(self.name, index, "backward")
        return grad

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def parameters(self) -> Dict[str, np.ndarray]:
        """Parameter arrays keyed ``<layer index>.<name>``, in declaration order."""
        return {f"{i}.{name}": value for i, layer in enumerate(self.layers) for name, value in layer.params.items()}

    def gradients(self) -> Dict[str, np.ndarray]:
        grads = {}
        for i, layer in enumerate(self.layers):
            for name, value in layer.params.items():
                grads[f"{i}.{name}"] = layer.grads.get(name, np.zeros_like(value))
        return grads

    def buffers(self) -> Dict[str, np.ndarray]:
        return {f"{i}.{name}": value for i, layer in enumerate(self.layers) for name, value in layer.buffers.items()}

    def load_state(self, parameters: Dict[str, np.ndarray], buffers: Dict[str, np.ndarray]):
        for key, value in list(parameters.items()) + list(buffers.items()):
            index, name = key.split(".", 1)
            layer = self.layers[int(index)]
            target = layer.params if name in layer.params else layer.buffers
            if name not in target or target[name].shape != value.shape:
                raise ValueError(f"Network '{self.name}': no slot of shape {np.shape(value)} for '{key}'")
            target[name] = np.array(value, dtype=self.dtype)

    def parameter_count(self) -> int:
        return sum(value.size for value in self.parameters().values())

    def summary(self) -> str:
        lines = [f"{self.name}: input {self.input_shape}"]
        for i, layer in enumerate(self.layers):
            lines.append(f"  {i:2d} {layer.spec.kind:9s} -> {layer.output_shape}")
        return "\n".join(lines)
