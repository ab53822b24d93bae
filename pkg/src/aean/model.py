# Path: /src/aean/model.py
# Autoencoder and discriminator architectures for the spectral (d=1), spatial
# (d=2) and joint spectral-spatial (d=3) models.
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from src.nn.layers import LayerSpec
from src.nn.network import Network
from src.nn.utils import conv_output_size

logger = logging.getLogger(__name__)

DIMENSIONS = (1, 2, 3)
DEFAULT_LAMBDA = 10.0
MIN_BLOCK_SIZE = 8

# (kernel size, output channels) of the three encoder/discriminator stages
STAGES = ((9, 64), (5, 128), (3, 256))


@dataclass(eq=False)
class AeanModel:
    dim: int
    autoencoder: Network
    discriminator: Network
    lam: float
    block_size: Optional[int]
    bands: int
    trained: bool = False

    @property
    def sample_shape(self) -> Tuple[int, int, int]:
        return self.autoencoder.input_shape

    def networks(self):
        return {"autoencoder": self.autoencoder, "discriminator": self.discriminator}

    def infer(self):
        self.autoencoder.infer()
        self.discriminator.infer()
        return self

    def train(self):
        self.autoencoder.train()
        self.discriminator.train()
        return self

    def __str__(self):
        size = f"m={self.block_size}" if self.dim != 1 else "spectral"
        return f"{self.dim}D-AEAN (L={self.bands}, {size}, lambda={self.lam:g})"


def sample_shape(dim: int, bands: int, block_size: Optional[int]) -> Tuple[int, int, int]:
    if dim == 1:
        return 1, 1, bands
    if dim == 2:
        return 1, block_size, block_size
    return bands, block_size, block_size


def _geometry(dim: int, kernel: int):
    """kernel (width, height), stride and padding of one stage."""
    if dim == 1:
        return (kernel, 1), (1, 2), (0, (kernel - 1) // 2)
    return (kernel, kernel), (2, 2), ((kernel - 1) // 2, (kernel - 1) // 2)


def _encoder_specs(dim: int, in_channels: int) -> List[LayerSpec]:
    specs = []
    channels = in_channels
    for kernel, out_channels in STAGES:
        size, stride, padding = _geometry(dim, kernel)
        specs += [
            LayerSpec("conv", kernel=size, channels=(channels, out_channels), stride=stride, padding=padding),
            LayerSpec("batchnorm"),
            LayerSpec("lrelu"),
        ]
        channels = out_channels
    return specs


def _stage_sizes(dim: int, input_hw: Tuple[int, int]) -> List[Tuple[int, int]]:
    """Spatial sizes before each encoder stage and after the last one."""
    sizes = [tuple(input_hw)]
    for kernel, _ in STAGES:
        (kw, kh), (sh, sw), (ph, pw) = _geometry(dim, kernel)
        height, width = sizes[-1]
        sizes.append((conv_output_size(height, kh, sh, ph), conv_output_size(width, kw, sw, pw)))
    return sizes


def _decoder_specs(dim: int, out_channels: int, sizes) -> List[LayerSpec]:
    specs = []
    stages = list(reversed(STAGES))
    for index, (kernel, channels) in enumerate(stages):
        size, stride, padding = _geometry(dim, kernel)
        last = index == len(stages) - 1
        target_channels = out_channels if last else stages[index + 1][1]
        # crop each stage back to the size recorded before the matching encoder stage
        target_size = sizes[len(stages) - 1 - index]
        specs.append(LayerSpec("deconv", kernel=size, channels=(channels, target_channels), stride=stride,
                               padding=padding, output_size=target_size))
        if last:
            specs.append(LayerSpec("tanh"))
        else:
            specs += [LayerSpec("batchnorm"), LayerSpec("lrelu")]
    return specs


def build_aean(dim: int, bands: int, block_size: Optional[int] = None, lam: float = DEFAULT_LAMBDA,
               seed: int = 0, dtype=np.float32) -> AeanModel:
    """Build the autoencoder A_d and discriminator D_d.

    Three stride-2 conv stages (9, 5, 3 kernels; 64/128/256 channels) with BN and
    LReLU form the encoder; the decoder mirrors them with transposed convolutions
    cropped back to the encoder sizes and ends in tanh. The discriminator reuses
    the encoder stages, then global average pooling, a 256 -> 1 linear layer and a
    sigmoid. d=1 uses kernels of height 1 over an L-wide spectral row.
    """
    if dim not in DIMENSIONS:
        raise ValueError(f"Model dimension must be one of {DIMENSIONS}, got {dim}")
    if bands < 1:
        raise ValueError(f"Band count must be >= 1, got {bands}")
    if dim != 1:
        if block_size is None or block_size < MIN_BLOCK_SIZE:
            raise ValueError(f"Block size {block_size} is too small for three stride-2 stages "
                             f"(need >= {MIN_BLOCK_SIZE})")
    else:
        block_size = None
    if lam <= 0:
        raise ValueError(f"Lambda must be > 0, got {lam}")

    shape = sample_shape(dim, bands, block_size)
    channels = shape[0]
    sizes = _stage_sizes(dim, shape[1:])
    autoencoder_specs = _encoder_specs(dim, channels) + _decoder_specs(dim, channels, sizes)
    discriminator_specs = _encoder_specs(dim, channels) + [
        LayerSpec("gap"),
        LayerSpec("linear", channels=(STAGES[-1][1], 1)),
        LayerSpec("sigmoid"),
    ]
    autoencoder = Network(autoencoder_specs, shape, seed=seed, dtype=dtype, name=f"A{dim}")
    discriminator = Network(discriminator_specs, shape, seed=seed + 1, dtype=dtype, name=f"D{dim}")
    if autoencoder.output_shape != shape:
        raise ValueError(f"Autoencoder output {autoencoder.output_shape} does not match input {shape}")
    model = AeanModel(dim=dim, autoencoder=autoencoder, discriminator=discriminator, lam=lam,
                      block_size=block_size, bands=bands)
    logger.debug("Built %s\n%s\n%s", model, autoencoder.summary(), discriminator.summary())
    return model
