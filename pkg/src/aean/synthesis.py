# Path: /src/aean/synthesis.py
# Full-image reconstruction with a trained autoencoder: spectral vectors one by
# one (d=1), or disjoint m x m tiles per band (d=2) / per cube (d=3).
import logging

import numpy as np

from src.aean.model import AeanModel
from src.aean.trainer import UntrainedModelError
from src.hsi.cube import HsiCube

logger = logging.getLogger(__name__)

INFER_BATCH = 256


def _reconstruct(model: AeanModel, samples: np.ndarray, batch_size: int) -> np.ndarray:
    autoencoder = model.autoencoder.infer()
    samples = samples.astype(autoencoder.dtype)
    out = np.empty_like(samples)
    for start in range(0, samples.shape[0], batch_size):
        out[start:start + batch_size] = autoencoder.forward(samples[start:start + batch_size])
    return out


def tile_cube(bsq: np.ndarray, block_size: int):
    """Reflect-pad a (bands, H, W) array to multiples of ``block_size`` and cut it into tiles.

    Returns tiles shaped ``(rows, cols, bands, m, m)``.
    """
    bands, height, width = bsq.shape
    pad_h = -height % block_size
    pad_w = -width % block_size
    mode = "reflect" if min(height, width) > 1 else "edge"
    padded = np.pad(bsq, ((0, 0), (0, pad_h), (0, pad_w)), mode=mode)
    rows, cols = padded.shape[1] // block_size, padded.shape[2] // block_size
    tiles = padded.reshape(bands, rows, block_size, cols, block_size).transpose(1, 3, 0, 2, 4)
    return tiles


def untile_cube(tiles: np.ndarray, height: int, width: int) -> np.ndarray:
    rows, cols, bands, block_size, _ = tiles.shape
    padded = tiles.transpose(2, 0, 3, 1, 4).reshape(bands, rows * block_size, cols * block_size)
    return padded[:, :height, :width]


def synthesize_hsi(model: AeanModel, cube: HsiCube, batch_size: int = INFER_BATCH) -> HsiCube:
    """Reconstruct every pixel of ``cube`` with the model's autoencoder (BN in infer mode)."""
    if not model.trained:
        raise UntrainedModelError(model)
    if model.dim in (1, 3) and model.bands != cube.bands:
        raise ValueError(f"{model} expects {model.bands} bands, {cube} has {cube.bands}")

    if model.dim == 1:
        samples = cube.pixels.reshape(-1, 1, 1, cube.bands)
        rebuilt = _reconstruct(model, samples, batch_size).reshape(cube.height, cube.width, cube.bands)
        return HsiCube(rebuilt)

    m = model.block_size
    tiles = tile_cube(cube.band_sequential(), m)
    rows, cols, bands = tiles.shape[:3]
    if model.dim == 2:
        samples = tiles.reshape(rows * cols * bands, 1, m, m)
    else:
        samples = tiles.reshape(rows * cols, bands, m, m)
    rebuilt = _reconstruct(model, samples, batch_size).reshape(tiles.shape)
    logger.info("Synthesized %s from %d tiles of %dx%d", cube, rows * cols, m, m)
    return HsiCube(untile_cube(rebuilt, cube.height, cube.width).transpose(1, 2, 0))
