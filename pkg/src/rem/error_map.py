# Path: /src/rem/error_map.py
# Reconstruction error map, its grayscale closing, and the pixel weights derived from it.
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from src.hsi.cube import HsiCube, Raster

logger = logging.getLogger(__name__)

DEFAULT_SE_SIZE = 3
WEIGHT_FLOOR_SCALE = 1e-12


class StructuringElementError(ValueError):
    def __init__(self, size):
        self.message = f"Structuring element size must be odd and >= 1, got {size}"
        super().__init__(self.message)


@dataclass(frozen=True, eq=False)
class Rem:
    raw: Raster
    smoothed: Optional[Raster] = None
    se_size: int = 1
    se_shape: str = "square"

    @property
    def final(self) -> Raster:
        return self.smoothed if self.smoothed is not None else self.raw


@dataclass(frozen=True, eq=False)
class WeightMap:
    weights: Raster
    floor: float

    @property
    def values(self) -> np.ndarray:
        return self.weights.values


def compute_rem(cube: HsiCube, reconstruction: HsiCube) -> Rem:
    """Per-pixel squared Euclidean distance between original and reconstructed spectra."""
    if cube.shape != reconstruction.shape:
        raise ValueError(f"Cannot compare {cube} with reconstruction {reconstruction}")
    errors = np.sum((cube.data - reconstruction.data) ** 2, axis=2)
    return Rem(raw=Raster(errors))


def morphological_close(raster: Raster, se_size: int = DEFAULT_SE_SIZE) -> Raster:
    """Grayscale closing (dilation then erosion) with a flat se_size x se_size square.

    Borders replicate the edge pixels.
    """
    if se_size < 1 or se_size % 2 == 0:
        raise StructuringElementError(se_size)
    if se_size == 1:
        return raster
    footprint = (se_size, se_size)
    dilated = ndimage.grey_dilation(raster.data, size=footprint, mode="nearest")
    return Raster(ndimage.grey_erosion(dilated, size=footprint, mode="nearest"))


def smooth_rem(rem: Rem, se_size: int = DEFAULT_SE_SIZE) -> Rem:
    return Rem(raw=rem.raw, smoothed=morphological_close(rem.raw, se_size), se_size=se_size)


def weights_from_scores(scores: Raster, floor: Optional[float] = None) -> WeightMap:
    """Inverse scores normalized to sum to one; scores are floored at ``floor`` first.

    ``floor`` defaults to 1e-12 * max(scores) (1e-12 for an all-zero map).
    """
    values = scores.data
    if floor is None:
        peak = float(values.max())
        floor = WEIGHT_FLOOR_SCALE * peak if peak > 0 else WEIGHT_FLOOR_SCALE
    if floor <= 0:
        raise ValueError(f"Weight floor must be > 0, got {floor}")
    inverse = 1.0 / np.maximum(values, floor)
    return WeightMap(weights=Raster(inverse / inverse.sum()), floor=float(floor))


def weights_from_rem(smoothed: Raster, floor: Optional[float] = None) -> WeightMap:
    return weights_from_scores(smoothed, floor)
