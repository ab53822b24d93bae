# Path: /src/detect/combine.py
# Convex combination of min-max normalized score maps.
from typing import Sequence

import numpy as np

from src.hsi.cube import Raster

DEFAULT_COMBINATION = (0.01, 0.5, 0.49)
WEIGHT_SUM_TOLERANCE = 1e-9


def min_max_normalize(raster: Raster) -> Raster:
    """Map a raster to [0, 1]; a constant raster maps to zeros."""
    values = raster.data
    low, high = float(values.min()), float(values.max())
    if high == low:
        return Raster(np.zeros_like(values))
    return Raster((values - low) / (high - low))


def combine_scores(maps: Sequence[Raster], weights: Sequence[float] = DEFAULT_COMBINATION) -> Raster:
    if len(maps) == 0:
        raise ValueError("Nothing to combine")
    if len(maps) != len(weights):
        raise ValueError(f"{len(maps)} maps but {len(weights)} weights")
    weights = np.asarray(weights, dtype=np.float64)
    if np.any(weights < 0):
        raise ValueError(f"Combination weights must be nonnegative, got {weights.tolist()}")
    if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOLERANCE:
        raise ValueError(f"Combination weights must sum to 1, got {weights.sum()!r}")
    shape = maps[0].shape
    for raster in maps[1:]:
        if raster.shape != shape:
            raise ValueError(f"Cannot combine rasters of shapes {shape} and {raster.shape}")
    combined = np.zeros(shape)
    for raster, weight in zip(maps, weights):
        combined += weight * min_max_normalize(raster).data
    return Raster(combined)
