# Path: /src/detect/local.py
# Dual-window (local) RX: statistics from the annulus between an inner guard
# window and an outer window around each test pixel, optionally weighted.
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.detect.rx import RIDGE_SCALE, weighted_moments
from src.hsi.cube import HsiCube, Raster
from src.hsi.utils import mahalanobis_form, regularized_cholesky, scale_aware_ridge
from src.rem.error_map import WeightMap

logger = logging.getLogger(__name__)

DEFAULT_INNER = 1
DEFAULT_OUTER = 9


class WindowError(ValueError):
    def __init__(self, reason):
        self.message = f"Invalid local window: {reason}"
        super().__init__(self.message)


@dataclass(frozen=True)
class WindowSpec:
    inner: int = DEFAULT_INNER
    outer: int = DEFAULT_OUTER

    def __post_init__(self):
        if self.inner % 2 == 0 or self.outer % 2 == 0:
            raise WindowError(f"sizes must be odd, got inner={self.inner} outer={self.outer}")
        if not 1 <= self.inner < self.outer:
            raise WindowError(f"need 1 <= inner < outer, got inner={self.inner} outer={self.outer}")


def _span(center: int, half: int, limit: int):
    return max(center - half, 0), min(center + half + 1, limit)


def local_scores(cube: HsiCube, weights: Optional[WeightMap] = None, window: WindowSpec = WindowSpec(),
                 ridge: Optional[float] = None) -> Raster:
    """Local (weighted) RX score of every pixel.

    Windows are clipped at the image borders. Weights, when given, are
    renormalized to sum to one over each annulus. ``ridge`` defaults to
    1e-3 * trace(local C) / L per pixel.
    """
    data = cube.data
    height, width, bands = data.shape
    if weights is not None:
        if not weights.weights.matches(cube):
            raise ValueError(f"Weight map {weights.weights.shape} does not match {cube}")
        weight_data = weights.weights.data
    else:
        weight_data = np.ones((height, width))
    outer_half, inner_half = window.outer // 2, window.inner // 2

    scores = np.empty((height, width))
    for row in range(height):
        r0, r1 = _span(row, outer_half, height)
        i0, i1 = _span(row, inner_half, height)
        for col in range(width):
            c0, c1 = _span(col, outer_half, width)
            j0, j1 = _span(col, inner_half, width)
            keep = np.ones((r1 - r0, c1 - c0), dtype=bool)
            keep[i0 - r0:i1 - r0, j0 - c0:j1 - c0] = False
            pixels = data[r0:r1, c0:c1][keep]
            local_weights = weight_data[r0:r1, c0:c1][keep]
            if pixels.shape[0] < 2:
                raise WindowError(f"annulus around pixel ({row}, {col}) holds {pixels.shape[0]} pixels")
            total = local_weights.sum()
            if total <= 0:
                raise WindowError(f"annulus around pixel ({row}, {col}) carries zero weight")
            mean, cov = weighted_moments(pixels, local_weights / total)
            beta = scale_aware_ridge(cov, RIDGE_SCALE) if ridge is None else ridge
            scores[row, col] = mahalanobis_form(data[row, col], mean, regularized_cholesky(cov, beta))[0]
    logger.debug("Local scores for %s with window %s", cube, window)
    return Raster(scores)
