# Path: /src/detect/rx.py
# Global RX and weighted RX: Mahalanobis scores against (weighted) background statistics.
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.hsi.cube import HsiCube, Raster
from src.hsi.utils import CovarianceError, mahalanobis_form, regularized_cholesky, scale_aware_ridge
from src.rem.error_map import WeightMap

logger = logging.getLogger(__name__)

RIDGE_SCALE = 1e-3
WEIGHT_SUM_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class WeightedStats:
    mean: np.ndarray
    cov: np.ndarray
    ridge: float

    def factor(self):
        return regularized_cholesky(self.cov, self.ridge)


def weighted_moments(pixels: np.ndarray, weights: np.ndarray):
    """Weighted mean and covariance of the rows of ``pixels`` (weights summing to one)."""
    mean = weights @ pixels
    centered = pixels - mean
    cov = (centered * weights[:, None]).T @ centered
    return mean, (cov + cov.T) / 2


def _check_weights(values: np.ndarray):
    if np.any(values < 0):
        raise ValueError("Pixel weights must be nonnegative")
    total = float(values.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOLERANCE:
        raise ValueError(f"Pixel weights must sum to 1, got {total!r}")


def uniform_weights(cube: HsiCube) -> WeightMap:
    return WeightMap(weights=Raster(np.full((cube.height, cube.width), 1.0 / cube.n_pixels)), floor=0.0)


def weighted_stats(cube: HsiCube, weights: Optional[WeightMap] = None, ridge: Optional[float] = None) -> WeightedStats:
    """m = sum w_i f_i and C = sum w_i (f_i - m)(f_i - m)^T.

    ``weights`` defaults to uniform (plain RX). ``ridge`` defaults to
    1e-3 * trace(C) / L and is added to the diagonal before factorization.
    """
    if cube.n_pixels < 2:
        raise CovarianceError(f"need at least 2 pixels, got {cube.n_pixels}")
    if weights is None:
        weights = uniform_weights(cube)
    if not weights.weights.matches(cube):
        raise ValueError(f"Weight map {weights.weights.shape} does not match {cube}")
    values = weights.values
    _check_weights(values)
    mean, cov = weighted_moments(cube.pixels, values)
    if ridge is None:
        ridge = scale_aware_ridge(cov, RIDGE_SCALE)
    stats = WeightedStats(mean=mean, cov=cov, ridge=float(ridge))
    stats.factor()
    return stats


def wrx_scores(cube: HsiCube, stats: WeightedStats) -> Raster:
    scores = mahalanobis_form(cube.pixels, stats.mean, stats.factor())
    return Raster.from_values(scores, cube.height, cube.width)


def rx_scores(cube: HsiCube, ridge: Optional[float] = None) -> Raster:
    """Global RX: weighted RX with uniform weights."""
    return wrx_scores(cube, weighted_stats(cube, None, ridge))
