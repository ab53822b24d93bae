# Path: /src/purify/background.py
# Probability-based background purification: global Mahalanobis scoring and
# thresholding of the score distribution at a background confidence.
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from src.hsi.cube import HsiCube, Raster
from src.hsi.utils import CovarianceError, mahalanobis_form, regularized_cholesky, scale_aware_ridge

logger = logging.getLogger(__name__)

DEFAULT_CONFIDENCE = 0.99
RIDGE_SCALE = 1e-6


@dataclass(frozen=True, eq=False)
class GlobalStats:
    mean: np.ndarray
    cov: np.ndarray
    ridge: float

    def factor(self):
        return regularized_cholesky(self.cov, self.ridge)


@dataclass(frozen=True, eq=False)
class BackgroundMask:
    """Purification result: ``mask`` is 1 for likely anomalies, 0 for background."""
    mask: Raster
    threshold: float
    confidence: float
    ridge: Optional[float] = None

    @property
    def background(self) -> np.ndarray:
        return self.mask.data == 0

    @property
    def n_anomalies(self) -> int:
        return int(self.mask.data.sum())

    @property
    def n_background(self) -> int:
        return self.mask.data.size - self.n_anomalies


def global_stats(cube: HsiCube, ridge: Optional[float] = None) -> GlobalStats:
    """Sample mean and 1/N covariance of all spectral vectors.

    ``ridge`` defaults to 1e-6 * trace(cov) / L. The regularized covariance is
    factorized once here so an unusable estimate fails early.
    """
    if cube.n_pixels < 2:
        raise CovarianceError(f"need at least 2 pixels, got {cube.n_pixels}")
    pixels = cube.pixels
    mean = pixels.mean(axis=0)
    centered = pixels - mean
    cov = centered.T @ centered / cube.n_pixels
    cov = (cov + cov.T) / 2
    if ridge is None:
        ridge = scale_aware_ridge(cov, RIDGE_SCALE)
    stats = GlobalStats(mean=mean, cov=cov, ridge=float(ridge))
    stats.factor()
    return stats


def mahalanobis_scores(cube: HsiCube, stats: GlobalStats) -> Raster:
    scores = mahalanobis_form(cube.pixels, stats.mean, stats.factor())
    return Raster.from_values(scores, cube.height, cube.width)


def threshold_by_confidence(scores: Raster, confidence: float = DEFAULT_CONFIDENCE) -> BackgroundMask:
    """Label as anomalous every pixel whose score exceeds the empirical confidence-quantile.

    The threshold is the order statistic at rank ceil(confidence * N) (1-based,
    no interpolation), so roughly a (1 - confidence) fraction ends up flagged.
    """
    if not 0 < confidence <= 1:
        raise ValueError(f"Confidence must lie in (0, 1], got {confidence}")
    values = scores.values
    # round() keeps products such as 0.95 * 100 from landing one rank high
    rank = max(1, math.ceil(round(confidence * values.size, 9)))
    threshold = float(np.sort(values)[rank - 1])
    mask = (scores.data > threshold).astype(np.float64)
    result = BackgroundMask(mask=Raster(mask), threshold=threshold, confidence=confidence)
    logger.info("Purification at confidence %g: threshold %.6g, %d of %d pixels flagged",
                confidence, threshold, result.n_anomalies, values.size)
    return result


def purify(cube: HsiCube, confidence: float = DEFAULT_CONFIDENCE, ridge: Optional[float] = None) -> BackgroundMask:
    stats = global_stats(cube, ridge)
    mask = threshold_by_confidence(mahalanobis_scores(cube, stats), confidence)
    return replace(mask, ridge=stats.ridge)
