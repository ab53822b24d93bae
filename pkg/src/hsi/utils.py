# Path: /src/hsi/utils.py
# Helpers shared by the purification and detection stages: regularized
# Cholesky factors, the Mahalanobis quadratic form and window bookkeeping.
import numpy as np
from scipy import linalg


class CovarianceError(ValueError):
    def __init__(self, reason):
        self.message = f"Covariance estimate unusable: {reason}"
        super().__init__(self.message)


def regularized_cholesky(cov: np.ndarray, ridge: float):
    """Cholesky factor of ``cov + ridge * I`` in the form scipy's cho_solve expects."""
    if ridge < 0:
        raise ValueError(f"Regularization must be >= 0, got {ridge}")
    regularized = cov + ridge * np.eye(cov.shape[0])
    try:
        return linalg.cho_factor(regularized, lower=True, check_finite=True)
    except linalg.LinAlgError as e:
        raise CovarianceError(f"not positive definite after adding {ridge:g} to the diagonal ({e})")


def mahalanobis_form(pixels: np.ndarray, mean: np.ndarray, factor) -> np.ndarray:
    """(x - mean)^T C^{-1} (x - mean) for every row of ``pixels``, solved through ``factor``."""
    centered = np.atleast_2d(pixels) - mean
    solved = linalg.cho_solve(factor, centered.T, check_finite=False)
    return np.maximum(np.einsum("ij,ji->i", centered, solved), 0.0)


def scale_aware_ridge(cov: np.ndarray, scale: float) -> float:
    """``scale * trace(cov) / L``, falling back to ``scale`` for a zero covariance."""
    mean_variance = float(np.trace(cov)) / cov.shape[0]
    return scale * mean_variance if mean_variance > 0 else scale


def window_starts(size: int, window: int, step: int) -> np.ndarray:
    """Top/left offsets of a window slid with ``step`` so it stays inside ``size``."""
    if window > size:
        return np.empty(0, dtype=int)
    return np.arange(0, size - window + 1, step)
