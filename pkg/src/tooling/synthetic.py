# Path: /src/tooling/synthetic.py
# Seeded synthetic scenes: a smoothly segmented multi-class background with
# small rectangular anomalies planted at known positions.
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from src.hsi.cube import HsiCube, Raster

logger = logging.getLogger(__name__)

MAX_ANOMALY_FRACTION = 0.02
PLACEMENT_ATTEMPTS = 1000


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """Synthetic scene description.

    ``class_means`` is (classes, bands) and ``class_covs`` (classes, bands,
    bands); when omitted, smooth random spectra and isotropic noise of
    standard deviation ``noise`` are used. Each anomaly is a rectangle of
    ``anomaly_sizes[k]`` pixels whose spectrum is the local background mean
    shifted by ``offset`` along a random unit direction.
    """
    height: int = 48
    width: int = 48
    bands: int = 16
    classes: int = 3
    class_means: Optional[np.ndarray] = None
    class_covs: Optional[np.ndarray] = None
    anomaly_sizes: Tuple[Tuple[int, int], ...] = ((2, 3), (3, 2), (2, 2), (3, 3))
    offset: float = 0.5
    noise: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if min(self.height, self.width, self.bands, self.classes) < 1:
            raise ValueError("Scene dimensions and class count must be >= 1")
        if self.class_means is not None and np.shape(self.class_means) != (self.classes, self.bands):
            raise ValueError(f"class_means must be {(self.classes, self.bands)}, got {np.shape(self.class_means)}")
        if self.class_covs is not None and \
                np.shape(self.class_covs) != (self.classes, self.bands, self.bands):
            raise ValueError(f"class_covs must be {(self.classes, self.bands, self.bands)}")
        if self.offset < 0 or self.noise < 0:
            raise ValueError("offset and noise must be >= 0")
        for rows, cols in self.anomaly_sizes:
            if rows < 1 or cols < 1 or rows > self.height or cols > self.width:
                raise ValueError(f"Anomaly size {rows}x{cols} does not fit a {self.height}x{self.width} scene")
        if self.anomaly_pixels >= MAX_ANOMALY_FRACTION * self.height * self.width:
            raise ValueError(f"{self.anomaly_pixels} anomaly pixels exceed {MAX_ANOMALY_FRACTION:.0%} "
                             f"of a {self.height}x{self.width} scene")

    @property
    def anomaly_pixels(self) -> int:
        return sum(rows * cols for rows, cols in self.anomaly_sizes)


def _class_spectra(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.class_means is not None:
        return np.asarray(spec.class_means, dtype=np.float64)
    wavelengths = np.linspace(0.0, 1.0, spec.bands)
    level = rng.uniform(0.2, 0.6, size=(spec.classes, 1))
    amplitude = rng.uniform(0.05, 0.2, size=(spec.classes, 1))
    frequency = rng.uniform(0.5, 2.0, size=(spec.classes, 1))
    phase = rng.uniform(0.0, 2 * np.pi, size=(spec.classes, 1))
    return level + amplitude * np.sin(2 * np.pi * frequency * wavelengths + phase)


def _segmentation(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.classes == 1:
        return np.zeros((spec.height, spec.width), dtype=int)
    sigma = max(min(spec.height, spec.width) / 8.0, 1.0)
    fields = np.stack([ndimage.gaussian_filter(rng.standard_normal((spec.height, spec.width)), sigma, mode="reflect")
                       for _ in range(spec.classes)])
    return np.argmax(fields, axis=0)


def _place_anomalies(spec: SynthSpec, rng: np.random.Generator):
    """Non-overlapping, non-adjacent rectangles as (row, col, rows, cols)."""
    occupied = np.zeros((spec.height, spec.width), dtype=bool)
    placed = []
    for rows, cols in spec.anomaly_sizes:
        for _ in range(PLACEMENT_ATTEMPTS):
            row = int(rng.integers(0, spec.height - rows + 1))
            col = int(rng.integers(0, spec.width - cols + 1))
            guard = occupied[max(row - 1, 0):row + rows + 1, max(col - 1, 0):col + cols + 1]
            if not guard.any():
                occupied[row:row + rows, col:col + cols] = True
                placed.append((row, col, rows, cols))
                break
        else:
            raise ValueError(f"Could not place a {rows}x{cols} anomaly without overlap")
    return placed


def generate_synthetic_hsi(spec: SynthSpec = SynthSpec()) -> Tuple[HsiCube, Raster]:
    """Draw a scene and its reference map; the same spec always yields the same arrays."""
    rng = np.random.default_rng(spec.seed)
    means = _class_spectra(spec, rng)
    labels = _segmentation(spec, rng)

    noise = rng.standard_normal((spec.height, spec.width, spec.bands))
    if spec.class_covs is not None:
        factors = np.linalg.cholesky(np.asarray(spec.class_covs, dtype=np.float64))
        noise = np.einsum("hwij,hwj->hwi", factors[labels], noise)
    else:
        noise = spec.noise * noise
    data = means[labels] + noise

    reference = np.zeros((spec.height, spec.width))
    for row, col, rows, cols in _place_anomalies(spec, rng):
        direction = rng.standard_normal(spec.bands)
        direction /= np.linalg.norm(direction)
        target = means[labels[row, col]] + spec.offset * direction
        data[row:row + rows, col:col + cols] = target + noise[row:row + rows, col:col + cols]
        reference[row:row + rows, col:col + cols] = 1.0

    logger.info("Generated %dx%dx%d scene with %d classes and %d anomaly pixels (seed %d)",
                spec.height, spec.width, spec.bands, spec.classes, int(reference.sum()), spec.seed)
    return HsiCube(data), Raster(reference)
