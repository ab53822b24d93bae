# Path: /src/purify/training_set.py
# Extraction of the 1D/2D/3D training sets from purified background, and their binary container.
import logging
import struct
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.hsi.cube import HsiCube
from src.hsi.utils import window_starts
from src.purify.background import BackgroundMask

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 16
DEFAULT_STEP = 8

CONTAINER_MAGIC = b"HSTS"
# magic, d, m, L, count
CONTAINER_HEADER = struct.Struct("<4sBIII")


class EmptyTrainingSetError(ValueError):
    def __init__(self, dim, reason="no background samples"):
        self.dim = dim
        self.message = f"Training set for d={dim} is empty: {reason}"
        super().__init__(self.message)


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Samples stacked as ``(count, channels, height, width)``.

    d=1: ``(N1, 1, 1, L)`` spectral vectors; d=2: ``(N2, 1, m, m)`` single-band
    blocks; d=3: ``(N3, L, m, m)`` small cubes.
    """
    dim: int
    samples: np.ndarray
    block_size: int
    step: int
    bands: int

    @property
    def count(self) -> int:
        return self.samples.shape[0]

    @property
    def sample_shape(self) -> Tuple[int, int, int]:
        return self.samples.shape[1:]

    def __len__(self):
        return self.count

    def __str__(self):
        return f"TrainingSet d={self.dim}: {self.count} samples of {self.sample_shape}"


def extract_spectral_set(cube: HsiCube, mask: BackgroundMask) -> TrainingSet:
    vectors = cube.pixels[mask.background.ravel()]
    if vectors.shape[0] == 0:
        raise EmptyTrainingSetError(1, "every pixel is labeled anomalous")
    samples = vectors.reshape(-1, 1, 1, cube.bands)
    return TrainingSet(dim=1, samples=samples, block_size=1, step=1, bands=cube.bands)


def background_footprints(mask: BackgroundMask, block_size: int, step: int):
    """(row, col) offsets of every block_size window lying wholly in background.

    Windows are visited left-to-right, top-to-bottom with ``step``.
    """
    anomalies = mask.mask.data
    rows = window_starts(anomalies.shape[0], block_size, step)
    cols = window_starts(anomalies.shape[1], block_size, step)
    if rows.size == 0 or cols.size == 0:
        return []
    hits = sliding_window_view(anomalies, (block_size, block_size)).sum(axis=(2, 3))
    return [(r, c) for r in rows for c in cols if hits[r, c] == 0]


def extract_block_set(cube: HsiCube, mask: BackgroundMask, dim: int, block_size: int = DEFAULT_BLOCK_SIZE,
                      step: int = DEFAULT_STEP) -> TrainingSet:
    """The d=2 (per-band blocks) or d=3 (block cubes) training set."""
    if dim not in (2, 3):
        raise ValueError(f"Block training sets exist for d=2 and d=3, got d={dim}")
    if block_size < 1 or block_size > min(cube.height, cube.width):
        raise ValueError(f"Block size {block_size} does not fit a {cube.height}x{cube.width} image")
    if step < 1:
        raise ValueError(f"Step must be >= 1, got {step}")
    if not mask.mask.matches(cube):
        raise ValueError(f"Mask {mask.mask.shape} does not match {cube}")

    footprints = background_footprints(mask, block_size, step)
    if not footprints:
        raise EmptyTrainingSetError(dim, f"no {block_size}x{block_size} window lies fully in background")

    bsq = cube.band_sequential()
    samples = np.stack([bsq[:, r:r + block_size, c:c + block_size] for r, c in footprints])
    if dim == 2:
        samples = samples.reshape(-1, 1, block_size, block_size)
    logger.info("Extracted %d background footprints of %dx%d (step %d) for d=%d",
                len(footprints), block_size, block_size, step, dim)
    return TrainingSet(dim=dim, samples=samples, block_size=block_size, step=step, bands=cube.bands)


def extract_block_sets(cube: HsiCube, mask: BackgroundMask, block_size: int = DEFAULT_BLOCK_SIZE,
                       step: int = DEFAULT_STEP) -> Tuple[TrainingSet, TrainingSet]:
    return (extract_block_set(cube, mask, 2, block_size, step),
            extract_block_set(cube, mask, 3, block_size, step))


def extract_training_sets(cube: HsiCube, mask: BackgroundMask, block_size: int = DEFAULT_BLOCK_SIZE,
                          step: int = DEFAULT_STEP) -> Tuple[TrainingSet, TrainingSet, TrainingSet]:
    spectral = extract_spectral_set(cube, mask)
    spatial, joint = extract_block_sets(cube, mask, block_size, step)
    return spectral, spatial, joint


def save_training_set(training_set: TrainingSet, path):
    header = CONTAINER_HEADER.pack(CONTAINER_MAGIC, training_set.dim, training_set.block_size,
                                   training_set.bands, training_set.count)
    with open(path, "wb") as f:
        f.write(header)
        f.write(training_set.samples.astype("<f4").tobytes())


def _sample_shape(dim, block_size, bands):
    if dim == 1:
        return 1, 1, bands
    if dim == 2:
        return 1, block_size, block_size
    if dim == 3:
        return bands, block_size, block_size
    raise ValueError(f"Unknown training set dimension {dim}")


def load_training_set(path, step: int = DEFAULT_STEP) -> TrainingSet:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < CONTAINER_HEADER.size:
        raise ValueError(f"{path}: truncated training set container")
    magic, dim, block_size, bands, count = CONTAINER_HEADER.unpack_from(raw)
    if magic != CONTAINER_MAGIC:
        raise ValueError(f"{path}: not a training set container (magic {magic!r})")
    shape = _sample_shape(dim, block_size, bands)
    payload = np.frombuffer(raw, dtype="<f4", offset=CONTAINER_HEADER.size)
    if payload.size != count * int(np.prod(shape)):
        raise ValueError(f"{path}: payload holds {payload.size} values, header declares {count} x {shape}")
    samples = payload.astype(np.float64).reshape((count,) + shape)
    return TrainingSet(dim=dim, samples=samples, block_size=block_size,
                       step=step if dim != 1 else 1, bands=bands)
