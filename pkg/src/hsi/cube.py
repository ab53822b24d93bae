# Path: /src/hsi/cube.py
# Core cube and raster types shared by every stage of the detector.
from dataclasses import dataclass
from typing import Tuple

import numpy as np


def _frozen(array, dtype=np.float64) -> np.ndarray:
    data = np.array(array, dtype=dtype, copy=True)
    data.setflags(write=False)
    return data


@dataclass(frozen=True, eq=False)
class HsiCube:
    """An M1 x M2 x L hyperspectral image.

    ``data`` is stored as ``(height, width, bands)``; pixel ``i`` in
    lexicographic order is ``data.reshape(-1, bands)[i]`` (row-major,
    left-to-right then top-to-bottom).
    """
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise ValueError(f"Cube data must be 3-dimensional, got shape {data.shape}")
        if min(data.shape) < 1:
            raise ValueError(f"Cube dimensions must all be >= 1, got {data.shape}")
        if not np.all(np.isfinite(data)):
            index = int(np.flatnonzero(~np.isfinite(data.ravel()))[0])
            raise ValueError(f"Cube holds a non-finite value at flat index {index}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.data.shape

    @property
    def pixels(self) -> np.ndarray:
        """The N x L matrix of spectral vectors in lexicographic order."""
        return self.data.reshape(-1, self.bands)

    def band_sequential(self) -> np.ndarray:
        """The cube as a ``(bands, height, width)`` array."""
        return np.ascontiguousarray(self.data.transpose(2, 0, 1))

    def __str__(self):
        return f"HsiCube {self.height}x{self.width}x{self.bands}"


@dataclass(frozen=True, eq=False)
class Raster:
    """A single-band M1 x M2 map: scores, REM, weights, masks or references."""
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError(f"Raster data must be 2-dimensional, got shape {data.shape}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    @property
    def values(self) -> np.ndarray:
        """Raster values in lexicographic pixel order."""
        return self.data.ravel()

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.data == 0) | (self.data == 1)))

    @classmethod
    def from_values(cls, values, height: int, width: int) -> "Raster":
        return cls(np.asarray(values).reshape(height, width))

    def matches(self, cube: HsiCube) -> bool:
        return self.shape == (cube.height, cube.width)

    def __str__(self):
        kind = "binary" if self.is_binary else "real"
        return f"Raster {self.height}x{self.width} ({kind})"


def normalize_cube(cube: HsiCube) -> HsiCube:
    """Affinely map the global minimum to -1 and the global maximum to +1.

    A constant cube maps to all zeros.
    """
    data = cube.data
    low, high = float(data.min()), float(data.max())
    if high == low:
        return HsiCube(np.zeros_like(data))
    if low == -1.0 and high == 1.0:
        return cube
    scaled = (data - low) * (2.0 / (high - low)) - 1.0
    # the maximum lands on exactly 1 so a second pass returns the cube unchanged
    scaled[data == high] = 1.0
    return HsiCube(np.clip(scaled, -1.0, 1.0))
