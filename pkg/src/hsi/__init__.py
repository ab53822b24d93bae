# Path: /src/hsi/__init__.py
from src.hsi.cube import HsiCube, Raster, normalize_cube
from src.hsi.io import CubeFormatError, load_cube, save_cube, load_raster, save_raster

__all__ = [
    "HsiCube", "Raster", "normalize_cube",
    "CubeFormatError", "load_cube", "save_cube", "load_raster", "save_raster",
]
