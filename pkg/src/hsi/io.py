# Path: /src/hsi/io.py
# Reading and writing cubes (ENVI BSQ, CSV) and rasters (raw float32, CSV, PGM).
import logging
import os

import numpy as np
from PIL import Image
from spectral.io import envi

from src.hsi.cube import HsiCube, Raster

logger = logging.getLogger(__name__)

CUBE_FORMATS = ("envi-bsq", "csv")
RASTER_FORMATS = ("raw-f32", "csv", "pgm")

# ENVI "data type" codes accepted by the reader.
ENVI_DTYPES = {2: np.dtype("<i2"), 4: np.dtype("<f4")}
PAYLOAD_EXTENSIONS = (".img", ".raw", ".dat", ".bsq", "")


class CubeFormatError(ValueError):
    def __init__(self, path, reason):
        self.path = path
        self.message = f"{path}: {reason}"
        super().__init__(self.message)


def _check_finite(path, values):
    bad = np.flatnonzero(~np.isfinite(values.ravel()))
    if bad.size:
        raise CubeFormatError(path, f"non-finite value at index {int(bad[0])}")


def _payload_path(header_path, image=None):
    if image is not None:
        return image
    stem, ext = os.path.splitext(header_path)
    if ext.lower() != ".hdr":
        raise CubeFormatError(header_path, "ENVI cubes are opened through their .hdr file")
    for candidate in PAYLOAD_EXTENSIONS:
        if os.path.exists(stem + candidate):
            return stem + candidate
    raise CubeFormatError(header_path, "no payload file found next to the header")


def _header_int(path, header, key, default=None):
    if key not in header:
        if default is not None:
            return default
        raise CubeFormatError(path, f"header is missing '{key}'")
    try:
        return int(header[key])
    except (TypeError, ValueError):
        raise CubeFormatError(path, f"header field '{key}' is not an integer: {header[key]!r}")


def _load_envi(path, image=None) -> HsiCube:
    try:
        header = envi.read_envi_header(path)
    except (envi.EnviException, OSError, ValueError) as e:
        raise CubeFormatError(path, f"malformed header ({e})")

    samples = _header_int(path, header, "samples")
    lines = _header_int(path, header, "lines")
    bands = _header_int(path, header, "bands")
    data_type = _header_int(path, header, "data type")
    byte_order = _header_int(path, header, "byte order", default=0)
    offset = _header_int(path, header, "header offset", default=0)
    interleave = str(header.get("interleave", "bsq")).strip().lower()

    if min(samples, lines, bands) < 1:
        raise CubeFormatError(path, f"non-positive dimensions {lines}x{samples}x{bands}")
    if data_type not in ENVI_DTYPES:
        raise CubeFormatError(path, f"unsupported data type {data_type} (only 2 and 4)")
    if interleave != "bsq":
        raise CubeFormatError(path, f"unsupported interleave '{interleave}' (only bsq)")
    if byte_order != 0:
        raise CubeFormatError(path, "big-endian payloads are not supported")
    if offset != 0:
        raise CubeFormatError(path, "header offsets are not supported")

    payload = _payload_path(path, image)
    expected = samples * lines * bands * ENVI_DTYPES[data_type].itemsize
    actual = os.path.getsize(payload)
    if actual != expected:
        raise CubeFormatError(
            path, f"payload holds {actual} bytes, header declares {lines}x{samples}x{bands} = {expected} bytes")

    spy = envi.open(path, image=payload)
    bsq = np.array(spy.open_memmap(interleave="bsq"), dtype=np.float64)
    _check_finite(path, bsq)
    logger.debug("Loaded ENVI cube %s (%dx%dx%d)", path, lines, samples, bands)
    return HsiCube(bsq.transpose(1, 2, 0))


def _load_csv(path, lines=None, samples=None) -> HsiCube:
    try:
        values = np.loadtxt(path, delimiter=";", dtype=np.float64, ndmin=2, comments="#")
    except ValueError as e:
        raise CubeFormatError(path, f"malformed CSV ({e})")
    if values.size == 0:
        raise CubeFormatError(path, "CSV holds no pixel rows")
    n_pixels = values.shape[0]
    if lines is None and samples is None:
        side = int(round(np.sqrt(n_pixels)))
        if side * side != n_pixels:
            raise CubeFormatError(path, f"{n_pixels} rows do not form a square image; pass lines and samples")
        lines = samples = side
    elif lines is None:
        lines = n_pixels // samples
    elif samples is None:
        samples = n_pixels // lines
    if lines * samples != n_pixels:
        raise CubeFormatError(path, f"{n_pixels} rows do not match {lines}x{samples} pixels")
    _check_finite(path, values)
    return HsiCube(values.reshape(lines, samples, -1))


def load_cube(path, fmt="envi-bsq", image=None, lines=None, samples=None) -> HsiCube:
    """Load a cube from ``path``.

    ``envi-bsq`` expects the ``.hdr`` file (the payload is looked up next to it
    unless ``image`` is given). ``csv`` holds one pixel per row with the band
    values separated by ``;``; pass ``lines``/``samples`` unless the image is square.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Cube file not found: {path}")
    if fmt == "envi-bsq":
        return _load_envi(path, image)
    if fmt == "csv":
        return _load_csv(path, lines, samples)
    raise ValueError(f"Unknown cube format '{fmt}', expected one of {CUBE_FORMATS}")


def save_cube(cube: HsiCube, path):
    """Write ``cube`` as a little-endian float32 ENVI BSQ pair (``path`` is the .hdr)."""
    stem, ext = os.path.splitext(path)
    if ext.lower() != ".hdr":
        raise ValueError(f"ENVI cubes are written through a .hdr path, got {path}")
    metadata = {"description": "hsi-aean cube", "byte order": 0}
    envi.save_image(path, cube.data.astype(np.float32), dtype=np.float32, interleave="bsq",
                    byteorder=0, ext=".img", force=True, metadata=metadata)
    return stem + ".img"


def _raw_header_path(path):
    return path + ".hdr"


def save_raster(raster: Raster, path, fmt="raw-f32"):
    """Persist a raster.

    raw-f32 writes little-endian float32 row-major values plus a ``<path>.hdr``
    sidecar with ``width`` and ``height``. pgm is reserved for binary rasters
    and writes 0 -> 0, 1 -> 255.
    """
    if fmt == "raw-f32":
        raster.data.astype("<f4").tofile(path)
        with open(_raw_header_path(path), "w") as f:
            f.write(f"width = {raster.width}\nheight = {raster.height}\n")
    elif fmt == "csv":
        np.savetxt(path, raster.data, delimiter=";", fmt="%.17g")
    elif fmt == "pgm":
        if not raster.is_binary:
            raise CubeFormatError(path, "only binary rasters can be written as pgm")
        pixels = (raster.data * 255).astype(np.uint8)
        Image.fromarray(pixels).save(path, format="PPM")
    else:
        raise ValueError(f"Unknown raster format '{fmt}', expected one of {RASTER_FORMATS}")
    logger.debug("Saved %s to %s (%s)", raster, path, fmt)


def _read_raw_header(path):
    fields = {}
    with open(_raw_header_path(path), "r") as f:
        for line in f:
            if "=" in line:
                key, value = line.split("=", 1)
                fields[key.strip()] = value.strip()
    try:
        return int(fields["width"]), int(fields["height"])
    except (KeyError, ValueError):
        raise CubeFormatError(path, "raster sidecar header needs integer width and height")


def load_raster(path, fmt="raw-f32") -> Raster:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Raster file not found: {path}")
    if fmt == "raw-f32":
        width, height = _read_raw_header(path)
        values = np.fromfile(path, dtype="<f4")
        if values.size != width * height:
            raise CubeFormatError(path, f"payload holds {values.size} values, header declares {height}x{width}")
        _check_finite(path, values)
        return Raster(values.astype(np.float64).reshape(height, width))
    if fmt == "csv":
        try:
            values = np.loadtxt(path, delimiter=";", dtype=np.float64, ndmin=2)
        except ValueError as e:
            raise CubeFormatError(path, f"malformed CSV ({e})")
        if values.size == 0:
            raise CubeFormatError(path, "CSV holds no raster rows")
        _check_finite(path, values)
        return Raster(values)
    if fmt == "pgm":
        with Image.open(path) as image:
            pixels = np.asarray(image.convert("L"), dtype=np.float64)
        return Raster((pixels > 127).astype(np.float64))
    raise ValueError(f"Unknown raster format '{fmt}', expected one of {RASTER_FORMATS}")
