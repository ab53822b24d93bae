# Path: /src/nn/utils.py
# Window gathering and scattering used by the convolution layers.
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def pair(value):
    """Accept an int or a 2-tuple and return a 2-tuple."""
    if isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise ValueError(f"Expected a pair, got {value!r}")
        return int(value[0]), int(value[1])
    return int(value), int(value)


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def gather_windows(x: np.ndarray, kernel, stride, count=None) -> np.ndarray:
    """Strided kh x kw windows of a ``(B, C, H, W)`` array.

    Returns a ``(B, C, Ho, Wo, kh, kw)`` view; ``count`` truncates to the first
    ``(Ho, Wo)`` positions.
    """
    kh, kw = kernel
    sh, sw = stride
    windows = sliding_window_view(x, (kh, kw), axis=(2, 3))[:, :, ::sh, ::sw]
    if count is not None:
        windows = windows[:, :, :count[0], :count[1]]
    return windows


def scatter_windows(cols: np.ndarray, stride, size) -> np.ndarray:
    """Adjoint of :func:`gather_windows`.

    ``cols`` is ``(B, Ho, Wo, C, kh, kw)``; every window is added back at its
    strided position in a zero ``(B, C, *size)`` buffer.
    """
    batch, out_h, out_w, channels, kh, kw = cols.shape
    sh, sw = stride
    height, width = size
    if height < (out_h - 1) * sh + kh or width < (out_w - 1) * sw + kw:
        raise ValueError(f"Scatter buffer {size} too small for {out_h}x{out_w} windows of {kh}x{kw}")
    out = np.zeros((batch, channels, height, width), dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i:i + sh * (out_h - 1) + 1:sh, j:j + sw * (out_w - 1) + 1:sw] += \
                cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    return out
