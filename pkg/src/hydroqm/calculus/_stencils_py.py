"""Pure-numpy periodic stencil kernels (fallback backend).

Central differences on a periodic axis, built from np.roll. Shifting by -1
brings f[i+1] to position i, so roll(f, -k) samples f at offset +k.
"""
import numpy as np

BACKEND = "python"


def diff1_axis(f: np.ndarray, axis: int, h: float, order: int) -> np.ndarray:
    """First derivative along `axis` with periodic wrap."""
    if order == 2:
        return (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2.0 * h)
    if order == 4:
        return (
            -np.roll(f, -2, axis)
            + 8.0 * np.roll(f, -1, axis)
            - 8.0 * np.roll(f, 1, axis)
            + np.roll(f, 2, axis)
        ) / (12.0 * h)
    raise ValueError(f"unsupported stencil order {order}")


def diff2_axis(f: np.ndarray, axis: int, h: float, order: int) -> np.ndarray:
    """Second derivative along `axis` with periodic wrap."""
    if order == 2:
        return (np.roll(f, -1, axis) - 2.0 * f + np.roll(f, 1, axis)) / (h * h)
    if order == 4:
        return (
            -np.roll(f, -2, axis)
            + 16.0 * np.roll(f, -1, axis)
            - 30.0 * f
            + 16.0 * np.roll(f, 1, axis)
            - np.roll(f, 2, axis)
        ) / (12.0 * h * h)
    raise ValueError(f"unsupported stencil order {order}")
