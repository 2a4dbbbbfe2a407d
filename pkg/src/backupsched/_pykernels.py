"""Numpy implementations of the inner loops.

These define the reference semantics; ``_ckernels`` must agree with them to
floating-point rounding.
"""
import numpy as np

TOL = 1e-9
_CHUNK = 4096


def _circ_dist(a, b, period):
    d = np.abs(a - b) % period
    return np.minimum(d, period - d)


def gaussian_sum(grid, points, bandwidth):
    """Unnormalized Gaussian mixture ``sum_i exp(-z_i**2 / 2)`` at each grid point."""
    grid = np.asarray(grid, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    out = np.zeros(grid.shape[0])
    for lo in range(0, points.shape[0], _CHUNK):
        z = (grid[:, None] - points[None, lo:lo + _CHUNK]) / bandwidth
        out += np.exp(-0.5 * z * z).sum(axis=1)
    return out


def exclude(values, grid, tau, period, spacing, collar):
    """Zero cells within ``spacing`` of ``tau`` and halve the collar band, in place."""
    d = _circ_dist(np.asarray(grid), tau, period)
    inner = d <= spacing + TOL
    values[inner] = 0.0
    if collar > 0:
        band = ~inner & (d <= spacing + collar + TOL)
        values[band] *= 0.5


def dilated_mask(grid, starts, lengths, width, period):
    """True where a window of ``width`` centred on the cell meets any piece.

    Pieces are open arcs ``(start, start + length)`` on the circle.
    """
    grid = np.asarray(grid, dtype=np.float64)
    starts = np.asarray(starts, dtype=np.float64)
    lengths = np.asarray(lengths, dtype=np.float64)
    if starts.size == 0:
        return np.zeros(grid.shape[0], dtype=bool)
    lo = grid - 0.5 * width
    off = np.mod(starts[None, :] - lo[:, None], period)
    hit = (off < width - TOL) | (off + lengths[None, :] > period + TOL)
    return hit.any(axis=1)


def count_active_many(times, starts, widths, period):
    times = np.asarray(times, dtype=np.float64)
    starts = np.asarray(starts, dtype=np.float64)
    widths = np.asarray(widths, dtype=np.float64)
    if starts.size == 0:
        return np.zeros(times.shape[0], dtype=np.int64)
    off = np.mod(times[:, None] - starts[None, :], period)
    return ((off > 0) & (off < widths[None, :])).sum(axis=1).astype(np.int64)
