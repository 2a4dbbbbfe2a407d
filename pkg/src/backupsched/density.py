"""Periodic kernel density estimate of existing window centers.

A plain Gaussian KDE treats the timeline as unbounded, so mass leaks past
``t = 0`` and ``t = P`` and the two ends disagree. Here centers near either
edge get periodic images outside ``[0, P)`` before the kernel sum, the result is
restricted to ``[0, P)`` and renormalized on the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from backupsched import kernels
from backupsched.schedule import Schedule

DEFAULT_EXPANSION = 0.25
# kernel reach, in bandwidths, that the expansion must cover
_REACH = 6.0
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def default_grid_size(period_hours: float) -> int:
    """Five-minute resolution: 2016 cells for a week."""
    return max(int(round(period_hours * 12)), 1)


def make_grid(period_hours: float, grid_size: int) -> np.ndarray:
    return np.arange(grid_size, dtype=np.float64) * (period_hours / grid_size)


def _fallback(period_hours: float) -> float:
    return period_hours / 24.0


def silverman_bandwidth(points, period_hours: float = 168.0) -> float:
    """Silverman's rule of thumb, ``0.9 * min(sd, IQR/1.34) * n**(-1/5)``.

    Degenerate samples (one point, zero spread) fall back to ``P/24``.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.size == 0:
        raise ValueError("bandwidth needs at least one point")
    if x.size < 2:
        return _fallback(period_hours)
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    h = 0.9 * spread * x.size ** (-0.2)
    if not (h > 0 and math.isfinite(h)):
        return _fallback(period_hours)
    return h


def scott_bandwidth(points, period_hours: float = 168.0) -> float:
    """Scott's rule, ``sd * n**(-1/5)``, with the same fallback as Silverman."""
    x = np.asarray(points, dtype=np.float64)
    if x.size == 0:
        raise ValueError("bandwidth needs at least one point")
    if x.size < 2:
        return _fallback(period_hours)
    h = float(np.std(x, ddof=1)) * x.size ** (-0.2)
    if not (h > 0 and math.isfinite(h)):
        return _fallback(period_hours)
    return h


BANDWIDTH_RULES = {"silverman": silverman_bandwidth, "scott": scott_bandwidth}


def resolve_bandwidth(rule: str | float, schedule: Schedule) -> float:
    """Turn ``"silverman"``, ``"scott"``, ``"fixed:<hours>"`` or a number into hours."""
    if isinstance(rule, (int, float)):
        return float(rule)
    if rule in BANDWIDTH_RULES:
        return BANDWIDTH_RULES[rule](schedule.centers(), schedule.P)
    if rule.startswith("fixed:"):
        return float(rule.split(":", 1)[1])
    raise ValueError(f"unknown bandwidth rule {rule!r}")


def auto_expansion(bandwidth: float, period_hours: float) -> float:
    """Expansion fraction: at least 1/4 and wide enough to cover six bandwidths.

    Exceeds 1 when the bandwidth is above ``P/6``; the images then span
    several periods.
    """
    return max(DEFAULT_EXPANSION, _REACH * bandwidth / period_hours)


def replicate(centers: np.ndarray, period_hours: float, expansion: float) -> np.ndarray:
    """Centers plus every periodic image ``c + m*P`` that lands in ``[-u, P + u]``.

    For ``u <= P`` this adds ``c - P`` for centers in ``[P-u, P)`` and
    ``c + P`` for centers in ``[0, u]``.
    """
    P = period_hours
    parts = [centers]
    reach = int(math.ceil(expansion / P))
    for m in range(1, reach + 1):
        parts.append(centers[centers - m * P >= -expansion] - m * P)
        parts.append(centers[centers + m * P <= P + expansion] + m * P)
    return np.ascontiguousarray(np.concatenate(parts))


def periodic_trapezoid(values: np.ndarray, period_hours: float) -> float:
    # the closing segment values[-1] -> values[0] makes every cell weight equal
    return float(values.sum()) * period_hours / values.shape[0]


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """Grid samples of the normalized periodic KDE ``F_h`` on ``[0, P)``."""

    grid: np.ndarray
    values: np.ndarray
    bandwidth: float
    expansion: float
    period_hours: float
    sources: np.ndarray
    scale: float

    @property
    def grid_size(self) -> int:
        return self.grid.shape[0]

    def evaluate(self, t) -> np.ndarray:
        """Evaluate the same estimate off-grid (``t`` is not reduced mod P)."""
        t = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64)
        return kernels.gaussian_sum(t, self.sources, self.bandwidth) * self.scale


def periodic_kde(
    schedule: Schedule,
    bandwidth: float,
    expansion_fraction: float | None = None,
    grid_size: int | None = None,
) -> DensityEstimate:
    """Boundary-corrected KDE of the window centers of ``schedule``.

    ``expansion_fraction=None`` picks :func:`auto_expansion`. An explicit
    fraction must lie in ``(0, 1]`` and is used as given.
    """
    if schedule.n == 0:
        raise ValueError("periodic_kde needs at least one window; use a uniform distribution")
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    P = schedule.P
    if expansion_fraction is None:
        expansion_fraction = auto_expansion(bandwidth, P)
    elif not 0.0 < expansion_fraction <= 1.0:
        raise ValueError(f"expansion_fraction must lie in (0, 1], got {expansion_fraction}")
    n_grid = grid_size or default_grid_size(P)
    grid = make_grid(P, n_grid)
    u = expansion_fraction * P

    sources = replicate(schedule.centers(), P, u)
    raw = kernels.gaussian_sum(grid, sources, bandwidth)
    total = periodic_trapezoid(raw, P)
    if not total > 0:
        # every kernel underflowed on the grid; bandwidth far below the cell size
        raise ValueError(f"bandwidth {bandwidth} too small for grid step {P / n_grid}")
    values = raw / total
    grid.setflags(write=False)
    values.setflags(write=False)
    sources.setflags(write=False)
    return DensityEstimate(grid, values, float(bandwidth), u, P, sources, 1.0 / total)


def raw_kde(schedule: Schedule, bandwidth: float, grid: np.ndarray) -> np.ndarray:
    """Uncorrected Gaussian KDE on the infinite line, sampled on ``grid``."""
    centers = np.ascontiguousarray(schedule.centers())
    s = kernels.gaussian_sum(np.ascontiguousarray(grid), centers, bandwidth)
    return s / (centers.size * bandwidth * _SQRT_2PI)
