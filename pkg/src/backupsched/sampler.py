"""Greedy placement of new windows on the density grid.

The preference curve is ``G = (2*alpha - 1) * F`` shifted so its minimum is
zero: ``alpha = 1`` favours busy times, ``alpha = 0`` favours lulls. Each
placement takes the grid argmax of ``G`` and zeroes everything within the
required spacing of it, so later picks respect the spacing by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from backupsched import kernels
from backupsched.density import DensityEstimate, default_grid_size, make_grid
from backupsched.schedule import (
    IntentParams,
    JobWindow,
    PeriodConfig,
    Schedule,
    busy_pieces,
    validate_request,
)

TIE_RTOL = 1e-12
RNG_NAME = "PCG64"
MODES = ("argmax", "stochastic")


class SupportExhausted(RuntimeError):
    """No grid cell is left with positive preference before all k picks.

    ``iteration`` is the 1-based pick that could not be made and
    ``partial`` holds the picks made so far.
    """

    def __init__(self, iteration: int, partial: "SamplingOutcome"):
        super().__init__(f"Unable to proceed: support exhausted at pick {iteration}")
        self.iteration = iteration
        self.partial = partial


class IllPosedRequest(ValueError):
    pass


@dataclass
class SamplingDistribution:
    grid: np.ndarray
    values: np.ndarray
    alpha: float
    period_hours: float
    exclusions: list = field(default_factory=list)
    uniform: bool = False

    def support_mass(self) -> float:
        return float(self.values.sum()) * self.period_hours / self.values.shape[0]

    def exhausted(self) -> bool:
        return not bool(np.any(self.values > 0))


@dataclass
class SamplingOutcome:
    centers: list
    windows: list
    trace: list
    params: IntentParams
    seed: int
    mode: str = "argmax"
    rng: str = RNG_NAME

    def to_dict(self, period: PeriodConfig) -> dict:
        P = period.period_hours
        return {
            "params": self.params.to_dict(),
            "seed": self.seed,
            "rng": self.rng,
            "mode": self.mode,
            "centers": [float(c) for c in self.centers],
            "windows": [
                {
                    "client": w.client,
                    "start": period.label(w.start(P)),
                    "end": period.label(w.end(P)),
                    "center": float(w.center),
                    "width": float(w.width),
                }
                for w in self.windows
            ],
            "trace": self.trace,
        }


def uniform_distribution(period_hours: float, grid_size: int | None = None) -> SamplingDistribution:
    n = grid_size or default_grid_size(period_hours)
    return SamplingDistribution(
        make_grid(period_hours, n), np.ones(n), 0.5, period_hours, uniform=True
    )


def build_sampling_distribution(density: DensityEstimate, alpha: float) -> SamplingDistribution:
    """Shifted ``(2*alpha - 1) * F``; a flat curve (``alpha = 0.5``) becomes uniform 1."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    F = np.asarray(density.values)
    g = (2.0 * alpha - 1.0) * F
    g = g - g.min()
    scale = max(1.0, float(np.abs(F).max()))
    if float(g.max()) < 1e-12 * scale:
        return SamplingDistribution(
            np.asarray(density.grid), np.ones_like(F), alpha, density.period_hours, uniform=True
        )
    return SamplingDistribution(
        np.asarray(density.grid), np.ascontiguousarray(g), alpha, density.period_hours
    )


def apply_exclusion(dist: SamplingDistribution, tau: float, spacing: float, omega: float) -> None:
    """Zero ``[tau - s, tau + s]`` (mod P) and halve a collar of width ``s * (1 - omega)``."""
    collar = spacing * (1.0 - omega)
    kernels.exclude(dist.values, dist.grid, float(tau), dist.period_hours, float(spacing), collar)
    P = dist.period_hours
    dist.exclusions.append(((tau - spacing) % P, (tau + spacing) % P))


def mask_concurrency(dist: SamplingDistribution, schedule: Schedule, delta: float, limit: int) -> int:
    """Zero cells where a width-``delta`` window would meet ``limit`` running jobs.

    Returns the number of cells zeroed.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    starts, lengths = busy_pieces(schedule, at_least=limit)
    blocked = kernels.dilated_mask(dist.grid, starts, lengths, float(delta), dist.period_hours)
    blocked = np.asarray(blocked, dtype=bool)
    newly = int(np.count_nonzero(blocked & (dist.values > 0)))
    dist.values[blocked] = 0.0
    return newly


def bucket_index(t, bucket_hours: float) -> np.ndarray:
    return np.floor(np.asarray(t) / bucket_hours + 1e-12).astype(np.int64)


def mask_day_cap(dist: SamplingDistribution, chosen, cap: int, bucket_hours: float) -> list[int]:
    """Zero every bucket ``[m*D, (m+1)*D)`` that already holds ``cap`` chosen centers.

    Returns the indices of the full buckets.
    """
    ratio = dist.period_hours / bucket_hours
    if abs(ratio - round(ratio)) > 1e-9:
        raise ValueError(f"bucket length {bucket_hours} does not divide period {dist.period_hours}")
    if not len(chosen):
        return []
    ids, counts = np.unique(bucket_index(chosen, bucket_hours), return_counts=True)
    full = [int(i) for i, c in zip(ids, counts) if c >= cap]
    if full:
        cells = bucket_index(dist.grid, bucket_hours)
        dist.values[np.isin(cells, full)] = 0.0
    return full


def _pick(dist: SamplingDistribution, rng: np.random.Generator, mode: str) -> tuple[int, int]:
    v = dist.values
    if mode == "stochastic":
        cdf = np.cumsum(v)
        u = rng.random() * cdf[-1]
        idx = int(np.searchsorted(cdf, u, side="right"))
        return min(idx, v.shape[0] - 1), 1
    top = float(v.max())
    ties = np.flatnonzero(v >= top * (1.0 - TIE_RTOL))
    if ties.size == 1:
        return int(ties[0]), 1
    return int(ties[rng.integers(ties.size)]), int(ties.size)


def effective_limit(schedule: Schedule, intent: IntentParams) -> int | None:
    if intent.concurrency_limit is not None:
        return intent.concurrency_limit
    return schedule.server_concurrency


def greedy_sample(
    density: DensityEstimate | None,
    schedule: Schedule,
    intent: IntentParams,
    seed: int = 0,
    *,
    mode: str = "argmax",
    enforce_concurrency: bool = True,
    grid_size: int | None = None,
    client: str | None = None,
    history: list | None = None,
) -> SamplingOutcome:
    """Place ``intent.k`` windows of width ``intent.delta``.

    ``density`` may be None only for an empty schedule; the preference is
    then uniform. When ``history`` is a list, copies of the preference curve
    are appended to it before the first pick and after every update.

    Raises :class:`IllPosedRequest` before sampling and
    :class:`SupportExhausted` when the curve is zero everywhere.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    check = validate_request(schedule, intent)
    if not check:
        raise IllPosedRequest(check.message)
    P = schedule.P
    if density is None:
        if schedule.n:
            raise ValueError("density is required when the schedule has windows")
        dist = uniform_distribution(P, grid_size)
        dist.alpha = intent.alpha
    else:
        if abs(density.period_hours - P) > 1e-9:
            raise ValueError("density period does not match schedule period")
        dist = build_sampling_distribution(density, intent.alpha)

    limit = effective_limit(schedule, intent)
    if enforce_concurrency and limit is not None and schedule.n:
        mask_concurrency(dist, schedule, intent.delta, limit)

    rng = np.random.default_rng(seed)
    s = intent.spacing
    owner = client or intent.asset or "new"
    centers: list[float] = []
    trace: list[dict] = []
    if history is not None:
        history.append(dist.values.copy())

    def outcome() -> SamplingOutcome:
        wins = [
            JobWindow(owner, c, intent.delta, f"new{i + 1}") for i, c in enumerate(centers)
        ]
        return SamplingOutcome(list(centers), wins, trace, intent, seed, mode)

    for i in range(1, intent.k + 1):
        if dist.exhausted():
            raise SupportExhausted(i, outcome())
        idx, n_ties = _pick(dist, rng, mode)
        tau = float(dist.grid[idx])
        centers.append(tau)
        apply_exclusion(dist, tau, s, intent.omega)
        if intent.daily_cap is not None:
            mask_day_cap(dist, centers, intent.daily_cap, intent.bucket_hours)
        mass = dist.support_mass()
        trace.append(
            {
                "step": i,
                "index": idx,
                "tau": tau,
                "ties": n_ties,
                "support_mass": mass if math.isfinite(mass) else None,
            }
        )
        if history is not None:
            history.append(dist.values.copy())
    return outcome()
