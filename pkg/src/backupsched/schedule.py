"""Periodic schedule model: job windows on a circular timeline.

All times are real hours measured from the period origin and reduced
modulo the period. A window is the open interval
``(center - width/2, center + width/2)`` taken modulo the period, so it may
wrap across ``t = 0``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from backupsched import kernels

WEEK_HOURS = 168.0
DAY_HOURS = 24.0
DAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")

_DAY_ALIASES = {
    "mon": 0, "monday": 0, "m": 0,
    "tue": 1, "tuesday": 1, "tu": 1,
    "wed": 2, "wednesday": 2, "w": 2,
    "thu": 3, "thursday": 3, "th": 3,
    "fri": 4, "friday": 4, "f": 4,
    "sat": 5, "saturday": 5, "sa": 5,
    "sun": 6, "sunday": 6, "su": 6,
}
_TOKEN_RE = re.compile(r"^\s*([A-Za-z]+)\s+(\d{1,2}):(\d{2})\s*$")
_CLOCK_RE = re.compile(r"^\s*(\d{1,2}):(\d{2})\s*$")

GAP_TOL = 1e-9


class ScheduleFormatError(ValueError):
    """Raised for malformed schedule documents or time tokens."""


def parse_clock(token: str) -> float:
    """Parse a ``"Ddd HH:MM"`` token into hours since Monday 00:00.

    A bare ``"HH:MM"`` is read as Monday; that is mostly useful for
    day-length periods.
    """
    m = _TOKEN_RE.match(token)
    if m:
        day_txt, hh, mm = m.groups()
        day = _DAY_ALIASES.get(day_txt.lower())
        if day is None:
            raise ScheduleFormatError(f"unknown day abbreviation {day_txt!r}")
    else:
        m = _CLOCK_RE.match(token)
        if not m:
            raise ScheduleFormatError(f"malformed time token {token!r}")
        day = 0
        hh, mm = m.groups()
    hours, minutes = int(hh), int(mm)
    if hours > 23 or minutes > 59:
        raise ScheduleFormatError(f"malformed time token {token!r}")
    return day * DAY_HOURS + hours + minutes / 60.0


@dataclass(frozen=True)
class PeriodConfig:
    period_hours: float = WEEK_HOURS
    origin_label: str = "Mon 00:00"

    def __post_init__(self):
        if not (self.period_hours > 0 and math.isfinite(self.period_hours)):
            raise ValueError(f"period_hours must be positive, got {self.period_hours}")
        parse_clock(self.origin_label)

    @property
    def origin_hours(self) -> float:
        """Origin as hours since Monday 00:00."""
        return parse_clock(self.origin_label)

    def wrap(self, t: float) -> float:
        r = math.fmod(t, self.period_hours)
        if r < 0:
            r += self.period_hours
        # fmod of a tiny negative can round up to exactly P
        return 0.0 if r >= self.period_hours else r

    def to_offset(self, token: str | float | int) -> float:
        """Convert a time token or raw hour offset to hours since the origin.

        Day tokens are reduced into ``[0, P)``. Raw numbers are returned as
        given so that callers can detect durations longer than the period.
        """
        if isinstance(token, (int, float)) and not isinstance(token, bool):
            return float(token)
        text = str(token).strip()
        try:
            return float(text)
        except ValueError:
            pass
        return self.wrap(parse_clock(text) - self.origin_hours)

    def label(self, t: float) -> str:
        """Day-labelled clock string for an offset, e.g. ``"Tue 23:00"``."""
        week = (self.origin_hours + self.wrap(t)) % WEEK_HOURS
        total_min = int(round(week * 60)) % int(WEEK_HOURS * 60)
        day, rem = divmod(total_min, 24 * 60)
        return f"{DAY_NAMES[day]} {rem // 60:02d}:{rem % 60:02d}"


@dataclass(frozen=True)
class JobWindow:
    client: str
    center: float
    width: float
    label: str | None = None

    def start(self, period: float) -> float:
        r = (self.center - 0.5 * self.width) % period
        return 0.0 if r >= period else r

    def end(self, period: float) -> float:
        r = (self.center + 0.5 * self.width) % period
        return 0.0 if r >= period else r

    def check(self, period: float) -> None:
        if not 0.0 <= self.center < period:
            raise ValueError(f"window center {self.center} outside [0, {period})")
        if not 0.0 < self.width <= period:
            raise ValueError(f"window width {self.width} outside (0, {period}]")


@dataclass(frozen=True)
class Schedule:
    period: PeriodConfig = field(default_factory=PeriodConfig)
    windows: tuple[JobWindow, ...] = ()
    server_concurrency: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        for w in self.windows:
            w.check(self.period.period_hours)
        if self.server_concurrency is not None and self.server_concurrency < 1:
            raise ValueError("server_concurrency must be a positive integer")

    @property
    def n(self) -> int:
        return len(self.windows)

    @property
    def P(self) -> float:
        return self.period.period_hours

    def centers(self) -> np.ndarray:
        return np.array([w.center for w in self.windows], dtype=np.float64)

    def starts(self) -> np.ndarray:
        return np.array([w.start(self.P) for w in self.windows], dtype=np.float64)

    def widths(self) -> np.ndarray:
        return np.array([w.width for w in self.windows], dtype=np.float64)

    def clients(self) -> list[str]:
        return sorted({w.client for w in self.windows})

    def with_windows(self, extra: Iterable[JobWindow]) -> "Schedule":
        return Schedule(self.period, self.windows + tuple(extra), self.server_concurrency)


@dataclass(frozen=True)
class IntentParams:
    """Parameters of a placement request.

    ``delta`` is the width of each new window. ``epsilon`` is the minimum
    circular gap between new window centers; the spacing actually enforced
    is ``max(epsilon, delta)``.
    """

    k: int = 1
    epsilon: float = 0.0
    alpha: float = 0.5
    omega: float = 1.0
    delta: float = 2.0
    daily_cap: int | None = None
    bucket_hours: float = DAY_HOURS
    concurrency_limit: int | None = None
    period_hours: float | None = None
    asset: str | None = None

    @property
    def spacing(self) -> float:
        return max(self.epsilon, self.delta)

    def range_problems(self) -> list[str]:
        problems = []
        if not (isinstance(self.k, int) and self.k >= 1):
            problems.append(f"k must be a positive integer, got {self.k}")
        if not 0.0 <= self.alpha <= 1.0:
            problems.append(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.omega <= 1.0:
            problems.append(f"omega must lie in [0, 1], got {self.omega}")
        if not self.epsilon >= 0.0:
            problems.append(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.delta > 0.0:
            problems.append(f"delta must be > 0, got {self.delta}")
        if self.daily_cap is not None and self.daily_cap < 1:
            problems.append(f"daily cap must be a positive integer, got {self.daily_cap}")
        if not self.bucket_hours > 0:
            problems.append(f"bucket length must be > 0, got {self.bucket_hours}")
        if self.concurrency_limit is not None and self.concurrency_limit < 1:
            problems.append(f"concurrency limit must be >= 1, got {self.concurrency_limit}")
        if self.period_hours is not None and not self.period_hours > 0:
            problems.append(f"period must be > 0, got {self.period_hours}")
        return problems

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "omega": self.omega,
            "delta": self.delta,
            "daily_cap": self.daily_cap,
            "bucket_hours": self.bucket_hours,
            "concurrency_limit": self.concurrency_limit,
            "period_hours": self.period_hours,
            "asset": self.asset,
        }


# -- ingestion -----------------------------------------------------------------


def _window_from_span(period: PeriodConfig, client, start, end, label=None) -> JobWindow:
    P = period.period_hours
    s = period.to_offset(start)
    e = period.to_offset(end)
    duration = e - s
    if duration <= 0:
        duration += P
    if duration <= 0:
        raise ScheduleFormatError(f"non-positive duration for {client!r}: {start} -> {end}")
    if duration > P:
        raise ScheduleFormatError(f"duration {duration} h exceeds period {P} h for {client!r}")
    return JobWindow(str(client), period.wrap(s + 0.5 * duration), duration, label or None)


def parse_schedule(document: str, format: str = "json") -> Schedule:
    """Parse a schedule document (``json`` or ``csv``) into a :class:`Schedule`.

    CSV documents carry only jobs (header ``client,start,end,label``) and use
    the default weekly period.
    """
    if format == "json":
        try:
            raw = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScheduleFormatError(f"invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ScheduleFormatError("schedule JSON must be an object")
        try:
            period = PeriodConfig(
                float(raw.get("period_hours", WEEK_HOURS)),
                str(raw.get("origin", "Mon 00:00")),
            )
        except ValueError as exc:
            raise ScheduleFormatError(str(exc)) from exc
        limit = raw.get("concurrency_limit")
        jobs = raw.get("jobs", [])
        if not isinstance(jobs, list):
            raise ScheduleFormatError("'jobs' must be a list")
        rows = []
        for job in jobs:
            try:
                rows.append((job["client"], job["start"], job["end"], job.get("label")))
            except (KeyError, TypeError) as exc:
                raise ScheduleFormatError(f"job entry missing field: {exc}") from exc
    elif format == "csv":
        period = PeriodConfig()
        limit = None
        reader = csv.DictReader(io.StringIO(document))
        if reader.fieldnames is None or not {"client", "start", "end"} <= set(reader.fieldnames):
            raise ScheduleFormatError("CSV header must include client,start,end")
        rows = [(r["client"], r["start"], r["end"], r.get("label")) for r in reader]
    else:
        raise ValueError(f"unknown schedule format {format!r}")

    windows = [_window_from_span(period, *row) for row in rows]
    try:
        return Schedule(period, tuple(windows), int(limit) if limit is not None else None)
    except ValueError as exc:
        raise ScheduleFormatError(str(exc)) from exc


def load_schedule(path: str) -> Schedule:
    fmt = "csv" if str(path).lower().endswith(".csv") else "json"
    with open(path, encoding="utf-8") as fh:
        return parse_schedule(fh.read(), fmt)


def serialize_schedule(schedule: Schedule, format: str = "json") -> str:
    """Inverse of :func:`parse_schedule`; times are written as raw hour offsets."""
    P = schedule.P
    rows = []
    for w in schedule.windows:
        start = w.start(P)
        rows.append((w.client, start, start + w.width, w.label or ""))
    if format == "json":
        doc = {
            "period_hours": P,
            "origin": schedule.period.origin_label,
            "jobs": [
                {"client": c, "start": s, "end": e, "label": lab}
                for c, s, e, lab in rows
            ],
        }
        if schedule.server_concurrency is not None:
            doc["concurrency_limit"] = schedule.server_concurrency
        return json.dumps(doc, indent=2)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["client", "start", "end", "label"])
        writer.writerows(rows)
        return buf.getvalue()
    raise ValueError(f"unknown schedule format {format!r}")


# -- activity ------------------------------------------------------------------


def count_active(schedule: Schedule, t: float) -> int:
    """Number of windows whose open interval contains ``t`` (mod P)."""
    P = schedule.P
    t = schedule.period.wrap(t)
    n = 0
    for w in schedule.windows:
        off = (t - w.start(P)) % P
        if 0.0 < off < w.width:
            n += 1
    return n


def count_active_grid(schedule: Schedule, times: Sequence[float]) -> np.ndarray:
    return kernels.count_active_many(
        np.ascontiguousarray(times, dtype=np.float64),
        schedule.starts(), schedule.widths(), schedule.P,
    )


def activity_pieces(schedule: Schedule) -> list[tuple[float, float, int]]:
    """Sweep the circle once; return ``(lo, hi, count)`` pieces tiling ``[0, P)``.

    ``count`` is the number of active windows on the open piece. At an exact
    endpoint the count can only be lower than on either neighbouring piece.
    """
    P = schedule.P
    events = []
    running = 0
    for w in schedule.windows:
        s = w.start(P)
        e = s + w.width
        if e > P:
            running += 1
            events.append((e - P, -1))
        else:
            events.append((e, -1))
        events.append((s, +1))
    events.sort()

    pieces = []
    cursor = 0.0
    i = 0
    while i < len(events):
        x = events[i][0]
        if x > cursor:
            pieces.append((cursor, x, running))
            cursor = x
        while i < len(events) and events[i][0] == x:
            running += events[i][1]
            i += 1
    if cursor < P:
        pieces.append((cursor, P, running))
    return pieces


def max_concurrency(schedule: Schedule) -> tuple[int, float]:
    """Peak of the active-job count over the period and a time attaining it."""
    best, witness = -1, 0.0
    for lo, hi, c in activity_pieces(schedule):
        if c > best:
            best, witness = c, 0.5 * (lo + hi)
    return best, witness


def busy_pieces(schedule: Schedule, at_least: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Starts and lengths of the pieces where at least ``at_least`` jobs run."""
    sel = [(lo, hi - lo) for lo, hi, c in activity_pieces(schedule) if c >= at_least]
    if not sel:
        return np.zeros(0), np.zeros(0)
    arr = np.array(sel, dtype=np.float64)
    return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])


def overlap_fraction(schedule: Schedule, window: JobWindow) -> float:
    """Fraction of ``window`` covered by at least one existing window."""
    P = schedule.P
    lo = window.start(P)
    covered = 0.0
    for p_lo, p_hi, c in activity_pieces(schedule):
        if c == 0:
            continue
        # intersect the arc (lo, lo + width) with [p_lo, p_hi) on the circle
        for shift in (-P, 0.0, P):
            a = max(lo, p_lo + shift)
            b = min(lo + window.width, p_hi + shift)
            if b > a:
                covered += b - a
    return min(covered / window.width, 1.0)


# -- validators ----------------------------------------------------------------


def circular_gaps(centers: Sequence[float], period: float) -> list[tuple[float, float, float]]:
    """Consecutive ``(a, b, gap)`` around the circle, including the wrap gap."""
    cs = sorted(float(c) for c in centers)
    if len(cs) < 2:
        return []
    out = [(a, b, b - a) for a, b in zip(cs, cs[1:])]
    out.append((cs[-1], cs[0], cs[0] + period - cs[-1]))
    return out


def validate_spacing(
    centers: Sequence[float], spacing: float, period: PeriodConfig | float
) -> list[tuple[float, float]]:
    """Pairs of circularly adjacent centers closer than ``spacing``."""
    P = period.period_hours if isinstance(period, PeriodConfig) else float(period)
    return [(a, b) for a, b, gap in circular_gaps(centers, P) if gap < spacing - GAP_TOL]


@dataclass(frozen=True)
class RequestCheck:
    ok: bool
    message: str

    def __bool__(self) -> bool:
        return self.ok


def validate_request(schedule: Schedule, intent: IntentParams) -> RequestCheck:
    """Check that a placement request is well posed for ``schedule``."""
    problems = intent.range_problems()
    if problems:
        return RequestCheck(False, "; ".join(problems))
    P = schedule.P
    if intent.period_hours is not None and abs(intent.period_hours - P) > 1e-9:
        return RequestCheck(
            False, f"intent period {intent.period_hours:g} h does not match schedule period {P:g} h"
        )
    if intent.delta > P:
        return RequestCheck(False, f"window width {intent.delta:g} exceeds period {P:g}")
    if intent.daily_cap is not None:
        ratio = P / intent.bucket_hours
        if abs(ratio - round(ratio)) > 1e-9:
            return RequestCheck(
                False, f"bucket length {intent.bucket_hours:g} h does not divide period {P:g} h"
            )
    s = intent.spacing
    total = intent.k * s
    if not total < P:
        return RequestCheck(
            False,
            f"k x spacing < P violated: {intent.k} x {s:g} = {total:g} >= {P:g}",
        )
    return RequestCheck(True, f"{intent.k} x {s:g} = {total:g} < {P:g}")
