"""Bridging reported-case data to model quantities.

Cumulative reported cases CR(t) are a fraction f of the flow of
recoveries, so two derivatives recover the model inputs:

    I0   = CR'(t0) / (nu * f)
    N(t) = (nu * CR'(t) + CR''(t)) / (nu * f)

Derivatives use second-order finite differences (central in the
interior, one-sided at the ends).  Noisy data can push N negative; the
values are kept as-is so the artifact is visible downstream.

Also here: the three regularizations used to lift daily counts to
continuous time, and the cluster-alignment transform that re-indexes
traced secondary cases onto their source's infection date so several
clusters merge into one synthetic cohort.
"""

from __future__ import annotations

import csv
import datetime
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .forward import MODE_DAILY, MODE_FLOW, IncidenceSeries

__all__ = [
    "CumulativeSeries",
    "ClusterRecord",
    "incidence_from_cumulative",
    "regularize",
    "align_cluster",
    "read_case_csv",
    "read_cluster_csv",
    "write_cluster_csv",
]


@dataclass
class CumulativeSeries:
    """Cumulative reported cases on a uniform day grid.

    ``f`` is the reporting fraction: the share of recovering individuals
    that show up in the reports.
    """

    t0: float
    dt: float
    values: np.ndarray
    f: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) < 2:
            raise DataError("cumulative series needs at least 2 points")
        if not np.all(np.isfinite(self.values)):
            raise DataError("cumulative series must be finite")
        if np.any(np.diff(self.values) < -1e-9 * max(1.0, abs(self.values[-1]))):
            raise DataError("cumulative series must be non-decreasing")
        if not (0.0 < self.f <= 1.0):
            raise ValueError(f"reporting fraction must lie in (0, 1], got {self.f}")
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))


def _first_derivative(y: np.ndarray, h: float) -> np.ndarray:
    """Second-order first derivative: central interior, one-sided ends."""
    d = np.empty_like(y)
    d[1:-1] = (y[2:] - y[:-2]) / (2.0 * h)
    d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * h)
    d[-1] = (3.0 * y[-1] - 4.0 * y[-2] + y[-3]) / (2.0 * h)
    return d


def _second_derivative(y: np.ndarray, h: float) -> np.ndarray:
    """3-point second derivative; second-order one-sided at the ends."""
    d = np.empty_like(y)
    d[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (h * h)
    if len(y) >= 4:
        d[0] = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / (h * h)
        d[-1] = (2.0 * y[-1] - 5.0 * y[-2] + 4.0 * y[-3] - y[-4]) / (h * h)
    else:
        d[0] = d[1]
        d[-1] = d[1]
    return d


def incidence_from_cumulative(cr: CumulativeSeries, nu: float) -> tuple[float, IncidenceSeries]:
    """Initial cohort size and incidence flow from cumulative reports.

    Returns (i0, N).  N can go negative on noisy data; it is reported
    unchanged.  Needs at least 3 data points for the derivative stencils.
    """
    if nu <= 0.0:
        raise ValueError(f"nu must be positive, got {nu}")
    if len(cr.values) < 3:
        raise DataError("need at least 3 data points to differentiate twice")
    h = cr.dt
    d1 = _first_derivative(cr.values, h)
    d2 = _second_derivative(cr.values, h)
    scale = nu * cr.f
    i0 = d1[0] / scale
    n = (nu * d1 + d2) / scale
    return float(i0), IncidenceSeries(t0=cr.t0, dt=cr.dt, values=n, mode=MODE_FLOW)


# ---------------------------------------------------------------------------
# regularizations
# ---------------------------------------------------------------------------

def _gaussian_smooth(values: np.ndarray, sigma: float) -> np.ndarray:
    # window truncated at +-4 sigma; per-point renormalization over the
    # in-range part keeps constants exact and preserves total mass for
    # series supported away from the boundaries
    half = max(int(np.ceil(4.0 * sigma)), 1)
    offsets = np.arange(-half, half + 1)
    window = np.exp(-0.5 * (offsets / sigma) ** 2)
    window /= window.sum()
    padded = np.convolve(values, window, mode="full")[half : half + len(values)]
    coverage = np.convolve(np.ones_like(values), window, mode="full")[half : half + len(values)]
    return padded / coverage


def _rolling_weekly(values: np.ndarray) -> np.ndarray:
    out = np.empty_like(values)
    n = len(values)
    for i in range(n):
        lo = max(i - 3, 0)
        hi = min(i + 3, n - 1)
        out[i] = values[lo : hi + 1].mean()
    return out


def regularize(daily: IncidenceSeries, method: str, sigma: float | None = None) -> IncidenceSeries:
    """Lift daily counts to a continuous-time representation.

    ``step``: piecewise-constant extension (values unchanged).
    ``gaussian``: discrete convolution with a normalized Gaussian window
    of standard deviation ``sigma`` days.
    ``rolling_weekly``: centered 7-day moving average, window shrinking
    at the boundaries.
    """
    if daily.mode != MODE_DAILY:
        raise ConfigError("regularize expects a daily-count series")
    if method == "step":
        values = daily.values.copy()
    elif method == "gaussian":
        if sigma is None or sigma <= 0.0:
            raise ConfigError("gaussian regularization needs sigma > 0")
        values = _gaussian_smooth(daily.values, float(sigma))
    elif method == "rolling_weekly":
        values = _rolling_weekly(daily.values)
    else:
        raise ConfigError(
            f"unknown regularization {method!r}; choose step, gaussian or rolling_weekly"
        )
    return IncidenceSeries(t0=daily.t0, dt=1.0, values=values, mode=MODE_FLOW)


# ---------------------------------------------------------------------------
# cluster alignment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClusterRecord:
    """One traced case: identity, optional infector, onset day, cluster label."""

    case_id: str
    infector_id: str | None
    onset_day: float
    cluster: str = ""


def align_cluster(records: Sequence[ClusterRecord], incubation: float) -> IncidenceSeries:
    """Merge traced clusters into a single synthetic day-zero cohort.

    Every case's infection day is its onset day minus the incubation
    period.  Cases are re-indexed by the infection day of their root
    source (the infector chain's head), so each source maps to day 0 and
    all clusters overlay as if produced by one cohort.  The output is
    the daily histogram of shifted infection days of the secondary
    cases; the sources themselves form the implied initial cohort and
    are not counted.
    """
    if incubation < 0.0:
        raise ValueError(f"incubation must be non-negative, got {incubation}")
    if not records:
        raise DataError("no cluster records supplied")
    by_id = {r.case_id: r for r in records}
    if len(by_id) != len(records):
        raise DataError("duplicate case ids in cluster records")

    def root_of(record: ClusterRecord) -> ClusterRecord:
        seen = set()
        current = record
        while current.infector_id is not None:
            if current.case_id in seen:
                raise DataError(f"infector chain cycles at case {current.case_id!r}")
            seen.add(current.case_id)
            try:
                parent = by_id[current.infector_id]
            except KeyError:
                raise DataError(
                    f"case {current.case_id!r} names unknown infector "
                    f"{current.infector_id!r}"
                ) from None
            if parent.onset_day > current.onset_day:
                raise DataError(
                    f"case {current.case_id!r} onsets before its infector "
                    f"{parent.case_id!r}"
                )
            current = parent
        return current

    shifted_days: list[int] = []
    for record in records:
        root = root_of(record)
        if root.case_id == record.case_id:
            continue  # sources are the implied initial cohort
        infection = record.onset_day - incubation
        origin = root.onset_day - incubation
        shifted_days.append(int(round(infection - origin)))

    if not shifted_days:
        return IncidenceSeries.daily(np.zeros(1))
    length = max(shifted_days) + 1
    if min(shifted_days) < 0:
        raise DataError("a secondary case precedes its source's infection date")
    counts = np.zeros(length)
    for day in shifted_days:
        counts[day] += 1.0
    return IncidenceSeries.daily(counts)


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def _dates_to_offsets(raw: list[str], path: Path) -> np.ndarray:
    """ISO dates or plain numbers -> day offsets from the first row."""
    try:
        return np.array([float(x) for x in raw])
    except ValueError:
        pass
    try:
        dates = [datetime.date.fromisoformat(x) for x in raw]
    except ValueError as exc:
        raise DataError(f"{path}: dates must be ISO (YYYY-MM-DD) or numeric: {exc}") from None
    origin = dates[0]
    return np.array([(d - origin).days for d in dates], dtype=float)


def read_case_csv(path, f: float = 1.0) -> tuple[str, CumulativeSeries | IncidenceSeries]:
    """Read `date,cumulative` or `date,daily` case data.

    Returns ("cumulative", CumulativeSeries) or ("daily", IncidenceSeries)
    depending on the header.  Dates become day offsets from the first row.
    """
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        names = reader.fieldnames or []
        kind = "cumulative" if "cumulative" in names else "daily" if "daily" in names else None
        if "date" not in names or kind is None:
            raise DataError(
                f"{path}: expected header `date,cumulative` or `date,daily`, got {names}"
            )
        raw_dates: list[str] = []
        raw_values: list[float] = []
        for row in reader:
            raw_dates.append(row["date"])
            try:
                raw_values.append(float(row[kind]))
            except (TypeError, ValueError):
                raise DataError(f"{path}: non-numeric count in row {reader.line_num}") from None
    if not raw_dates:
        raise DataError(f"{path}: no data rows")
    offsets = _dates_to_offsets(raw_dates, path)
    steps = np.diff(offsets)
    if len(steps) and (np.any(steps <= 0) or not np.allclose(steps, steps[0])):
        raise DataError(f"{path}: day grid is not uniform and increasing")
    dt = float(steps[0]) if len(steps) else 1.0
    values = np.array(raw_values)
    if kind == "cumulative":
        return kind, CumulativeSeries(t0=float(offsets[0]), dt=dt, values=values, f=f)
    if dt != 1.0:
        raise DataError(f"{path}: daily counts must sit on an integer-day grid")
    return kind, IncidenceSeries.daily(values, t0=float(offsets[0]))


def read_cluster_csv(path) -> list[ClusterRecord]:
    """Read `case_id,infector_id,onset_day,cluster` records (blank infector = source)."""
    path = Path(path)
    records: list[ClusterRecord] = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        required = {"case_id", "infector_id", "onset_day", "cluster"}
        if not required.issubset(reader.fieldnames or []):
            raise DataError(f"{path}: expected header with columns {sorted(required)}")
        for row in reader:
            infector = row["infector_id"].strip() or None
            try:
                onset = float(row["onset_day"])
            except (TypeError, ValueError):
                raise DataError(f"{path}: bad onset_day in row {reader.line_num}") from None
            records.append(
                ClusterRecord(
                    case_id=row["case_id"].strip(),
                    infector_id=infector,
                    onset_day=onset,
                    cluster=row["cluster"].strip(),
                )
            )
    if not records:
        raise DataError(f"{path}: no cluster records")
    return records


def write_cluster_csv(records: Iterable[ClusterRecord], path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["case_id", "infector_id", "onset_day", "cluster"])
        for r in records:
            writer.writerow([r.case_id, r.infector_id or "", f"{r.onset_day:g}", r.cluster])
