"""Stochastic individual-based simulation of the early epidemic.

A finite population of s0 susceptibles plus i0 infecteds (all age 0).
Susceptible-infected pairs make contact at per-pair rate tau; the
aggregate contact process therefore runs at rate tau * S * I, with the
infector drawn uniformly among the infected and the contact succeeding
with probability beta(age of the infector).  That aggregate construction
is distributionally identical to per-pair exponential clocks but costs
O(events) instead of O(N^2) timers.

A contact that succeeds creates an age-0 infected with an exponential
infection duration of mean 1/nu.  Transmission uses the infector's
continuous age at the event time; the fixed Delta-t tick only advances
ages, decrements remaining life-spans and removes individuals whose
life-span went negative, and snapshots the daily census.

Runs are deterministic given their seed (a counter-based Philox stream),
and batches assign seed base_seed + k to run k, so results do not depend
on scheduling.
"""

from __future__ import annotations

import csv
import heapq
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError
from .kernel import InfectionKernel

__all__ = [
    "IbmConfig",
    "IbmRunResult",
    "BatchSummary",
    "SecondaryCaseStats",
    "run_ibm",
    "run_many",
    "run_batch",
    "secondary_case_stats",
    "write_batch_csv",
    "write_batch_json",
    "write_run_csv",
]

_RNG_BLOCK = 8192


@dataclass(frozen=True)
class IbmConfig:
    """One stochastic run: population, kernel, tick size, horizon, seed."""

    s0: int
    i0: int
    kernel: InfectionKernel
    dt: float = 0.25
    horizon: float = 100.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.s0 < 0:
            raise ConfigError(f"s0 must be non-negative, got {self.s0}")
        if self.i0 < 1:
            raise ConfigError(f"i0 must be at least 1, got {self.i0}")
        if self.dt <= 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.horizon <= 0.0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


@dataclass
class IbmRunResult:
    """One trajectory plus per-index-case transmission records."""

    daily_new: np.ndarray            # new infections per integer day
    census: np.ndarray               # infected count at day boundaries 0..D
    index_secondary_counts: np.ndarray
    index_transmission_ages: tuple[np.ndarray, ...]
    index_removal_age: np.ndarray    # nan when still infected at the horizon
    final_susceptible: int
    s0: int
    i0: int
    seed: int

    @property
    def total_infections(self) -> int:
        return int(self.daily_new.sum())

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.daily_new)


class _BufferedDraws:
    """Blocked draws from one generator; preserves the stream order."""

    def __init__(self, rng: np.random.Generator, block: int = _RNG_BLOCK) -> None:
        self._rng = rng
        self._block = block
        self._uni = rng.random(block)
        self._iu = 0
        self._exp = rng.standard_exponential(block)
        self._ie = 0

    def uniform(self) -> float:
        if self._iu == self._block:
            self._uni = self._rng.random(self._block)
            self._iu = 0
        value = self._uni[self._iu]
        self._iu += 1
        return value

    def exponential(self) -> float:
        if self._ie == self._block:
            self._exp = self._rng.standard_exponential(self._block)
            self._ie = 0
        value = self._exp[self._ie]
        self._ie += 1
        return value


def run_ibm(config: IbmConfig) -> IbmRunResult:
    """Simulate one seeded trajectory.

    Tick removals are event-driven: decrementing a remaining life-span L
    by dt at every tick removes an individual born at b at the fixed tick
    time dt * (floor(b/dt) + 1 + floor(L/dt)), so removal times can be
    scheduled at birth on a heap instead of rescanning the population.
    """
    kernel = config.kernel
    tau = kernel.tau
    mean_duration = 1.0 / kernel.nu
    a_max = kernel.a_max
    beta_scalar = getattr(kernel.beta, "scalar", None)
    if beta_scalar is None:
        beta_scalar = kernel.beta_at

    draws = _BufferedDraws(np.random.Generator(np.random.Philox(key=config.seed)))
    uniform = draws.uniform
    exponential = draws.exponential

    n_days = int(math.ceil(config.horizon))
    n_ticks = int(math.ceil(config.horizon / config.dt - 1e-12))
    dt = config.dt
    i0 = config.i0

    def removal_time(birth: float, lifespan: float) -> float:
        return dt * (math.floor(birth / dt) + 1 + math.floor(lifespan / dt))

    susceptible = config.s0
    births: list[float] = [0.0] * i0
    ids: list[int] = list(range(i0))
    pos: dict[int, int] = {k: k for k in range(i0)}
    removals: list[tuple[float, int]] = []
    for k in range(i0):
        heapq.heappush(removals, (removal_time(0.0, exponential() * mean_duration), k))
    next_id = i0

    daily_new = np.zeros(n_days, dtype=np.int64)
    census = np.zeros(n_days + 1, dtype=np.int64)
    census[0] = i0
    sec_counts = np.zeros(i0, dtype=np.int64)
    sec_ages: list[list[float]] = [[] for _ in range(i0)]
    removal_age = np.full(i0, np.nan)

    t = 0.0
    next_census = 1
    for tick in range(1, n_ticks + 1):
        tick_time = min(tick * dt, config.horizon)

        # aggregate contact process inside (t, tick_time)
        n_inf = len(births)
        while n_inf > 0 and susceptible > 0:
            wait = exponential() / (tau * susceptible * n_inf)
            if t + wait >= tick_time:
                break
            t += wait
            pick = int(uniform() * n_inf)
            if pick == n_inf:  # guard against u == 1.0
                pick = n_inf - 1
            age = t - births[pick]
            if age < a_max and uniform() < beta_scalar(age):
                susceptible -= 1
                day = int(t)
                if day >= n_days:
                    day = n_days - 1
                daily_new[day] += 1
                infector = ids[pick]
                if infector < i0:
                    sec_counts[infector] += 1
                    sec_ages[infector].append(age)
                ident = next_id
                next_id += 1
                pos[ident] = n_inf
                births.append(t)
                ids.append(ident)
                heapq.heappush(removals, (removal_time(t, exponential() * mean_duration), ident))
                n_inf += 1
        t = tick_time

        # tick: remove everyone whose decremented life-span went negative
        while removals and removals[0][0] <= tick_time + 1e-12:
            when, ident = heapq.heappop(removals)
            at = pos.pop(ident)
            if ident < i0:
                removal_age[ident] = when - births[at]
            last = len(births) - 1
            if at != last:
                births[at] = births[last]
                moved = ids[at] = ids[last]
                pos[moved] = at
            births.pop()
            ids.pop()

        while next_census <= n_days and tick_time >= next_census - 1e-9:
            census[next_census] = len(births)
            next_census += 1

        if not births:
            break

    return IbmRunResult(
        daily_new=daily_new,
        census=census,
        index_secondary_counts=sec_counts,
        index_transmission_ages=tuple(np.array(a) for a in sec_ages),
        index_removal_age=removal_age,
        final_susceptible=susceptible,
        s0=config.s0,
        i0=i0,
        seed=config.seed,
    )


def _run_seeded(args: tuple[IbmConfig, int]) -> IbmRunResult:
    config, seed = args
    return run_ibm(replace(config, seed=seed))


def run_many(
    config: IbmConfig, n_runs: int, base_seed: int, n_jobs: int = 1
) -> list[IbmRunResult]:
    """n_runs independent trajectories with seeds base_seed + k.

    Results are identical whatever ``n_jobs`` is; runs are independent,
    so they may execute in worker processes.
    """
    if n_runs < 1:
        raise ConfigError(f"n_runs must be at least 1, got {n_runs}")
    jobs = [(config, base_seed + k) for k in range(n_runs)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(_run_seeded, jobs, chunksize=max(1, n_runs // (4 * n_jobs))))
    return [_run_seeded(job) for job in jobs]


@dataclass
class BatchSummary:
    """Cross-run statistics: per-day bands plus secondary-case summaries."""

    days: np.ndarray
    daily_mean: np.ndarray
    daily_std: np.ndarray
    daily_quantiles: dict[int, np.ndarray]       # keys 10, 25, 75, 90
    cumulative_mean: np.ndarray
    cumulative_std: np.ndarray
    cumulative_quantiles: dict[int, np.ndarray]
    secondary_histogram: np.ndarray              # counts indexed by n secondary cases
    secondary_age_mean: np.ndarray               # mean transmissions per index per age-day
    n_runs: int
    i0: int
    s0: int
    base_seed: int


_QUANTS = (10, 25, 75, 90)


def summarize_runs(results: list[IbmRunResult], base_seed: int = 0) -> BatchSummary:
    daily = np.stack([r.daily_new for r in results]).astype(float)
    cumulative = np.cumsum(daily, axis=1)

    def bands(matrix: np.ndarray) -> dict[int, np.ndarray]:
        return {q: np.quantile(matrix, q / 100.0, axis=0) for q in _QUANTS}

    all_counts = np.concatenate([r.index_secondary_counts for r in results])
    histogram = np.bincount(all_counts)

    max_age_day = 0
    for r in results:
        for ages in r.index_transmission_ages:
            if len(ages):
                max_age_day = max(max_age_day, int(ages.max()))
    age_totals = np.zeros(max_age_day + 1)
    n_index = sum(r.i0 for r in results)
    for r in results:
        for ages in r.index_transmission_ages:
            for a in ages:
                age_totals[int(a)] += 1.0

    return BatchSummary(
        days=np.arange(daily.shape[1]),
        daily_mean=daily.mean(axis=0),
        daily_std=daily.std(axis=0),
        daily_quantiles=bands(daily),
        cumulative_mean=cumulative.mean(axis=0),
        cumulative_std=cumulative.std(axis=0),
        cumulative_quantiles=bands(cumulative),
        secondary_histogram=histogram,
        secondary_age_mean=age_totals / n_index,
        n_runs=len(results),
        i0=results[0].i0,
        s0=results[0].s0,
        base_seed=base_seed,
    )


def run_batch(
    config: IbmConfig, n_runs: int, base_seed: int, n_jobs: int = 1
) -> BatchSummary:
    """Run and summarize a seeded batch."""
    results = run_many(config, n_runs, base_seed, n_jobs=n_jobs)
    return summarize_runs(results, base_seed=base_seed)


@dataclass
class SecondaryCaseStats:
    """Single-index-case statistics across runs."""

    age_days: np.ndarray
    mean_by_age: np.ndarray      # mean transmissions per index case per age-day
    histogram: np.ndarray        # probability of n total secondary cases
    n_cases: int

    @property
    def mean_total(self) -> float:
        return float(self.mean_by_age.sum())


def secondary_case_stats(results: list[IbmRunResult]) -> SecondaryCaseStats:
    """Per-age mean transmission curve and offspring histogram.

    Every run must have started from a single index case; the two views
    count the same transmissions, so the per-age curve sums to the
    histogram's mean.
    """
    if any(r.i0 != 1 for r in results):
        raise ValueError("secondary_case_stats needs runs started with i0 = 1")
    summary = summarize_runs(results)
    histogram = summary.secondary_histogram / summary.secondary_histogram.sum()
    return SecondaryCaseStats(
        age_days=np.arange(len(summary.secondary_age_mean)),
        mean_by_age=summary.secondary_age_mean,
        histogram=histogram,
        n_cases=len(results),
    )


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def write_batch_csv(summary: BatchSummary, path, which: str = "daily") -> None:
    """Write `day,mean,std,q10,q25,q75,q90` for the daily or cumulative view."""
    if which == "daily":
        mean, std, quants = summary.daily_mean, summary.daily_std, summary.daily_quantiles
    elif which == "cumulative":
        mean, std, quants = (
            summary.cumulative_mean,
            summary.cumulative_std,
            summary.cumulative_quantiles,
        )
    else:
        raise ConfigError(f"unknown batch view {which!r}")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["day", "mean", "std", "q10", "q25", "q75", "q90"])
        for i, day in enumerate(summary.days):
            writer.writerow(
                [int(day)]
                + [repr(float(x[i])) for x in (mean, std, quants[10], quants[25], quants[75], quants[90])]
            )


def write_batch_json(summary: BatchSummary, path) -> None:
    payload = {
        "n_runs": summary.n_runs,
        "i0": summary.i0,
        "s0": summary.s0,
        "base_seed": summary.base_seed,
        "days": summary.days.tolist(),
        "daily": {
            "mean": summary.daily_mean.tolist(),
            "std": summary.daily_std.tolist(),
            **{f"q{q}": v.tolist() for q, v in summary.daily_quantiles.items()},
        },
        "cumulative": {
            "mean": summary.cumulative_mean.tolist(),
            "std": summary.cumulative_std.tolist(),
            **{f"q{q}": v.tolist() for q, v in summary.cumulative_quantiles.items()},
        },
        "secondary_histogram": summary.secondary_histogram.tolist(),
        "secondary_age_mean": summary.secondary_age_mean.tolist(),
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def write_run_csv(result: IbmRunResult, path) -> None:
    """Dump one raw run: `day,new_infections,census`."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["day", "new_infections", "census"])
        for d in range(len(result.daily_new)):
            writer.writerow([d, int(result.daily_new[d]), int(result.census[d + 1])])
