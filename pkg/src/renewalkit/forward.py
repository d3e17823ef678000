"""Forward simulation of the age-of-infection epidemic.

Continuous time: an explicit marching scheme for the Volterra integral
equation

    N(t) = tau * S(max(t-dt, t0)) * [ Lambda(t)
           + int_0^{max(t-dt-t0, 0)} Gamma(a) N(t-a) da ],

where Lambda(t) is the infectious pressure of the cohorts already
infected at t0 and S is updated from the running cumulative incidence.
Lagging S and the convolution upper limit by one step makes the march
explicit; the only coupling of N(t) to itself (the age-zero quadrature
node) is linear and solved algebraically, and vanishes entirely for
kernels with Gamma(0) = 0.

Day-by-day time: the exact discrete renewal recursion, no quadrature.

Also here: the generation decomposition via convolution powers, and the
smoothed-initial-cohort flux used to check that an exponential initial
age profile converges to the point-cohort model as its concentration
parameter grows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError, NumericsError
from .kernel import InfectionKernel
from .quadrature import cumulative_trapezoid, history_weights, integrate_simpson, trapezoid_convolution

__all__ = [
    "MODE_FLOW",
    "MODE_DAILY",
    "IncidenceSeries",
    "CohortSet",
    "EpidemicTrajectory",
    "GenerationDecomposition",
    "solve_continuous",
    "solve_discrete",
    "lambda_of_t",
    "convolve",
    "generation_decomposition",
    "dirac_approx_flux",
    "day_binned",
    "write_incidence_csv",
    "read_incidence_csv",
]

MODE_FLOW = "flow"
MODE_DAILY = "daily"


@dataclass
class IncidenceSeries:
    """New-infection series on a uniform time grid.

    ``flow`` mode holds the instantaneous rate N(t0 + k*dt) in
    individuals/day; ``daily`` mode holds integer-day counts (dt = 1).
    """

    t0: float
    dt: float
    values: np.ndarray
    mode: str = MODE_FLOW

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or len(self.values) == 0:
            raise ConfigError("incidence values must form a non-empty 1-d array")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("incidence values must all be finite")
        if self.mode not in (MODE_FLOW, MODE_DAILY):
            raise ConfigError(f"unknown series mode {self.mode!r}")
        if self.mode == MODE_DAILY and self.dt != 1.0:
            raise ConfigError("daily-count series require dt = 1")
        if self.dt <= 0.0:
            raise ConfigError("dt must be positive")

    @classmethod
    def daily(cls, values, t0: float = 0.0) -> "IncidenceSeries":
        return cls(t0=t0, dt=1.0, values=np.asarray(values, dtype=float), mode=MODE_DAILY)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    def __len__(self) -> int:
        return len(self.values)

    def same_grid(self, other: "IncidenceSeries") -> bool:
        return (
            self.mode == other.mode
            and self.dt == other.dt
            and self.t0 == other.t0
            and len(self) == len(other)
        )


@dataclass(frozen=True)
class CohortSet:
    """Initial condition: point cohorts (age_j, size_j) at start time t0.

    Ages are days since infection at t0, strictly increasing; a single
    cohort at age 0 is the classic point-mass start.
    """

    cohorts: tuple[tuple[float, float], ...]
    t0: float = 0.0

    def __post_init__(self) -> None:
        if not self.cohorts:
            raise ConfigError("cohort set must contain at least one cohort")
        ages = [a for a, _ in self.cohorts]
        sizes = [s for _, s in self.cohorts]
        if any(a < 0.0 for a in ages):
            raise ConfigError("cohort ages must be non-negative")
        if any(b <= a for a, b in zip(ages, ages[1:])):
            raise ConfigError("cohort ages must be strictly increasing")
        if any(s <= 0.0 for s in sizes):
            raise ConfigError("cohort sizes must be positive")

    @classmethod
    def single(cls, i0: float, age: float = 0.0, t0: float = 0.0) -> "CohortSet":
        return cls(cohorts=((float(age), float(i0)),), t0=t0)

    @property
    def total(self) -> float:
        return sum(s for _, s in self.cohorts)

    def ages(self) -> np.ndarray:
        return np.array([a for a, _ in self.cohorts])

    def sizes(self) -> np.ndarray:
        return np.array([s for _, s in self.cohorts])


@dataclass
class EpidemicTrajectory:
    """Solver output: incidence flow, susceptibles, cumulative infections.

    The susceptible series always satisfies S = s0 - cumulative at every
    node by construction (so mass bookkeeping is exact); when the solver
    ran with frozen susceptibles, the *rate* used s0 throughout but the
    reported depletion is still tracked here.
    """

    incidence: IncidenceSeries
    susceptible: np.ndarray
    cumulative: np.ndarray
    s0: float

    @property
    def times(self) -> np.ndarray:
        return self.incidence.times

    def first_negative_time(self) -> float | None:
        """Earliest node with negative incidence, if any (never clamped)."""
        bad = np.nonzero(self.incidence.values < 0.0)[0]
        if len(bad) == 0:
            return None
        return float(self.times[bad[0]])

    def to_csv(self, path) -> None:
        """Write `t,N,S,cumulative` rows; times carry 6 decimal places."""
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["t", "N", "S", "cumulative"])
            for t, n, s, c in zip(
                self.times, self.incidence.values, self.susceptible, self.cumulative
            ):
                writer.writerow([f"{t:.6f}", repr(float(n)), repr(float(s)), repr(float(c))])


def _lambda_term(kernel: InfectionKernel, cohorts: CohortSet, elapsed: np.ndarray) -> np.ndarray:
    """Cohort pressure sum_j Gamma(elapsed + a_j) * I0_j / exp(-nu*a_j)."""
    ages = cohorts.ages()
    sizes = cohorts.sizes()
    out = np.zeros_like(elapsed, dtype=float)
    for a_j, i_j in zip(ages, sizes):
        out += kernel.gamma(elapsed + a_j) * (i_j / np.exp(-kernel.nu * a_j))
    return out


def lambda_of_t(kernel: InfectionKernel, cohorts: CohortSet, t):
    """Infectious individuals at time t among those infected before t0.

    Evaluates sum_j beta(t - t0 + a_j) * exp(-nu*(t - t0)) * I0_j.
    """
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tt < cohorts.t0):
        raise ValueError("t must not precede the cohort start time")
    elapsed = tt - cohorts.t0
    out = np.zeros_like(elapsed)
    for a_j, i_j in zip(cohorts.ages(), cohorts.sizes()):
        out += kernel.beta_values(elapsed + a_j) * np.exp(-kernel.nu * elapsed) * i_j
    return float(out[0]) if scalar else out


def solve_continuous(
    kernel: InfectionKernel,
    cohorts: CohortSet,
    horizon: float,
    dt: float,
    *,
    constant_s: bool = False,
) -> EpidemicTrajectory:
    """March the continuous model from the cohort initial condition.

    The convolution over the known history uses composite Simpson with a
    trapezoid patch when the node count does not fit Simpson's parity.
    With ``constant_s`` the transmission factor keeps S = s0 throughout
    (the early-epidemic linearization); depletion is still reported.

    Raises :class:`NumericsError` naming the first bad node if the march
    produces a non-finite value.
    """
    if dt <= 0.0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if horizon < dt:
        raise ConfigError(f"horizon must be at least one step, got {horizon} < {dt}")
    n_steps = int(round(horizon / dt))
    t0 = cohorts.t0

    ages = dt * np.arange(n_steps + 1)
    gamma = kernel.gamma(ages)
    lam = _lambda_term(kernel, cohorts, ages)

    tau = kernel.tau
    s0 = kernel.s0
    n = np.zeros(n_steps + 1)
    cum = np.zeros(n_steps + 1)

    n[0] = tau * s0 * lam[0]
    for k in range(1, n_steps + 1):
        m = k - 1
        w = history_weights(m, dt)
        # history term: sum_j w[j] * Gamma(j*dt) * N(t_k - j*dt); j = 0 is
        # the age-zero node, linear in the unknown N(t_k)
        known = float((w[1:] * gamma[1 : m + 1]) @ n[k - m : k][::-1]) if m >= 1 else 0.0
        s_prev = s0 if constant_s else s0 - cum[k - 1]
        scale = tau * s_prev
        denom = 1.0 - scale * w[0] * gamma[0]
        if not np.isfinite(denom) or denom <= 0.0:
            raise NumericsError(
                f"solver lost stability at t = {t0 + k * dt:.6f} (node {k}): "
                f"age-zero weight {scale * w[0] * gamma[0]:.3g} reached 1"
            )
        n[k] = scale * (lam[k] + known) / denom
        if not np.isfinite(n[k]):
            raise NumericsError(
                f"solver diverged at t = {t0 + k * dt:.6f} (node {k})"
            )
        cum[k] = cum[k - 1] + 0.5 * dt * (n[k - 1] + n[k])

    series = IncidenceSeries(t0=t0, dt=dt, values=n, mode=MODE_FLOW)
    return EpidemicTrajectory(
        incidence=series,
        susceptible=s0 - cum,
        cumulative=cum,
        s0=s0,
    )


def solve_discrete(
    r0: Sequence[float],
    i0: float,
    horizon_days: int,
    t0: float = 0.0,
) -> IncidenceSeries:
    """Exact day-by-day renewal recursion from a single day-zero cohort.

    N(t0) = R0(0)*I0 and each later day adds the cohort term plus the
    renewal sum over all earlier days; R0 entries past the end of the
    sequence count as zero.
    """
    r0 = np.asarray(r0, dtype=float)
    if r0.ndim != 1 or len(r0) == 0:
        raise ValueError("r0 must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(r0)) or np.any(r0 < 0.0):
        raise ValueError("r0 values must be finite and non-negative")
    if i0 <= 0.0:
        raise ValueError(f"i0 must be positive, got {i0}")
    if horizon_days < 0:
        raise ValueError("horizon_days must be non-negative")

    rr = np.zeros(horizon_days + 1)
    rr[: min(len(r0), horizon_days + 1)] = r0[: horizon_days + 1]
    n = np.zeros(horizon_days + 1)
    n[0] = rr[0] * i0
    for t in range(1, horizon_days + 1):
        n[t] = rr[t] * i0 + float(rr[1 : t + 1] @ n[:t][::-1])
    return IncidenceSeries.daily(n, t0=t0)


def convolve(u: IncidenceSeries, v: IncidenceSeries) -> IncidenceSeries:
    """(u*v)(t) = int_0^t u(a) v(t-a) da on the shared grid.

    Flow mode uses the trapezoid rule (exact for constants); daily mode
    is the exact discrete sum.  Commutative either way.
    """
    if not u.same_grid(v):
        raise ConfigError("convolution operands must share t0, dt, mode and length")
    if u.mode == MODE_DAILY:
        out = np.convolve(u.values, v.values)[: len(u)]
    else:
        out = trapezoid_convolution(u.values, v.values, u.dt)
    return IncidenceSeries(t0=u.t0, dt=u.dt, values=out, mode=u.mode)


@dataclass
class GenerationDecomposition:
    """Per-generation infection flows and their running partial sum."""

    series: list[IncidenceSeries]
    partial_sum: IncidenceSeries


def generation_decomposition(
    r0_samples: IncidenceSeries,
    i0: float,
    n_max: int,
    horizon: float,
) -> GenerationDecomposition:
    """Flows produced by generations 1..n_max: I0 times convolution powers.

    The n-th series is i0 * R0^{*(n)} on a grid extended to ``horizon``
    (R0 samples past their span count as zero).
    """
    if n_max < 1:
        raise ValueError(f"n_max must be at least 1, got {n_max}")
    dt = r0_samples.dt
    n_nodes = int(round(horizon / dt)) + 1
    padded = np.zeros(n_nodes)
    padded[: min(len(r0_samples), n_nodes)] = r0_samples.values[:n_nodes]
    base = IncidenceSeries(t0=r0_samples.t0, dt=dt, values=padded, mode=r0_samples.mode)

    series: list[IncidenceSeries] = []
    power = base
    for gen in range(1, n_max + 1):
        if gen > 1:
            power = convolve(power, base)
        series.append(
            IncidenceSeries(t0=base.t0, dt=dt, values=i0 * power.values, mode=base.mode)
        )
    total = np.sum([s.values for s in series], axis=0)
    return GenerationDecomposition(
        series=series,
        partial_sum=IncidenceSeries(t0=base.t0, dt=dt, values=total, mode=base.mode),
    )


def dirac_approx_flux(
    kernel: InfectionKernel,
    i0: float,
    kappa: float,
    t,
    t0: float = 0.0,
):
    """Cohort pressure when the day-zero cohort is smeared exponentially.

    Replaces the point initial age profile by i0 * kappa * exp(-kappa*a)
    and evaluates I0 * exp(-nu*(t-t0)) * int_0^inf beta(a + (t-t0)) *
    kappa * exp(-kappa*a) da by Simpson quadrature, truncating the tail
    at a = 40/kappa.  Converges to the point-cohort pressure as kappa
    grows.
    """
    if kappa <= 0.0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tt < t0):
        raise ValueError("t must not precede t0")

    n_intervals = 4096
    a_nodes = np.linspace(0.0, 40.0 / kappa, n_intervals + 1)
    density = kappa * np.exp(-kappa * a_nodes)
    step = a_nodes[1] - a_nodes[0]

    out = np.empty_like(tt)
    for i, t_i in enumerate(tt):
        elapsed = t_i - t0
        integrand = kernel.beta_values(a_nodes + elapsed) * density
        out[i] = i0 * np.exp(-kernel.nu * elapsed) * integrate_simpson(integrand, step)
    return float(out[0]) if scalar else out


def day_binned(series: IncidenceSeries) -> np.ndarray:
    """Per-day case counts from a flow series: trapezoid of N over [d, d+1).

    The step must divide one day; the trailing partial day, if any, is
    dropped.
    """
    if series.mode != MODE_FLOW:
        raise ConfigError("day_binned expects a continuous-flow series")
    per_day = 1.0 / series.dt
    if abs(per_day - round(per_day)) > 1e-9:
        raise ConfigError(f"step {series.dt} does not divide one day")
    per_day = int(round(per_day))
    n_days = (len(series.values) - 1) // per_day
    out = np.empty(n_days)
    for d in range(n_days):
        seg = series.values[d * per_day : (d + 1) * per_day + 1]
        out[d] = series.dt * (0.5 * (seg[0] + seg[-1]) + seg[1:-1].sum())
    return out


# ---------------------------------------------------------------------------
# plain incidence CSV (t,N)
# ---------------------------------------------------------------------------

def write_incidence_csv(series: IncidenceSeries, path) -> None:
    """Write a `t,N` file; times carry 6 decimal places."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "N"])
        for t, v in zip(series.times, series.values):
            writer.writerow([f"{t:.6f}", repr(float(v))])


def read_incidence_csv(path, mode: str = MODE_FLOW) -> IncidenceSeries:
    """Read a series from a headered CSV with `t` and `N` columns.

    Trajectory files work too (extra columns are ignored).  The time grid
    must be uniform.
    """
    path = Path(path)
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "t" not in reader.fieldnames or "N" not in reader.fieldnames:
            raise DataError(f"{path}: expected a CSV header with 't' and 'N' columns")
        times: list[float] = []
        values: list[float] = []
        for row in reader:
            try:
                times.append(float(row["t"]))
                values.append(float(row["N"]))
            except (TypeError, ValueError):
                raise DataError(f"{path}: non-numeric entry in row {reader.line_num}") from None
    if len(times) == 0:
        raise DataError(f"{path}: no data rows")
    if len(times) == 1:
        return IncidenceSeries(t0=times[0], dt=1.0, values=np.array(values), mode=mode)
    steps = np.diff(times)
    dt = float(steps[0])
    if dt <= 0.0 or not np.allclose(steps, dt, rtol=1e-6, atol=1e-9):
        raise DataError(f"{path}: time grid is not uniform")
    if mode == MODE_DAILY:
        dt = 1.0
    return IncidenceSeries(t0=times[0], dt=dt, values=np.array(values), mode=mode)
