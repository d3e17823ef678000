"""Reconstruction of the daily reproduction number from incidence data.

Both reconstruction paths invert the renewal structure by marching in
the age of infection: the day-by-day path is exact algebra, and the
continuous path discretizes the second-kind Volterra equation

    R0(a) = N(a+t0)/I0 - (1/I0) * int_0^a R0(s) N(a-s+t0) ds

with the same Simpson-plus-trapezoid history rule the forward solver
uses.  The age-a quadrature node pairs the unknown R0(a) with N(t0), a
linear coupling that is solved directly, so the march needs no
iteration and inverts the day-by-day model exactly even when N(t0) > 0.

Negative reconstructed values are kept and flagged, never truncated:
they are the fingerprint of a wrong initial cohort size or imperfect
data.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError
from .forward import MODE_DAILY, MODE_FLOW, IncidenceSeries
from .quadrature import history_weights, integrate_simpson

__all__ = [
    "ReconstructionResult",
    "reconstruct_discrete",
    "reconstruct_continuous",
    "reconstruct_gamma",
    "analytic_exponential_decay",
    "analytic_latency",
    "nonidentifiable_family",
]


@dataclass
class ReconstructionResult:
    """Reconstructed R0(a) curve plus negativity diagnostics."""

    ages: np.ndarray
    r0: np.ndarray
    i0: float
    mode: str  # "continuous" or "discrete"

    @property
    def first_negative_age(self) -> float | None:
        """Earliest age with strictly negative R0, if any."""
        bad = np.nonzero(self.r0 < 0.0)[0]
        if len(bad) == 0:
            return None
        return float(self.ages[bad[0]])

    @property
    def n_negative(self) -> int:
        return int(np.count_nonzero(self.r0 < 0.0))

    def to_csv(self, path) -> None:
        """Write `a,R0` rows."""
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["a", "R0"])
            for a, r in zip(self.ages, self.r0):
                writer.writerow([f"{a:.6f}", repr(float(r))])

    def to_json(self, path) -> None:
        payload = {
            "a": [float(a) for a in self.ages],
            "R0": [float(r) for r in self.r0],
            "diagnostics": {
                "i0": float(self.i0),
                "mode": self.mode,
                "first_negative_age": self.first_negative_age,
                "n_negative": self.n_negative,
            },
        }
        with open(path, "w") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")


def reconstruct_discrete(n: IncidenceSeries, i0: float) -> ReconstructionResult:
    """Invert the day-by-day renewal recursion exactly.

    Feeding the result back into the discrete forward model reproduces
    the input counts to round-off, including when N(t0) > 0 (the day-a
    term couples R0(a) with N(t0) and is solved algebraically).
    """
    if i0 <= 0.0:
        raise ValueError(f"i0 must be positive, got {i0}")
    if n.mode != MODE_DAILY:
        raise ConfigError("reconstruct_discrete expects a daily-count series")
    counts = n.values
    length = len(counts)
    r = np.zeros(length)
    r[0] = counts[0] / i0
    denom = i0 + counts[0]
    for a in range(1, length):
        acc = float(r[1:a] @ counts[a - 1 : 0 : -1]) if a >= 2 else 0.0
        r[a] = (counts[a] - acc) / denom
    return ReconstructionResult(
        ages=np.arange(length, dtype=float), r0=r, i0=float(i0), mode="discrete"
    )


def _march_second_kind(b: np.ndarray, n_values: np.ndarray, i0: float, dt: float) -> np.ndarray:
    """Solve x(a_k)*i0 = b_k - sum_j w_j x_j N_{k-j} by marching in k."""
    length = len(b)
    x = np.zeros(length)
    x[0] = b[0] / i0
    for k in range(1, length):
        w = history_weights(k, dt)
        acc = float((w[:k] * x[:k]) @ n_values[1 : k + 1][::-1])
        x[k] = (b[k] - acc) / (i0 + w[k] * n_values[0])
    return x


def reconstruct_continuous(n: IncidenceSeries, i0: float) -> ReconstructionResult:
    """Invert the continuous renewal equation for R0(a).

    Valid while the transmission rate and susceptible pool are constant
    (the early-epidemic regime); their product is absorbed into R0, so
    only the incidence flow and the initial cohort size are needed.
    """
    if i0 <= 0.0:
        raise ValueError(f"i0 must be positive, got {i0}")
    if n.mode != MODE_FLOW:
        raise ConfigError("reconstruct_continuous expects a continuous-flow series")
    r = _march_second_kind(n.values, n.values, float(i0), n.dt)
    ages = n.dt * np.arange(len(n.values))
    return ReconstructionResult(ages=ages, r0=r, i0=float(i0), mode="continuous")


def reconstruct_gamma(n: IncidenceSeries, i0: float, tau_s) -> np.ndarray:
    """General path: recover Gamma(a) when tau(t)*S(t) is supplied.

    ``tau_s`` is a scalar or a per-node series of the product
    tau(t) * S(t); it must stay positive.  With a constant product this
    is just the R0 reconstruction divided by it.
    """
    if i0 <= 0.0:
        raise ValueError(f"i0 must be positive, got {i0}")
    if n.mode != MODE_FLOW:
        raise ConfigError("reconstruct_gamma expects a continuous-flow series")
    tau_s = np.broadcast_to(np.asarray(tau_s, dtype=float), n.values.shape)
    if np.any(tau_s <= 0.0):
        raise ValueError("tau(t)*S(t) must stay positive over the reconstruction window")
    return _march_second_kind(n.values / tau_s, n.values, float(i0), n.dt)


# ---------------------------------------------------------------------------
# closed-form reference curves
# ---------------------------------------------------------------------------

def analytic_exponential_decay(chi1: float, chi2: float) -> Callable:
    """R0 curve matching incidence N(t) = chi1 * I0 * exp(-chi2*(t-t0)).

    Returns a -> chi1 * exp(-(chi1+chi2)*a).
    """
    if chi1 <= 0.0:
        raise ValueError(f"chi1 must be positive, got {chi1}")

    def r0(a):
        return chi1 * np.exp(-(chi1 + chi2) * np.asarray(a, dtype=float))

    return r0


def analytic_latency(chi1: float, chi2: float, a1: float) -> Callable:
    """R0 curve for incidence that stays zero until a latency a1.

    Zero before a1, then chi3 * exp(-(chi1+chi2)*a) with
    chi3 = chi1 * exp(chi1*a1).  The boundary point carries the decaying
    branch so a1 = 0 reduces exactly to the no-latency curve.
    """
    if chi1 <= 0.0:
        raise ValueError(f"chi1 must be positive, got {chi1}")
    if a1 < 0.0:
        raise ValueError(f"a1 must be non-negative, got {a1}")
    chi3 = chi1 * np.exp(chi1 * a1)

    def r0(a):
        a = np.asarray(a, dtype=float)
        out = np.where(a < a1, 0.0, chi3 * np.exp(-(chi1 + chi2) * a))
        return out if out.ndim else float(out)

    return r0


def nonidentifiable_family(lam: float, chi: Callable, a_plus: float) -> Callable:
    """A reproduction-number curve consistent with pure exponential data.

    Any shape chi supported on [0, a_plus], rescaled by the integral of
    chi(s)*exp(-lam*s), satisfies the asymptotic characteristic equation
    for growth rate lam — so exponential-phase incidence alone cannot
    single out R0(a).  Distinct shapes yield distinct, equally valid
    curves.
    """
    if a_plus <= 0.0:
        raise ValueError(f"a_plus must be positive, got {a_plus}")
    n_intervals = 8192
    nodes = np.linspace(0.0, a_plus, n_intervals + 1)
    samples = np.asarray(chi(nodes), dtype=float)
    if np.any(samples < -1e-12):
        raise ValueError("chi must be non-negative on [0, a_plus]")
    normalizer = integrate_simpson(samples * np.exp(-lam * nodes), nodes[1] - nodes[0])
    if normalizer <= 0.0:
        raise ValueError("chi must be non-null on [0, a_plus]")

    def r0(a):
        a = np.asarray(a, dtype=float)
        out = np.where(a < a_plus, np.asarray(chi(a), dtype=float) / normalizer, 0.0)
        return out if out.ndim else float(out)

    return r0
