"""Delay and distribution-comparison statistics shared by the CLI and tests."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .markov import StationaryDistribution

_NORM_TOL = 1e-6


def little_delay(mean_queue_bits: float, arrival_bits_per_slot: float) -> float:
    """Mean delay in slots: time-average queue over arrival rate."""
    if arrival_bits_per_slot <= 0:
        raise ValueError("arrival rate must be positive")
    return mean_queue_bits / arrival_bits_per_slot


@dataclass(frozen=True)
class DistributionComparison:
    """Distance between an empirical pmf and a (truncated) theoretical one."""

    tv_distance: float
    ks_like_sup: float
    support_truncation: str


def _pmf_and_tail(dist) -> tuple[np.ndarray, float]:
    if isinstance(dist, StationaryDistribution):
        return np.asarray(dist.pi, dtype=float), float(dist.tail_bound)
    return np.asarray(dist, dtype=float), 0.0


def compare_distributions(empirical, theoretical) -> DistributionComparison:
    """Fold both pmfs onto the union support and measure TV / sup-cdf gaps.

    The theoretical tail mass beyond its truncation is folded into the
    last bin of the union support. Both inputs must be normalized within
    1e-6.
    """
    emp, emp_tail = _pmf_and_tail(empirical)
    theo, theo_tail = _pmf_and_tail(theoretical)
    if abs(emp.sum() + emp_tail - 1.0) > _NORM_TOL:
        raise ValueError(f"empirical pmf not normalized: sums to {emp.sum() + emp_tail}")
    if abs(theo.sum() + theo_tail - 1.0) > _NORM_TOL:
        raise ValueError(f"theoretical pmf not normalized: sums to {theo.sum() + theo_tail}")
    n = max(len(emp), len(theo))
    a = np.zeros(n)
    b = np.zeros(n)
    a[: len(emp)] = emp
    b[: len(theo)] = theo
    a[-1] += emp_tail
    b[-1] += theo_tail
    tv = 0.5 * float(np.abs(a - b).sum())
    ks = float(np.abs(np.cumsum(a) - np.cumsum(b)).max())
    note = f"union support 0..{n - 1}, tail mass folded into the last bin"
    return DistributionComparison(tv_distance=tv, ks_like_sup=ks, support_truncation=note)


def tv_distance(empirical, theoretical) -> float:
    """Half the L1 distance between two pmfs on the folded union support."""
    return compare_distributions(empirical, theoretical).tv_distance
