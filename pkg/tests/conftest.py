"""Shared oracle helpers.

These deliberately use different numerics than the library: cumulative
trapezoid grids instead of adaptive quadrature, dense permutation
search instead of the greedy planner, Fraction arithmetic instead of
floats. They stay independent of the code paths they check.
"""

from fractions import Fraction

import numpy as np


def grid_phi_scan(channel, snr, budget, n_points, upper=None):
    """Capacity curve on a dense gain grid via cumulative trapezoid.

    Returns (grid, phi_values); entries where the survival function is
    too small to divide by are NaN.
    """
    if upper is None:
        upper = channel.h_sup if np.isfinite(channel.h_sup) else channel.tail_quantile(1e-12)
    grid = np.linspace(0.0, upper, n_points)
    integrand = channel.pdf(grid) * np.log2(1.0 + grid * grid * snr)
    panel = 0.5 * (integrand[1:] + integrand[:-1]) * np.diff(grid)
    above = np.concatenate([[panel.sum()], panel.sum() - np.cumsum(panel)])
    tails = np.asarray(channel.tail(grid), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(tails > 1e-300, budget * above / tails, np.nan)
    return grid, values


def grid_root(grid, values, target):
    """First grid point where the monotone curve crosses the target."""
    above = values >= target
    idx = int(np.argmax(above))
    if not above[idx]:
        raise AssertionError("target not bracketed by the grid scan")
    return grid[idx]


def exact_fill_bits(order, demand, rates, budget):
    """Total bits served by the greedy whole-buffer-then-partial rule,
    evaluated exactly in Fraction arithmetic for a given serving order."""
    budget = Fraction(budget)
    left = budget
    total = Fraction(0)
    for user in order:
        d = Fraction(demand[user])
        r = Fraction(rates[user])
        need = d / r
        if need <= left:
            total += d
            left -= need
        else:
            total += left * r
            left = Fraction(0)
            break
    return total


def empirical_ks(samples, cdf):
    """Kolmogorov-Smirnov statistic of samples against a cdf callable."""
    xs = np.sort(np.asarray(samples))
    n = len(xs)
    theo = np.asarray(cdf(xs), dtype=float)
    lo = np.arange(n) / n
    hi = np.arange(1, n + 1) / n
    return float(max(np.abs(theo - lo).max(), np.abs(hi - theo).max()))
