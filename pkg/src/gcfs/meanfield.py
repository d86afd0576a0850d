"""Mean-field analysis of the good-channel-first downlink.

In the large-population limit every user is served independently with a
fixed probability p = G(h_th), where the gain threshold h_th balances the
deliverable bits per slot against the total arrival load. This module
computes the capacity curve, solves the balance equation by bisection and
derives the predicted queue and delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from scipy import integrate

from .errors import NumericError
from .models import ChannelModel, SystemParams, TrafficModel, mean_arrival_bits, rate_bits_per_symbol

_TAIL_EPS = 1e-12   # survival mass below which improper integrals are split
_QUAD_REL = 1e-10
_BRACKET_TAIL = 1e-6  # initial upper bracket for unbounded supports


class Stability(str, Enum):
    OVER_PROVISIONED = "OverProvisioned"
    BALANCED = "Balanced"
    UNSTABLE = "Unstable"


@dataclass(frozen=True)
class MeanFieldSolution:
    """Threshold, service probability and predicted delay of one user.

    ``service_prob``, ``mean_queue_bits`` and ``delay_slots`` are ``None``
    when the system is unstable; ``deficit`` then reports how many
    arrival bits per slot exceed the capacity supremum.
    """

    threshold_gain: float
    service_prob: float | None
    mean_queue_bits: float | None
    delay_slots: float | None
    status: Stability
    residual: float
    phi_supremum: float
    deficit: float | None = None


def phi(channel: ChannelModel, snr: float, symbols_per_slot: float, threshold: float) -> float:
    """Mean bits per slot deliverable to a served user.

    Evaluates B * E[log2(1 + h^2 snr) | h > threshold] by adaptive
    quadrature; for unbounded supports the integral is split where the
    survival function drops below 1e-12 and the remainder integrated to
    infinity. Non-decreasing in the threshold.
    """
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    if snr <= 0 or symbols_per_slot <= 0:
        raise ValueError("snr and symbol budget must be positive")
    if threshold >= channel.h_sup:
        raise ValueError("threshold at or beyond the support supremum: no user is ever served")
    g = float(channel.tail(threshold))
    if not g > 0:
        raise ValueError(f"survival function vanishes at threshold {threshold}")

    def integrand(h):
        return float(channel.pdf(h)) * math.log2(1.0 + h * h * snr)

    if math.isinf(channel.h_sup):
        cut = channel.tail_quantile(_TAIL_EPS)
        if cut > threshold:
            main, _ = integrate.quad(integrand, threshold, cut, epsabs=0.0, epsrel=_QUAD_REL, limit=200)
        else:
            main, cut = 0.0, threshold
        tail, _ = integrate.quad(
            integrand, cut, math.inf,
            epsabs=max(abs(main), 1e-300) * _QUAD_REL, epsrel=_QUAD_REL, limit=200,
        )
        total = main + tail
    else:
        total, _ = integrate.quad(integrand, threshold, channel.h_sup, epsabs=0.0, epsrel=_QUAD_REL, limit=200)
    return symbols_per_slot * total / g


def phi_sup(channel: ChannelModel, snr: float, symbols_per_slot: float) -> float:
    """Supremum of the capacity curve; infinite for unbounded supports."""
    if math.isinf(channel.h_sup):
        return math.inf
    return symbols_per_slot * rate_bits_per_symbol(channel.h_sup, snr)


def predicted_delay(service_prob: float) -> float:
    """Mean queueing delay in slots, 1/p - 1, of a user served w.p. p."""
    if not 0.0 < service_prob <= 1.0:
        raise ValueError(
            f"service probability must lie in (0, 1], got {service_prob} (unstable system)"
        )
    return 1.0 / service_prob - 1.0


def solve_threshold(
    channel: ChannelModel,
    traffic: TrafficModel,
    system: SystemParams,
    eps_solve: float | None = None,
    max_iter: int = 10_000,
) -> MeanFieldSolution:
    """Balance deliverable bits per slot against the total arrival load.

    Three regimes: if the zero-threshold capacity already covers the load
    the system is over-provisioned (everyone served, zero delay); if even
    the capacity supremum cannot, it is unstable and the deficit is
    reported; otherwise the monotone capacity curve is bisected until it
    matches the load within ``eps_solve`` (default 1e-6 relative).
    """
    lam = mean_arrival_bits(traffic)
    if not lam > 0:
        raise ValueError("mean-field analysis needs a positive arrival rate")
    target = system.n_users * lam
    if eps_solve is None:
        eps_solve = 1e-6 * target
    if not eps_solve > 0:
        raise ValueError("eps_solve must be positive")
    snr = system.snr
    budget = system.symbols_per_slot
    sup = phi_sup(channel, snr, budget)

    phi_zero = phi(channel, snr, budget, 0.0)
    if phi_zero >= target:
        return MeanFieldSolution(
            threshold_gain=0.0, service_prob=1.0, mean_queue_bits=0.0, delay_slots=0.0,
            status=Stability.OVER_PROVISIONED, residual=abs(phi_zero - target),
            phi_supremum=sup,
        )
    if sup <= target:
        return MeanFieldSolution(
            threshold_gain=channel.h_sup, service_prob=None, mean_queue_bits=None,
            delay_slots=None, status=Stability.UNSTABLE, residual=target - sup,
            phi_supremum=sup, deficit=target - sup,
        )

    lo = 0.0
    if math.isinf(channel.h_sup):
        hi = channel.tail_quantile(_BRACKET_TAIL)
        for _ in range(200):
            if phi(channel, snr, budget, hi) > target:
                break
            lo = hi
            hi *= 2.0
            if not channel.tail(hi) > 0:
                # capacity still short where the survival function underflows:
                # the balance point is not representable in double precision
                raise NumericError(
                    f"deliverable bits stay below the load {target} for every "
                    f"representable threshold (reached gain {lo}); treat as unstable"
                )
        else:
            raise NumericError(f"failed to bracket the balance point above gain {lo}")
    else:
        hi = channel.h_sup

    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        value = phi(channel, snr, budget, mid)
        if abs(value - target) <= eps_solve:
            p = float(channel.tail(mid))
            delay = predicted_delay(p)
            return MeanFieldSolution(
                threshold_gain=mid, service_prob=p, mean_queue_bits=lam * delay,
                delay_slots=delay, status=Stability.BALANCED,
                residual=abs(value - target), phi_supremum=sup,
            )
        if value > target:
            hi = mid
        else:
            lo = mid
        mid = 0.5 * (lo + hi)
    raise NumericError(
        f"bisection did not reach tolerance {eps_solve} within {max_iter} iterations; "
        f"final bracket [{lo}, {hi}]"
    )
