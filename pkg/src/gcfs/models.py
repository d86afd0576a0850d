"""Physical-layer and traffic primitives for the shared downlink.

Conventions used throughout the package: channel gains are dimensionless
magnitudes, rates are bits per channel symbol (base-2 logarithm), queue
lengths and packet sizes are bits.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import interpolate


def rate_bits_per_symbol(gain, snr):
    """Spectral efficiency log2(1 + gain^2 * snr) for scalar or array gains."""
    if snr <= 0:
        raise ValueError(f"snr must be positive, got {snr}")
    g = np.asarray(gain, dtype=float)
    if np.any(g < 0):
        raise ValueError("channel gain must be nonnegative")
    out = np.log2(1.0 + g * g * snr)
    return float(out) if out.ndim == 0 else out


class ChannelModel:
    """Distribution of a user's per-slot channel gain magnitude.

    Concrete models supply the density, cdf, survival function and an
    i.i.d. sampler; ``h_sup`` is the supremum of the support (``inf`` for
    unbounded fading). Models are immutable after construction and
    samplers draw from an explicit generator, so concurrent callers with
    distinct generators never interact.
    """

    h_sup: float = math.inf

    def pdf(self, gain):
        raise NotImplementedError

    def cdf(self, gain):
        raise NotImplementedError

    def tail(self, gain):
        """Survival function G = 1 - F."""
        return 1.0 - self.cdf(gain)

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def tail_quantile(self, prob: float) -> float:
        """Gain at which the survival function drops to `prob`.

        Generic bisection on the monotone tail; subclasses with a closed
        form override this.
        """
        if not 0.0 < prob < 1.0:
            raise ValueError("tail probability must lie in (0, 1)")
        hi = 1.0 if math.isinf(self.h_sup) else self.h_sup
        while self.tail(hi) > prob:
            hi *= 2.0
            if hi > 1e300:
                raise ValueError("tail quantile diverged")
        lo = 0.0
        while hi - lo > 1e-13 * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if self.tail(mid) > prob:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


class RayleighChannel(ChannelModel):
    """Unit-scale Rayleigh magnitude: density h * exp(-h^2 / 2) on h >= 0."""

    h_sup = math.inf

    def pdf(self, gain):
        g = np.asarray(gain, dtype=float)
        out = np.where(g >= 0, g * np.exp(-0.5 * g * g), 0.0)
        return float(out) if out.ndim == 0 else out

    def cdf(self, gain):
        g = np.asarray(gain, dtype=float)
        out = np.where(g > 0, -np.expm1(-0.5 * g * g), 0.0)
        return float(out) if out.ndim == 0 else out

    def tail(self, gain):
        g = np.asarray(gain, dtype=float)
        out = np.where(g > 0, np.exp(-0.5 * g * g), 1.0)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng, size=None):
        return rng.rayleigh(1.0, size)

    def tail_quantile(self, prob):
        if not 0.0 < prob < 1.0:
            raise ValueError("tail probability must lie in (0, 1)")
        return math.sqrt(-2.0 * math.log(prob))


@dataclass(frozen=True)
class UniformChannel(ChannelModel):
    """Gains uniform on [0, h_sup]; the bounded support exercises the
    capacity-saturation and instability paths."""

    h_sup: float

    def __post_init__(self):
        if not self.h_sup > 0:
            raise ValueError("h_sup must be positive")

    def pdf(self, gain):
        g = np.asarray(gain, dtype=float)
        inside = (g >= 0) & (g <= self.h_sup)
        out = np.where(inside, 1.0 / self.h_sup, 0.0)
        return float(out) if out.ndim == 0 else out

    def cdf(self, gain):
        g = np.asarray(gain, dtype=float)
        out = np.clip(g / self.h_sup, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng, size=None):
        return rng.uniform(0.0, self.h_sup, size)

    def tail_quantile(self, prob):
        if not 0.0 < prob < 1.0:
            raise ValueError("tail probability must lie in (0, 1)")
        return self.h_sup * (1.0 - prob)


class TabulatedChannel(ChannelModel):
    """Channel gain density given as (gain, density) samples.

    The density is interpolated with a shape-preserving monotone cubic,
    renormalized to unit mass, and integrated exactly (piecewise) for the
    cdf. Sampling inverts the cdf on a dense grid. The support is the
    sampled gain range, so ``h_sup`` is always finite.
    """

    _INV_GRID = 4097

    def __init__(self, gains, densities):
        g = np.asarray(gains, dtype=float)
        d = np.asarray(densities, dtype=float)
        if g.ndim != 1 or g.shape != d.shape or g.size < 4:
            raise ValueError("need matching 1-D gain/density arrays with at least 4 points")
        if np.any(np.diff(g) <= 0):
            raise ValueError("gain grid must be strictly increasing")
        if g[0] < 0:
            raise ValueError("gains must be nonnegative")
        if np.any(d < 0):
            raise ValueError("densities must be nonnegative")
        density = interpolate.PchipInterpolator(g, d, extrapolate=False)
        mass = density.antiderivative()
        total = float(mass(g[-1]) - mass(g[0]))
        if not total > 0:
            raise ValueError("tabulated density carries no mass")
        self._density = density
        self._mass = mass
        self._total = total
        self._lo = float(g[0])
        self.h_sup = float(g[-1])
        grid = np.linspace(self._lo, self.h_sup, self._INV_GRID)
        u = (mass(grid) - mass(self._lo)) / total
        u = np.maximum.accumulate(np.clip(u, 0.0, 1.0))
        u[0], u[-1] = 0.0, 1.0
        self._inv_u = u
        self._inv_h = grid

    @classmethod
    def from_csv(cls, path):
        """Load a two-column (gain, density) CSV; a header row is skipped."""
        gains, densities = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                try:
                    h, f = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if not gains:  # header line
                        continue
                    raise ValueError(f"malformed tabulated-channel row: {row!r}")
                gains.append(h)
                densities.append(f)
        return cls(gains, densities)

    def pdf(self, gain):
        g = np.asarray(gain, dtype=float)
        out = np.nan_to_num(self._density(g), nan=0.0) / self._total
        out = np.maximum(out, 0.0)
        return float(out) if out.ndim == 0 else out

    def cdf(self, gain):
        g = np.asarray(gain, dtype=float)
        clipped = np.clip(g, self._lo, self.h_sup)
        out = (self._mass(clipped) - self._mass(self._lo)) / self._total
        out = np.clip(out, 0.0, 1.0)
        out = np.where(g < self._lo, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def sample(self, rng, size=None):
        return np.interp(rng.random(size), self._inv_u, self._inv_h)


@dataclass(frozen=True)
class TrafficModel:
    """Packet arrivals per slot: pmf over counts 0..A plus bits per packet.

    The last pmf entry must be positive so the vector length reflects the
    true maximum burst. The degenerate no-traffic model ``theta=(1,)`` is
    accepted for simulator edge cases; analysis entry points that divide
    by the load reject zero-rate traffic themselves.
    """

    theta: tuple[float, ...]
    packet_bits: float = 1.0

    def __post_init__(self):
        theta = tuple(float(x) for x in self.theta)
        object.__setattr__(self, "theta", theta)
        if len(theta) < 1:
            raise ValueError("arrival pmf must not be empty")
        if any(x < 0 for x in theta):
            raise ValueError("arrival pmf entries must be nonnegative")
        total = sum(theta)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"arrival pmf must sum to 1, got {total}")
        if len(theta) > 1 and not theta[-1] > 0:
            raise ValueError(
                "arrival pmf ends in zero: shorten it so the length matches the true maximum burst"
            )
        if not self.packet_bits > 0:
            raise ValueError("packet_bits must be positive")

    @property
    def max_packets(self) -> int:
        return len(self.theta) - 1

    @property
    def mean_packets(self) -> float:
        return sum(a * t for a, t in enumerate(self.theta))

    @property
    def mean_bits(self) -> float:
        return self.packet_bits * self.mean_packets


def mean_arrival_bits(traffic: TrafficModel) -> float:
    """Average number of bits entering one user's buffer per slot."""
    return traffic.mean_bits


def sample_arrivals(traffic: TrafficModel, rng: np.random.Generator, size=None):
    """Draw i.i.d. packet counts from the arrival pmf (inverse-cdf method).

    Deterministic given the generator state; pass ``size`` for a vector
    of draws, otherwise a single int is returned.
    """
    cum = np.cumsum(traffic.theta)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, rng.random(size), side="right")
    return int(idx) if size is None else idx


@dataclass(frozen=True)
class SystemParams:
    """Shared-link dimensioning: population, symbol budget and link budget."""

    n_users: int
    bandwidth: float        # channel symbols per second
    slot_duration: float    # seconds per slot
    power: float            # constant transmit power
    noise_power: float      # receiver noise power

    def __post_init__(self):
        if self.n_users < 1:
            raise ValueError("n_users must be at least 1")
        for name in ("bandwidth", "slot_duration", "power", "noise_power"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def snr(self) -> float:
        return self.power / self.noise_power

    @property
    def symbols_per_slot(self) -> float:
        """Channel symbols available per slot (bandwidth x slot duration)."""
        return self.bandwidth * self.slot_duration
