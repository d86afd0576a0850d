"""Single-user queue chain induced by threshold service.

Each slot the buffer either gains a batch of packets (user not served)
or is cleared entirely (served, probability p). The resulting
discrete-state chain is solved three ways: a geometric closed form for
single-packet arrivals, a characteristic-root expansion of the linear
difference equation satisfied by the complementary cumulative
probabilities, and a direct linear solve of the truncated transition
matrix that acts as the independent oracle for the other two.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import NumericError, UnstableChainError
from .models import TrafficModel

_ROOT_EDGE = 1e-12   # modes with |root| >= 1 - _ROOT_EDGE are not summable
_ROOT_CLUSTER = 1e-7
_TRUNC_CAP = 1_000_000


@dataclass(frozen=True)
class ChainParams:
    """Arrival pmf and per-slot full-service probability of one user.

    Plain arithmetic throughout, so exact types (``fractions.Fraction``)
    may be used for the probabilities.
    """

    theta: tuple
    service_prob: float

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(self.theta))
        if len(self.theta) < 2:
            raise ValueError("chain needs an arrival pmf over at least {0, 1} packets")
        if any(x < 0 for x in self.theta):
            raise ValueError("arrival pmf entries must be nonnegative")
        if abs(float(sum(self.theta)) - 1.0) > 1e-9:
            raise ValueError("arrival pmf must sum to 1")
        if not 0 < self.service_prob <= 1:
            raise ValueError("service probability must lie in (0, 1]")

    @property
    def max_packets(self) -> int:
        return len(self.theta) - 1

    @property
    def lead_coeff(self):
        """Coefficient of the highest-index term of the difference equation."""
        miss = 1 - self.service_prob
        return self.service_prob + (1 - self.theta[0]) * miss

    @property
    def low_coeffs(self) -> tuple:
        """Coefficients of the A lower-index terms, ordered by offset 0..A-1."""
        miss = 1 - self.service_prob
        a_max = self.max_packets
        return tuple(self.theta[a_max - j] * miss for j in range(a_max))


def transition_prob(i: int, j: int, params: ChainParams):
    """One-step transition probability of the post-service packet count.

    Five branches: stay empty (no arrivals, or arrivals served at once),
    hold (backlogged and unserved with no arrivals), grow by a batch
    (unserved), reset to zero (served), otherwise impossible. Written in
    the caller's arithmetic, so row sums are exact with Fractions.
    """
    if i < 0 or j < 0:
        raise ValueError("states must be nonnegative")
    theta = params.theta
    p = params.service_prob
    if i == 0 and j == 0:
        return theta[0] + (1 - theta[0]) * p
    if i > 0 and j == 0:
        return p
    if i == j:
        return theta[0] * (1 - p)
    batch = j - i
    if 1 <= batch <= params.max_packets:
        return theta[batch] * (1 - p)
    return 0


def boundary_chi(params: ChainParams) -> tuple:
    """First A complementary cumulative probabilities chi_0..chi_{A-1}.

    These seed the linear difference equation; chi_0 is identically 1 and
    the rest follow from cut balance below the largest batch size.
    """
    a_max = params.max_packets
    p = params.service_prob
    miss = 1 - p
    theta = params.theta
    denom = params.lead_coeff
    chi = [1]
    for i in range(1, a_max):
        acc = chi[0] * sum(theta[k] for k in range(i, a_max + 1)) * miss
        acc += sum(chi[j] * theta[i - j] for j in range(1, i)) * miss
        chi.append(acc / denom)
    return tuple(chi)


@dataclass(frozen=True)
class StationaryDistribution:
    """Truncated stationary pmf over packet counts with a tail certificate.

    ``pi[i]`` is the probability of i packets for i <= K; ``tail_bound``
    bounds the mass beyond K.
    """

    pi: np.ndarray
    tail_bound: float

    @property
    def truncation(self) -> int:
        return len(self.pi) - 1

    @property
    def chi(self) -> np.ndarray:
        """Complementary cumulative probabilities over the kept states."""
        return np.cumsum(self.pi[::-1])[::-1]

    def mean(self) -> float:
        return float(np.arange(len(self.pi)) @ self.pi)

    def to_csv(self, path) -> None:
        """Two-column (state, probability) export at full precision."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state", "probability"])
            for i, value in enumerate(self.pi):
                writer.writerow([i, repr(float(value))])


def default_truncation(max_packets: int, service_prob: float) -> int:
    # geometric-type tails decay roughly once per A states at rate 1-p
    return max(200, math.ceil(50 * max_packets / service_prob))


def steady_state_closed_form_A1(theta1, service_prob, truncation: int | None = None) -> StationaryDistribution:
    """Geometric stationary law of the single-packet-arrival chain."""
    if service_prob <= 0:
        raise UnstableChainError("service probability 0: the queue never drains")
    if not service_prob <= 1:
        raise ValueError("service probability must lie in (0, 1]")
    if not 0 < theta1 <= 1:
        raise ValueError("arrival probability must lie in (0, 1]")
    p = float(service_prob)
    t1 = float(theta1)
    pi0 = p / (p * (1.0 - t1) + t1)
    if truncation is None:
        truncation = default_truncation(1, p)
    states = np.arange(truncation + 1)
    pi = pi0 * (1.0 - pi0) ** states
    tail = (1.0 - pi0) ** (truncation + 1)
    return StationaryDistribution(pi=pi, tail_bound=float(tail))


def _delta_at_zero(truncation: int) -> StationaryDistribution:
    pi = np.zeros(truncation + 1)
    pi[0] = 1.0
    return StationaryDistribution(pi=pi, tail_bound=0.0)


def _effective_params(params: ChainParams) -> ChainParams | None:
    """Strip trailing zero arrival probabilities; None if arrivals never occur."""
    theta = list(params.theta)
    while len(theta) > 1 and theta[-1] == 0:
        theta.pop()
    if len(theta) == 1:
        return None
    return ChainParams(theta=tuple(theta), service_prob=params.service_prob)


def _clustered_roots(roots: np.ndarray) -> list[tuple[complex, int]]:
    groups: list[list[complex]] = []
    for r in sorted(roots, key=lambda z: (z.real, z.imag)):
        for grp in groups:
            if abs(r - grp[0]) <= _ROOT_CLUSTER:
                grp.append(r)
                break
        else:
            groups.append([r])
    return [(complex(np.mean(grp)), len(grp)) for grp in groups]


def _root_basis(groups: list[tuple[complex, int]], indices: np.ndarray) -> np.ndarray:
    """Columns i^s * r^i for each root r with multiplicity s = 0..m-1."""
    cols = []
    idx = indices.astype(float)
    for root, mult in groups:
        powers = np.power(root, indices)
        for s in range(mult):
            cols.append(idx**s * powers)
    return np.column_stack(cols)


def steady_state_roots(params: ChainParams, truncation: int | None = None) -> StationaryDistribution:
    """Solve the chain through the roots of its characteristic polynomial.

    The complementary cumulative probabilities satisfy a constant-
    coefficient linear difference equation; all of its characteristic
    roots lie strictly inside the unit circle, so the solution is the
    combination of decaying root powers (with polynomial-in-i factors for
    repeated roots) fitted to the boundary values. The tail bound is the
    exact complementary mass at the truncation point.
    """
    eff = _effective_params(params)
    p = float(params.service_prob)
    if truncation is None:
        truncation = default_truncation(params.max_packets, p)
    if eff is None or params.service_prob == 1:
        return _delta_at_zero(truncation)
    a_max = eff.max_packets
    lead = float(eff.lead_coeff)
    low = np.asarray([float(c) for c in eff.low_coeffs])

    # characteristic polynomial lead*r^A - low[A-1]*r^(A-1) - ... - low[0]
    poly = np.concatenate(([lead], -low[::-1]))
    roots = np.roots(poly)
    inside = roots[np.abs(roots) < 1.0 - _ROOT_EDGE]
    if len(inside) != a_max:
        raise NumericError(
            f"expected {a_max} decaying characteristic roots, found {len(inside)}: {roots}"
        )
    groups = _clustered_roots(inside)
    bnd = np.asarray([float(x) for x in boundary_chi(eff)])
    basis = _root_basis(groups, np.arange(a_max))
    try:
        weights = np.linalg.solve(basis, bnd)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"singular boundary fit for roots {groups}") from exc

    indices = np.arange(truncation + 2)
    chi = _root_basis(groups, indices) @ weights
    scale = max(1.0, float(np.abs(chi).max()))
    if np.abs(chi.imag).max() > 1e-9 * scale:
        raise NumericError("complex residue in the stationary sequence: conjugate roots unmatched")
    chi = chi.real
    pi = np.maximum(chi[:-1] - chi[1:], 0.0)
    return StationaryDistribution(pi=pi, tail_bound=float(max(chi[-1], 0.0)))


def _solve_folded(params: ChainParams, truncation: int) -> np.ndarray:
    """Stationary vector of the chain with all states above K folded into K."""
    theta = [float(x) for x in params.theta]
    p = float(params.service_prob)
    miss = 1.0 - p
    a_max = params.max_packets
    n = truncation + 1
    states = np.arange(n)

    rows = [np.array([0]), states[1:], states[1:]]
    cols = [np.array([0]), np.zeros(truncation, dtype=int), states[1:]]
    vals = [np.array([theta[0] + (1.0 - theta[0]) * p]),
            np.full(truncation, p),
            np.full(truncation, theta[0] * miss)]
    for batch in range(1, a_max + 1):
        rows.append(states)
        cols.append(np.minimum(states + batch, truncation))
        vals.append(np.full(n, theta[batch] * miss))
    transition = scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )

    system = (transition.T - scipy.sparse.identity(n)).tolil()
    system[truncation, :] = 1.0  # replace one redundant balance row by normalization
    rhs = np.zeros(n)
    rhs[truncation] = 1.0
    pi = scipy.sparse.linalg.spsolve(system.tocsc(), rhs)
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def steady_state_truncated(
    params: ChainParams, truncation: int | None = None, tol: float = 1e-10
) -> StationaryDistribution:
    """Direct linear solve of the folded finite chain.

    Independent oracle for the analytic solvers: it never looks at the
    difference equation, only at the one-step transition law. The
    truncation grows until the folded top state holds less than ``tol``
    mass, which then bounds the neglected tail.
    """
    if truncation is None:
        truncation = default_truncation(params.max_packets, float(params.service_prob))
    truncation = max(truncation, 10 * params.max_packets)
    while True:
        pi = _solve_folded(params, truncation)
        if pi[-1] < tol:
            return StationaryDistribution(pi=pi, tail_bound=float(pi[-1]))
        if truncation >= _TRUNC_CAP:
            raise UnstableChainError(
                f"stationary mass refuses to decay below {tol} within {_TRUNC_CAP} states"
            )
        truncation = min(2 * truncation, _TRUNC_CAP)


def chain_mean_delay(dist: StationaryDistribution, traffic: TrafficModel) -> float:
    """Mean packets in queue over mean packet arrivals per slot (Little)."""
    if not dist.tail_bound < 1e-6:
        raise ValueError(f"tail bound {dist.tail_bound} too large for a trustworthy mean")
    arrivals = traffic.mean_packets
    if not arrivals > 0:
        raise ValueError("mean arrival rate must be positive")
    return dist.mean() / arrivals


def ztransform_series(params: ChainParams, order: int) -> np.ndarray:
    """Series coefficients of the chain's rational transform, by long division.

    The complementary cumulative sequence has a rational generating
    function whose numerator is built from the difference-equation
    coefficients and the boundary values alone. Dividing it out term by
    term reproduces chi_0..chi_order independently of the root and
    truncated solvers.
    """
    eff = _effective_params(params)
    if eff is None or params.service_prob == 1:
        out = np.zeros(order + 1)
        out[0] = 1.0
        return out
    a_max = eff.max_packets
    lead = float(eff.lead_coeff)
    low = [float(c) for c in eff.low_coeffs]
    bnd = [float(x) for x in boundary_chi(eff)]

    num = np.zeros(a_max)
    for m in range(a_max):
        num[m] += lead * bnd[m]
        for j in range(m + 1, a_max):
            num[a_max - j + m] -= low[j] * bnd[m]
    den = np.zeros(a_max + 1)
    den[0] = lead
    for j in range(a_max):
        den[a_max - j] = -low[j]

    chi = np.zeros(order + 1)
    for i in range(order + 1):
        acc = num[i] if i < a_max else 0.0
        for s in range(1, min(i, a_max) + 1):
            acc -= den[s] * chi[i - s]
        chi[i] = acc / den[0]
    return chi
