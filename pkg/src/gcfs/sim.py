"""Slot-level Monte Carlo of the shared downlink.

Every slot draws one batch of arrivals and one block-fading gain per
user, plans service greedily from the best channel down, and applies the
exact bit accounting q <- q + arrivals*L - served. Plans never split the
per-user v = demand/rate beyond the single boundary user, so the symbol
budget is consumed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import (
    ChannelModel,
    SystemParams,
    TrafficModel,
    rate_bits_per_symbol,
    sample_arrivals,
)

# substream tags: one counter-based stream per draw purpose
_ARRIVAL_STREAM = 1
_GAIN_STREAM = 2


@dataclass(frozen=True)
class GcfsPolicy:
    """Serve nonempty buffers best channel first until symbols run out."""


@dataclass(frozen=True)
class ThresholdPolicy:
    """Serve only backlogged users whose gain clears a fixed threshold."""

    threshold_gain: float


@dataclass(frozen=True)
class SlotPlan:
    """Service decision for one slot.

    ``ordering`` lists the candidate users best gain first; the first
    ``len(fully_served)`` of them are cleared, one boundary user may get
    the remaining symbols, everyone else gets nothing. ``backlogged``
    counts users whose pre-service buffer (queue plus fresh arrivals)
    was nonempty, eligible or not.
    """

    ordering: np.ndarray
    fully_served: np.ndarray
    partial: tuple[int, float] | None
    idle_symbols: float
    served_bits: np.ndarray
    backlogged: int

    @property
    def total_bits(self) -> float:
        return float(self.served_bits.sum())

    @property
    def served_count(self) -> int:
        return len(self.fully_served) + (1 if self.partial is not None else 0)


def _greedy_fill(order, demand, rates, budget):
    """Serve ``order`` left to right: clear whole buffers while the symbol
    budget lasts, then hand every remaining symbol to the next user."""
    served = np.zeros(demand.shape[0])
    symbols = demand[order] / rates[order]
    used = np.cumsum(symbols)
    n_full = int(np.searchsorted(used, budget, side="right"))
    full = order[:n_full]
    served[full] = demand[full]
    spent = float(used[n_full - 1]) if n_full else 0.0
    if n_full == len(order):
        return served, full, None, max(budget - spent, 0.0)
    spare = budget - spent
    if spare <= 0:
        return served, full, None, 0.0
    user = int(order[n_full])
    bits = spare * rates[user]
    if bits >= demand[user]:
        # 1-ulp rounding corner: the remainder covers the whole buffer
        served[user] = demand[user]
        return served, np.append(full, user), None, max(spare - symbols[n_full], 0.0)
    served[user] = bits
    # the boundary user absorbs all remaining symbols, so nothing idles
    return served, full, (user, float(bits)), 0.0


def _plan(queues, arrivals, gains, snr, budget, packet_bits, min_gain):
    queues = np.asarray(queues, dtype=float)
    gains = np.asarray(gains, dtype=float)
    if queues.shape != gains.shape:
        raise ValueError("queues and gains must have matching length")
    demand = queues + np.asarray(arrivals, dtype=float) * packet_bits
    rates = rate_bits_per_symbol(gains, snr)
    backlogged = int(np.count_nonzero(demand > 0))
    eligible = (demand > 0) & (rates > 0)  # zero-gain users would need infinite symbols
    if min_gain is not None:
        eligible &= gains > min_gain
    candidates = np.flatnonzero(eligible)
    if candidates.size == 0:
        return SlotPlan(
            ordering=candidates,
            fully_served=candidates,
            partial=None,
            idle_symbols=float(budget),
            served_bits=np.zeros(queues.shape[0]),
            backlogged=backlogged,
        )
    # stable sort on descending gain == ties broken by ascending user index
    order = candidates[np.argsort(-gains[candidates], kind="stable")]
    served, full, partial, idle = _greedy_fill(order, demand, rates, budget)
    return SlotPlan(
        ordering=order,
        fully_served=full,
        partial=partial,
        idle_symbols=idle,
        served_bits=served,
        backlogged=backlogged,
    )


def gcfs_plan(queues, arrivals, gains, snr, budget, packet_bits=1.0) -> SlotPlan:
    """Good-channel-first service: backlogged users sorted by descending
    gain are cleared greedily until the symbol budget binds; the next
    user gets whatever symbols remain."""
    return _plan(queues, arrivals, gains, snr, budget, packet_bits, min_gain=None)


def threshold_plan(queues, arrivals, gains, snr, budget, threshold_gain, packet_bits=1.0) -> SlotPlan:
    """Same greedy fill as `gcfs_plan`, but only users whose gain exceeds
    the threshold are candidates (the budget can still bind)."""
    if threshold_gain < 0:
        raise ValueError("threshold gain must be nonnegative")
    return _plan(queues, arrivals, gains, snr, budget, packet_bits, min_gain=threshold_gain)


@dataclass
class SimState:
    """Mutable per-replication state: bit queues, slot counter, substreams."""

    queues: np.ndarray
    slot: int
    arrival_rng: np.random.Generator
    gain_rng: np.random.Generator

    @classmethod
    def initial(cls, n_users: int, seed: int) -> "SimState":
        """Cold start: empty buffers, one counter-based substream per purpose.

        Substreams are keyed by (seed, purpose), so replications with
        different seeds and draws for different purposes are independent
        regardless of execution order.
        """

        def stream(tag):
            seq = np.random.SeedSequence(seed, spawn_key=(tag,))
            return np.random.Generator(np.random.Philox(seq))

        return cls(
            queues=np.zeros(n_users),
            slot=0,
            arrival_rng=stream(_ARRIVAL_STREAM),
            gain_rng=stream(_GAIN_STREAM),
        )


def step(state, policy, channel, traffic, system):
    """Advance one slot: draw arrivals then gains, plan, update queues.

    Deterministic given the state's substreams. Returns the advanced
    state (same object) and the slot's plan.
    """
    n = system.n_users
    arrivals = sample_arrivals(traffic, state.arrival_rng, size=n)
    gains = channel.sample(state.gain_rng, size=n)
    if isinstance(policy, ThresholdPolicy):
        plan = threshold_plan(
            state.queues, arrivals, gains, system.snr, system.symbols_per_slot,
            policy.threshold_gain, traffic.packet_bits,
        )
    else:
        plan = gcfs_plan(
            state.queues, arrivals, gains, system.snr, system.symbols_per_slot,
            traffic.packet_bits,
        )
    # same expression as the plan's demand, so cleared users land on 0.0 exactly
    state.queues = state.queues + arrivals * traffic.packet_bits - plan.served_bits
    state.slot += 1
    return state, plan


@dataclass(frozen=True)
class SimTrace:
    """Per-slot time series of one replication (slots numbered from 1)."""

    total_queue_bits: np.ndarray
    bits_served: np.ndarray
    served_count: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("t,total_queue_bits,S_t,served_count\n")
            for t in range(len(self.total_queue_bits)):
                fh.write(
                    f"{t + 1},{self.total_queue_bits[t]!r},"
                    f"{self.bits_served[t]!r},{int(self.served_count[t])}\n"
                )


@dataclass(frozen=True)
class SimSummary:
    """Post-warmup statistics of one replication."""

    mean_queue_bits: float      # time average of the per-user queue
    mean_delay_slots: float     # Little's law: mean queue / arrival bits per slot
    packet_histogram: np.ndarray  # pmf of per-user packet counts, pooled over user-slots
    p_hat: float                # fraction of backlogged user-slots fully cleared
    diverged: bool
    seed: int
    horizon: int
    warmup: int
    n_users: int
    arrival_bits_per_slot: float
    policy_label: str
    threshold_gain: float | None = None
    trace: SimTrace | None = None

    def to_json_dict(self) -> dict:
        return {
            "kind": "simulation",
            "seed": self.seed,
            "horizon": self.horizon,
            "warmup": self.warmup,
            "n_users": self.n_users,
            "policy": self.policy_label,
            "threshold_gain": self.threshold_gain,
            "arrival_bits_per_slot": self.arrival_bits_per_slot,
            "mean_queue_bits": self.mean_queue_bits,
            "mean_delay_slots": self.mean_delay_slots,
            "p_hat": self.p_hat,
            "diverged": self.diverged,
            "packet_histogram": [float(x) for x in self.packet_histogram],
        }


def _policy_label(policy) -> tuple[str, float | None]:
    if isinstance(policy, ThresholdPolicy):
        return "threshold", float(policy.threshold_gain)
    return "gcfs", None


def default_warmup(horizon: int) -> int:
    """One tenth of the horizon, at least 1000 slots, always < horizon."""
    return min(max(horizon // 10, 1000), horizon - 1)


def simulate(channel, traffic, system, policy, horizon, warmup=None, seed=0, keep_trace=True) -> SimSummary:
    """Run the slot process and accumulate post-warmup statistics.

    Unstable configurations run to the horizon anyway; the summary then
    carries a divergence flag (last quarter of the post-warmup queue
    trace more than twice the second quarter).
    """
    if warmup is None:
        warmup = default_warmup(horizon)
    if not horizon > warmup >= 0:
        raise ValueError(f"need horizon > warmup >= 0, got {horizon}, {warmup}")
    n = system.n_users
    bits_per_packet = traffic.packet_bits
    state = SimState.initial(n, seed)

    total_queue = np.empty(horizon)
    bits_served = np.empty(horizon)
    served_count = np.empty(horizon, dtype=np.int64)
    hist = np.zeros(64, dtype=np.int64)
    queue_acc = 0.0
    backlog_slots = 0
    cleared_slots = 0

    for t in range(horizon):
        state, plan = step(state, policy, channel, traffic, system)
        total_queue[t] = state.queues.sum()
        bits_served[t] = plan.total_bits
        served_count[t] = plan.served_count
        if t >= warmup:
            queue_acc += total_queue[t]
            backlog_slots += plan.backlogged
            cleared_slots += len(plan.fully_served)
            packets = np.ceil(state.queues / bits_per_packet).astype(np.int64)
            top = int(packets.max(initial=0))
            if top >= len(hist):
                hist = np.concatenate([hist, np.zeros(top + 1 - len(hist), dtype=np.int64)])
            hist += np.bincount(packets, minlength=len(hist))

    kept = horizon - warmup
    mean_queue = queue_acc / (kept * n)
    lam = traffic.mean_bits
    delay = mean_queue / lam if lam > 0 else 0.0
    p_hat = cleared_slots / backlog_slots if backlog_slots else 1.0
    hist = hist[: max(1, int(np.flatnonzero(hist).max(initial=0)) + 1)]
    histogram = hist / hist.sum()

    post = total_queue[warmup:]
    quarter = len(post) // 4
    diverged = False
    if quarter >= 2:
        mid = float(post[quarter : 2 * quarter].mean())
        last = float(post[3 * quarter :].mean())
        diverged = last > 2.0 * mid

    label, threshold_gain = _policy_label(policy)
    return SimSummary(
        mean_queue_bits=mean_queue,
        mean_delay_slots=delay,
        packet_histogram=histogram,
        p_hat=p_hat,
        diverged=diverged,
        seed=seed,
        horizon=horizon,
        warmup=warmup,
        n_users=n,
        arrival_bits_per_slot=lam,
        policy_label=label,
        threshold_gain=threshold_gain,
        trace=SimTrace(total_queue, bits_served, served_count) if keep_trace else None,
    )
