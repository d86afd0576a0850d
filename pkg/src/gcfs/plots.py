"""Figure rendering for the comparison reports.

Each report command writes its figures next to the delimited output:
theory as solid lines, simulation as circular markers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_delay_figure(rows: list[dict], axis: str, path) -> None:
    """Delay-versus-sweep-axis curves, one pair of series per arrival rate.

    ``rows`` are sweep rows; unstable points have no theory value and are
    skipped on the theory line.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    theta_values = sorted({row["theta1"] for row in rows})
    colors = plt.cm.viridis(np.linspace(0.0, 0.8, len(theta_values)))
    for theta1, color in zip(theta_values, colors):
        group = sorted((r for r in rows if r["theta1"] == theta1), key=lambda r: r["axis_value"])
        xs = [r["axis_value"] for r in group]
        theory = [(r["axis_value"], r["D_theory"]) for r in group if r["D_theory"] is not None]
        if theory:
            ax.plot(*zip(*theory), "-", color=color, label=f"theory, theta1={theta1:g}")
        sim = [(x, r["D_sim"]) for x, r in zip(xs, group) if r["D_sim"] is not None]
        if sim:
            ax.plot(*zip(*sim), "o", color=color, mfc="none", label=f"simulation, theta1={theta1:g}")
    ax.set_xlabel("transmission power" if axis == "power" else "arrival probability theta1")
    ax.set_ylabel("mean delay (slots)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150, format="png")
    plt.close(fig)


def save_distribution_figure(theory_pi, empirical, path) -> None:
    """Stationary packet-count pmf: theory line vs simulated histogram."""
    theory_pi = np.asarray(theory_pi, dtype=float)
    empirical = np.asarray(empirical, dtype=float)
    n = max(len(theory_pi), len(empirical))
    states = np.arange(n)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    floor = 1e-12
    ax.semilogy(states[: len(theory_pi)], np.maximum(theory_pi, floor), "-", label="theory")
    ax.semilogy(states[: len(empirical)], np.maximum(empirical, floor), "o", mfc="none", label="simulation")
    positive = np.concatenate([theory_pi[theory_pi > 0], empirical[empirical > 0]])
    if positive.size:
        ax.set_ylim(bottom=max(positive.min() * 0.5, floor))
    ax.set_xlabel("packets in buffer")
    ax.set_ylabel("probability")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150, format="png")
    plt.close(fig)
