"""Figure rendering for experiment reports.

Every CLI command that writes a report also renders a companion PNG next
to it.  Rendering is deterministic: the Agg backend, fixed figure sizes,
and no timestamps in the PNG metadata, so identical runs produce
byte-identical images.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KWARGS = {"dpi": 120, "metadata": {"Software": "marginlab"}}

plt.rcParams.update(
    {
        "figure.figsize": (7.0, 4.0),
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
    }
)


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def save_net_probe_figure(distances: np.ndarray, alpha: float, path):
    """Histogram of probe nearest-net distances against the covering radius."""
    fig, ax = plt.subplots()
    ax.hist(distances, bins=60, color="tab:blue", alpha=0.8)
    ax.axvline(alpha / 2.0, color="tab:red", linestyle="--", label="covering radius alpha/2")
    ax.set_xlabel("nearest net point distance")
    ax.set_ylabel("probes")
    ax.legend()
    return _finish(fig, path)


def save_replicability_figure(report_dicts: list[dict], dim: int, path):
    """Stacked per-distribution output frequencies, one bar per distribution."""
    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    for i, rep in enumerate(report_dicts):
        bottom = 0.0
        total = rep["trials"]
        counts = sorted((s["count"] for s in rep["outputs"].values()), reverse=True)
        for c in counts:
            ax.bar(i, c / total, bottom=bottom, edgecolor="white", linewidth=0.4)
            bottom += c / total
    ax.set_xlabel("distribution")
    ax.set_ylabel("output frequency (stacked)")
    ax.set_ylim(0, 1)
    distinct = [rep["distinct_outputs"] for rep in report_dicts]
    ax2.plot(range(len(distinct)), distinct, "o", color="tab:blue", label="distinct outputs")
    ax2.axhline(dim, color="tab:red", linestyle="--", label=f"list bound d = {dim}")
    ax2.set_xlabel("distribution")
    ax2.set_ylabel("distinct outputs")
    ax2.set_ylim(0, max(distinct + [dim]) + 1)
    ax2.legend()
    return _finish(fig, path)


def save_concentration_figure(rows, path):
    """Empirical tail vs. the exponential union bound, log scale."""
    t = [r.t for r in rows]
    fig, ax = plt.subplots()
    ax.semilogy(t, [max(r.empirical_tail, 1e-12) for r in rows], "o-", label="empirical tail")
    ax.semilogy(t, [max(r.lemma_bound, 1e-12) for r in rows], "s--", label="union bound")
    ax.set_xlabel("l1 deviation t")
    ax.set_ylabel("tail probability")
    ax.legend()
    return _finish(fig, path)


def save_cover_probe_figure(rows, path):
    """Multiplicity along the probe grid."""
    mult = [row.multiplicity for row in rows]
    fig, ax = plt.subplots()
    ax.step(range(len(mult)), mult, where="mid")
    ax.set_xlabel("grid position")
    ax.set_ylabel("frequent accurate hypotheses")
    ax.set_ylim(0, max(mult) + 1 if mult else 1)
    return _finish(fig, path)


def save_matrix_figure(entries: np.ndarray, path):
    """Heatmap of a {+1, -1, *} matrix; stars render gray."""
    colored = np.asarray(entries, dtype=float)
    masked = np.ma.masked_where(colored == 0, colored)
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    cmap = plt.get_cmap("coolwarm").copy()
    cmap.set_bad("0.8")
    ax.imshow(masked, cmap=cmap, vmin=-1, vmax=1, interpolation="nearest")
    ax.set_xlabel("domain points")
    ax.set_ylabel("concepts")
    ax.grid(False)
    return _finish(fig, path)


def save_svm_check_figure(oracle_margins, solver_margins, path):
    """Solver vs. oracle margins; points sit on the diagonal when they agree."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(oracle_margins, solver_margins, ".", alpha=0.7)
    lim = [0, max(max(oracle_margins, default=1.0), max(solver_margins, default=1.0)) * 1.05]
    ax.plot(lim, lim, "--", color="tab:red", linewidth=0.8)
    ax.set_xlabel("enumeration oracle margin")
    ax.set_ylabel("solver margin")
    return _finish(fig, path)


def save_boost_figure(outcome_counts: dict[str, int], path):
    """Outcome histogram over boost meta-runs."""
    names = list(outcome_counts)
    values = [outcome_counts[n] for n in names]
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.bar(names, values, color="tab:blue", alpha=0.85)
    ax.set_ylabel("meta-runs")
    return _finish(fig, path)
