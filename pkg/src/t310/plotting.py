"""Figures for the report-style CLI commands.  Always renders off-screen."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_spectrum(name: str, walsh: dict[int, int], auto: dict[int, int], path) -> None:
    """Side-by-side value/frequency bars for the Walsh and autocorrelation spectra."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.8))
    for ax, hist, label in ((axes[0], walsh, "Walsh"), (axes[1], auto, "autocorrelation")):
        xs = sorted(hist)
        ax.bar([str(x) for x in xs], [hist[x] for x in xs], color="tab:blue")
        ax.set_title(f"{label} spectrum of {name}")
        ax.set_xlabel("value")
        ax.set_ylabel("frequency")
        ax.tick_params(axis="x", labelrotation=90)
    _save(fig, path)


def plot_bias_scan(rows, path) -> None:
    """rows: (name, measured log2|bias|, claimed log2|bias| or None)."""
    names = [r[0] for r in rows]
    measured = [r[1] if math.isfinite(r[1]) else -20.0 for r in rows]
    fig, ax = plt.subplots(figsize=(max(5, 0.8 * len(rows) + 2), 4))
    xs = range(len(rows))
    ax.bar(xs, measured, color="tab:orange", label="measured")
    claimed = [(i, r[2]) for i, r in enumerate(rows) if r[2] is not None]
    if claimed:
        ax.scatter([c[0] for c in claimed], [c[1] for c in claimed], color="black", marker="_", s=400,
                   label="claimed", zorder=3)
    ax.set_xticks(list(xs), names, rotation=45, ha="right")
    ax.set_ylabel("log2 |bias|")
    ax.legend()
    _save(fig, path)


def plot_proportions(estimates, path) -> None:
    """Sampled class proportions with Wilson intervals against published exponents."""
    fig, ax = plt.subplots(figsize=(max(5, 1.0 * len(estimates) + 2), 4))
    for i, e in enumerate(estimates):
        if e.hits:
            lo = math.log2(max(e.low, 1e-300))
            hi = math.log2(e.high)
            ax.errorbar(i, e.log2, yerr=[[e.log2 - lo], [hi - e.log2]], fmt="o", color="tab:blue",
                        label="sampled" if i == 0 else None)
        if e.published_log2 is not None:
            ax.scatter(i, e.published_log2, marker="x", color="tab:red", label="published" if i == 0 else None)
    ax.set_xticks(range(len(estimates)), [e.tag for e in estimates], rotation=45, ha="right")
    ax.set_ylabel("log2 proportion")
    ax.legend()
    _save(fig, path)
