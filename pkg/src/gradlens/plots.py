"""SVG figure output for sweep curves and game traces."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_metric_curves(results, metric_name: str, out_path, title: str = ""):
    """One line per (p, target_noise) pair, averaged over seeds."""
    grouped: dict = {}
    for r in results:
        for curve in r.curves:
            if curve.metric_name != metric_name:
                continue
            grouped.setdefault((r.p, r.target_noise), []).append(curve)
    if not grouped:
        return None
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (p, noise), curves in sorted(grouped.items()):
        amps = curves[0].amplitudes
        values = sum(c.values for c in curves) / len(curves)
        label = f"p={p:g}, {noise}"
        ax.plot(amps, values, marker="o", markersize=3, label=label)
    ax.set_xlabel("input noise amplitude")
    ax.set_ylabel(metric_name)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return out_path


def plot_traces(traces: dict, out_path, title: str = "composition level"):
    """Composition level over rounds, one series per labeled trace."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, trace in traces.items():
        ax.plot(trace.composition, label=label, linewidth=1.0)
    ax.set_xlabel("round")
    ax.set_ylabel("composition level")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return out_path
