"""Deterministic figure rendering for reports and optimization traces."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["PNG_METADATA", "save_png", "report_figure", "trace_figure"]

# A null Date keeps the PNG byte-stable across reruns.
PNG_METADATA = {"Date": None}


def save_png(figure, path) -> None:
    figure.savefig(path, format="png", metadata=PNG_METADATA, dpi=120)
    plt.close(figure)


def report_figure(report: dict):
    """Median final energy with percentile bands versus the sweep parameter."""
    points = sorted(report["points"], key=lambda p: p["parameter"])
    x = [p["parameter"] for p in points]
    band = {k: [p["percentiles"][k] for p in points] for k in ("5", "25", "75", "95")}
    median = [p["median"] for p in points]
    reference = [p["exact_reference"] for p in points]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.fill_between(x, band["5"], band["95"], alpha=0.15, color="tab:blue",
                    label="5-95 percentile", linewidth=0)
    ax.fill_between(x, band["25"], band["75"], alpha=0.35, color="tab:blue",
                    label="25-75 percentile", linewidth=0)
    ax.plot(x, median, "o-", color="tab:blue", label="median")
    ax.plot(x, reference, "k:", label="exact reference")
    ax.set_xlabel("parameter")
    ax.set_ylabel("energy")
    ax.set_title(report["scenario"])
    ax.legend(loc="best")
    fig.tight_layout()
    return fig


def trace_figure(trace: dict):
    """Midpoint of the two perturbed energies per update, plus the final value."""
    steps = [rec["k"] for rec in trace["iterations"]]
    midpoint = [
        0.5 * (rec["theta_plus_energy"] + rec["theta_minus_energy"])
        for rec in trace["iterations"]
    ]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(steps, midpoint, linewidth=0.9, color="tab:blue", label="iterate energy")
    ax.axhline(trace["E_f"], color="tab:red", linestyle="--", label="final estimate")
    ax.set_xlabel("update")
    ax.set_ylabel("energy")
    ax.legend(loc="best")
    fig.tight_layout()
    return fig
