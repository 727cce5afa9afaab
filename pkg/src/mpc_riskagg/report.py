"""Figure rendering for the report-producing CLI paths.

Every report command writes delimited output plus a PNG next to it; these
helpers own the matplotlib side.  The Agg backend is forced so rendering
works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _date_axis(ax, dates):
    try:
        import datetime

        parsed = [datetime.date.fromisoformat(d) for d in dates]
    except ValueError:
        ax.set_xticks(range(0, len(dates), max(1, len(dates) // 8)))
        return list(range(len(dates)))
    ax.xaxis.set_major_locator(mdates.AutoDateLocator())
    ax.xaxis.set_major_formatter(mdates.ConciseDateFormatter(mdates.AutoDateLocator()))
    return parsed


def save_aggregate_figure(dates, totals, path: str, title: str = "Aggregate"):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    x = _date_axis(ax, dates)
    ax.plot(x, totals, lw=1.6)
    ax.set_ylabel("aggregate value")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_hhi_figure(dates, hhi_values, m: int, path: str):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    x = _date_axis(ax, dates)
    ax.plot(x, hhi_values, lw=1.6, label="concentration index")
    ax.axhline(1.0 / m, color="gray", ls="--", lw=1, label=f"1/m = {1.0 / m:.3f}")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("Herfindahl index")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_uniformity_figure(samples: np.ndarray, m: int, path: str):
    """Scatter of published partial sums over many fresh-randomness runs.

    For three parties this is the classic 3D view of the constraint plane;
    marginal histograms ride alongside for any party count.
    """
    samples = np.asarray(samples, dtype=float)
    cap = min(len(samples), 4000)  # keep the scatter readable
    fig = plt.figure(figsize=(10, 4.5))
    if m == 3:
        ax = fig.add_subplot(1, 2, 1, projection="3d")
        ax.scatter(
            samples[:cap, 0], samples[:cap, 1], samples[:cap, 2],
            s=3, alpha=0.4, linewidths=0,
        )
        ax.set_xlabel("S1")
        ax.set_ylabel("S2")
        ax.set_zlabel("S3")
        ax.set_title("published values cover the constraint set")
    else:
        ax = fig.add_subplot(1, 2, 1)
        ax.scatter(samples[:cap, 0], samples[:cap, 1], s=3, alpha=0.4, linewidths=0)
        ax.set_xlabel("S1")
        ax.set_ylabel("S2")
        ax.set_title("published values (first two coordinates)")
    ax2 = fig.add_subplot(1, 2, 2)
    for i in range(min(m, 6)):
        ax2.hist(
            samples[:, i], bins=40, range=(0, m), density=True,
            histtype="step", label=f"S{i + 1}",
        )
    ax2.axhline(1.0 / m, color="gray", ls="--", lw=1)
    ax2.set_title("marginals vs. uniform density")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_demo_panels(
    dates,
    private_series: dict,
    aggregate,
    masks: dict,
    published: dict,
    secure_aggregate,
    path: str,
):
    """Three-panel walkthrough of one masked-sum deployment.

    (a) private inputs and their true aggregate, (b) the exchanged random
    masks, (c) the published masked values and the aggregate recovered
    from them alone.
    """
    fig, axes = plt.subplots(1, 3, figsize=(15, 4.6))

    ax = axes[0]
    x = _date_axis(ax, dates)
    ax.bar(x, aggregate, width=80 if not isinstance(x[0], int) else 0.8,
           color="#aac4e2", label="aggregate (target)")
    for name, series in private_series.items():
        ax.plot(x, series, lw=1.4, label=name)
    ax.set_title("(a) private inputs and their aggregate")
    ax.legend(fontsize=8)

    ax = axes[1]
    x = _date_axis(ax, dates)
    for name, series in masks.items():
        ax.plot(x, series, lw=1.0, label=name)
    ax.set_title("(b) exchanged random masks")
    ax.legend(fontsize=7, ncol=2)

    ax = axes[2]
    x = _date_axis(ax, dates)
    ax.bar(x, secure_aggregate, width=80 if not isinstance(x[0], int) else 0.8,
           color="#aac4e2", label="aggregate from published values")
    for name, series in published.items():
        ax.plot(x, series, lw=1.4, label=name)
    ax.set_title("(c) published masked values; same aggregate")
    ax.legend(fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_correlation_figure(x, y, rho: float, path: str):
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.2))
    axes[0].plot(x, lw=1.2, label="series 1")
    axes[0].plot(y, lw=1.2, label="series 2")
    axes[0].set_title("input series")
    axes[0].legend()
    axes[1].scatter(x, y, s=10, alpha=0.6)
    axes[1].set_title(f"estimated correlation = {rho:.4f}")
    axes[1].set_xlabel("series 1")
    axes[1].set_ylabel("series 2")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
