"""Figure rendering for the CLI report paths.

Every plotting function writes a PNG next to the delimited output it
illustrates and returns the path. Uses the Agg backend so runs work
headless.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _save(fig, out_dir, name):
    path = os.path.join(out_dir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_count_pmfs(out_dir, k_values, p_k, kplus_values, p_kplus,
                    name="count_pmfs.png", title=""):
    """Side-by-side bar charts of the pmfs of K and K+."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2), sharey=True)
    for ax, xs, ps, lab in ((axes[0], k_values, p_k, "K"),
                            (axes[1], kplus_values, p_kplus, "K+")):
        if ps is None:
            ax.set_visible(False)
            continue
        keep = ps > 1e-4
        ax.bar(np.asarray(xs)[keep], np.asarray(ps)[keep], width=0.8,
               color="#4878d0", edgecolor="none")
        ax.set_xlabel(lab)
    axes[0].set_ylabel("probability")
    if title:
        fig.suptitle(title)
    return _save(fig, out_dir, name)


def plot_trace(out_dir, trace, name="trace_k.png"):
    """Trace plots of K, K+ and, when sampled, the concentration."""
    panels = 2 + (1 if np.any(trace.accept >= 0) else 0)
    fig, axes = plt.subplots(panels, 1, figsize=(9, 2.2 * panels), sharex=True)
    step = max(1, trace.draws // 20000)  # thin the picture, not the data
    xs = np.arange(trace.draws)[::step]
    axes[0].plot(xs, trace.k[::step], lw=0.4, color="#4878d0")
    axes[0].set_ylabel("K")
    axes[1].plot(xs, trace.k_plus[::step], lw=0.4, color="#d65f5f")
    axes[1].set_ylabel("K+")
    if panels == 3:
        axes[2].plot(xs, trace.concentration[::step], lw=0.4, color="#6acc64")
        axes[2].set_ylabel("concentration")
        axes[2].set_yscale("log")
    axes[-1].set_xlabel("recorded sweep")
    return _save(fig, out_dir, name)


def plot_acf(out_dir, lags, series_by_name, name="acf.png"):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    for label, values in series_by_name.items():
        if np.all(np.isnan(values)):
            continue
        ax.plot(lags, values, lw=1.0, label=label)
    ax.axhline(0.0, color="0.6", lw=0.6)
    ax.set_xlabel("lag")
    ax.set_ylabel("autocorrelation")
    ax.legend(frameon=False)
    return _save(fig, out_dir, name)


def plot_partition(out_dir, data, labels, name="partition.png"):
    """Scatter of the MAP clustering on the first one or two coordinates."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    labels = np.asarray(labels)
    fig, ax = plt.subplots(figsize=(6, 4))
    cmap = plt.get_cmap("tab10")
    for i, g in enumerate(np.unique(labels)):
        pts = data[labels == g]
        if data.shape[1] == 1:
            jitter = (np.arange(pts.shape[0]) % 7) / 7.0
            ax.scatter(pts[:, 0], jitter, s=12, color=cmap(i % 10),
                       label="cluster %d" % g)
            ax.set_yticks([])
        else:
            ax.scatter(pts[:, 0], pts[:, 1], s=12, color=cmap(i % 10),
                       label="cluster %d" % g)
    ax.set_xlabel("x1")
    if data.shape[1] > 1:
        ax.set_ylabel("x2")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, out_dir, name)
