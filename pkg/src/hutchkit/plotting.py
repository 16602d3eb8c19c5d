"""Matplotlib figures for the report commands (file output only)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import LinearSegmentedColormap  # noqa: E402

from .trace import HIGH_RGB, LOW_RGB  # noqa: E402

HEATMAP_CMAP = LinearSegmentedColormap.from_list("blue_yellow", [LOW_RGB / 255, HIGH_RGB / 255])


def identity_panels(resolutions, titles, path, dpi=150):
    """Side-by-side |Pi| heatmaps on a shared [0, 1] colour scale."""
    fig, axes = plt.subplots(1, len(resolutions), figsize=(3.2 * len(resolutions), 3.2), squeeze=False)
    for ax, res, title in zip(axes[0], resolutions, titles):
        im = ax.imshow(np.clip(np.abs(res.Pi), 0, 1), cmap=HEATMAP_CMAP, vmin=0, vmax=1, interpolation="nearest")
        ax.set_title(title, fontsize=10)
        ax.set_xticks([])
        ax.set_yticks([])
    fig.colorbar(im, ax=axes[0].tolist(), shrink=0.8, label="|entry|")
    fig.savefig(path, dpi=dpi, bbox_inches="tight")
    plt.close(fig)
    return path


def rms_decay(Ks, curves, path, dpi=150):
    """Off-diagonal RMS versus K on log-log axes; ``curves`` maps label -> RMS values."""
    fig, ax = plt.subplots(figsize=(4.5, 3.4))
    Ks = np.asarray(Ks, dtype=float)
    for label, rms in curves.items():
        ax.loglog(Ks, rms, "o-", label=label)
    ref = curves[next(iter(curves))][0] * np.sqrt(Ks[0] / Ks)
    ax.loglog(Ks, ref, "k--", lw=0.8, label="K^-1/2")
    ax.set_xlabel("K")
    ax.set_ylabel("off-diagonal RMS")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path


def resource_sweep(rows, path, dpi=150):
    """CNOT count and depth against their bounds for a compile sweep."""
    Q = [r["Q"] for r in rows]
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8, 3.2))
    a1.plot(Q, [r["n_cnot"] for r in rows], ".-", label="CNOT")
    a1.plot(Q, [r["bound_cnot"] for r in rows], "k--", lw=0.8, label="bound")
    a2.plot(Q, [r["depth"] for r in rows], ".-", label="depth")
    a2.plot(Q, [r["bound_depth"] for r in rows], "k--", lw=0.8, label="bound")
    for ax in (a1, a2):
        ax.set_xlabel("Q")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
