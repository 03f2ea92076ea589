"""Matplotlib renderings of point clouds and training curves, saved to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_point_cloud", "save_metric_curves", "save_risk_curves"]

# true positives orange, true negatives red, generated positives green,
# generated negatives blue
STYLE = {
    "true_pos": dict(c="tab:orange", s=6, alpha=0.4, label="true +"),
    "true_neg": dict(c="tab:red", s=6, alpha=0.4, label="true -"),
    "gen_pos": dict(c="tab:green", s=8, alpha=0.6, label="generated +"),
    "gen_neg": dict(c="tab:blue", s=8, alpha=0.6, label="generated -"),
}


def save_point_cloud(path, gen_pos, gen_neg, true_pos=None, true_neg=None, title=None):
    """Scatter generated samples over (optionally) the true classes; 2-D only."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for arr, key in ((true_pos, "true_pos"), (true_neg, "true_neg"), (gen_pos, "gen_pos"), (gen_neg, "gen_neg")):
        if arr is None:
            continue
        arr = np.asarray(arr)
        if arr.shape[0]:
            ax.scatter(arr[:, 0], arr[:, 1], **STYLE[key])
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="upper right", fontsize=8, markerscale=2)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_metric_curves(path, metrics_rows, title=None):
    """Game objectives (left) and mean discriminator outputs (right) over iterations."""
    if not metrics_rows:
        return
    it = [m.iteration for m in metrics_rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for name in ("v_dp", "v_du_gp", "v_du_gn", "v_dn"):
        ax1.plot(it, [getattr(m, name) for m in metrics_rows], label=name, lw=1)
    ax1.axhline(-np.log(4.0), color="gray", ls="--", lw=0.8, label="-log 4")
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("objective")
    ax1.legend(fontsize=7)
    for name in ("d_p_real", "d_p_fake", "d_u_real", "d_u_fake_p", "d_u_fake_n", "d_n_real", "d_n_fake"):
        ax2.plot(it, [getattr(m, name) for m in metrics_rows], label=name, lw=1)
    ax2.axhline(0.5, color="gray", ls="--", lw=0.8)
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("mean discriminator output")
    ax2.set_ylim(-0.05, 1.05)
    ax2.legend(fontsize=7)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_risk_curves(path, curves, title=None):
    """Training risk and test error per estimator; the zero line marks where
    the unbiased estimator escapes below its corrected counterpart."""
    if not curves:
        return
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for name, pts in curves.items():
        it = [p.iteration for p in pts]
        ax1.plot(it, [p.train_risk for p in pts], label=name, lw=1.2)
        errs = [p.test_error for p in pts]
        if not all(np.isnan(errs)):
            ax2.plot(it, errs, label=name, lw=1.2)
    ax1.axhline(0.0, color="black", lw=0.8)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("training risk")
    ax1.legend(fontsize=8)
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("test error")
    ax2.legend(fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
