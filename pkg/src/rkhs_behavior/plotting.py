"""Figures written next to the CSV/JSON outputs of the command line."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_trajectory", "plot_singular_values", "plot_representer", "plot_membership"]

_RC = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_trajectory(traj, path, title=None):
    with plt.rc_context(_RC):
        fig, (ax_u, ax_y) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 4.0))
        t = np.arange(traj.T)
        for i in range(traj.m):
            ax_u.step(t, traj.u[:, i], where="post", lw=0.8, label=f"u{i}")
        for i in range(traj.p):
            ax_y.plot(t, traj.y[:, i], lw=0.9, label=f"y{i}")
        ax_u.set_ylabel("input")
        ax_y.set_ylabel("output")
        ax_y.set_xlabel("t")
        ax_u.legend(loc="upper right", fontsize=7)
        ax_y.legend(loc="upper right", fontsize=7)
        if title:
            ax_u.set_title(title)
        return _save(fig, path)


def plot_singular_values(s, path, order=None):
    s = np.asarray(s, float)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.8, 3.2))
        k = np.arange(1, s.size + 1)
        floor = np.finfo(float).tiny
        ax.semilogy(k, np.maximum(s, floor), "o-", ms=3, lw=0.8)
        if order:
            ax.axvline(order + 0.5, color="C3", ls="--", lw=0.8, label=f"order {order}")
            ax.legend(fontsize=7)
        ax.xaxis.set_major_locator(MaxNLocator(integer=True))
        ax.set_xlabel("index")
        ax.set_ylabel("singular value of the oblique projection")
        return _save(fig, path)


def plot_representer(reports, path):
    """Predicted vs actual next outputs and the certificate class per window."""
    with plt.rc_context(_RC):
        fig, (ax, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 4.0))
        if reports:
            pred = np.array([r.predicted for r in reports])
            act = np.array([r.actual for r in reports])
            t = np.arange(len(reports))
            for i in range(pred.shape[1]):
                ax.plot(t, act[:, i], lw=0.9, label=f"y{i}")
                ax.plot(t, pred[:, i], "--", lw=0.9, label=f"y{i} predicted")
            err = np.array([r.prediction_error_sq for r in reports])
            ax2.semilogy(t, np.maximum(err, np.finfo(float).tiny), lw=0.8)
            ax.legend(fontsize=7)
        ax.set_ylabel("next output")
        ax2.set_ylabel("squared error")
        ax2.xaxis.set_major_locator(MaxNLocator(integer=True))
        ax2.set_xlabel("online window")
        return _save(fig, path)


def plot_membership(candidate, predicted, L, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.8, 3.2))
        t = np.arange(candidate.T)
        for i in range(candidate.p):
            ax.plot(t, candidate.y[:, i], "o-", ms=3, lw=0.8, label=f"y{i}")
            ax.plot(t[L:], np.asarray(predicted)[:, i], "x--", lw=0.8, label=f"y{i} predicted")
        ax.axvline(L - 0.5, color="0.5", lw=0.6)
        ax.set_xlabel("t")
        ax.legend(fontsize=7)
        return _save(fig, path)
