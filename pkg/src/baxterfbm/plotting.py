"""Optional PNG figures for the CLI outputs. Imported only when ``--plot`` is given."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_kernels(s, infinite, finite, diff, path, title=""):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.loglog(s, finite, label="finite past")
    ax1.loglog(s, infinite, "--", label="infinite past")
    ax1.set_xlabel("s")
    ax1.set_ylabel("kernel")
    ax1.legend()
    ax2.loglog(s, diff)
    ax2.set_xlabel("s")
    ax2.set_ylabel("finite - infinite")
    fig.suptitle(title)
    return _save(fig, path)


def plot_sweep(sweep, path):
    t = sweep["t"]
    target = sweep["asymptote"] if "asymptote" in sweep.columns else np.ones_like(t)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.semilogx(t, sweep["ratio"], "o-", label="ratio")
    ax1.semilogx(t, target, "k--", label="limit")
    ax1.set_xlabel("t")
    ax1.legend()
    err = np.abs(sweep["ratio"] - target)
    ax2.loglog(t, np.maximum(err, 1e-16), "o-")
    ax2.set_xlabel("t")
    ax2.set_ylabel("|ratio - limit|")
    fig.suptitle(f"{sweep.metadata.get('kind', '')} {sweep.metadata.get('model', '')}")
    return _save(fig, path)


def plot_mc(report, grid_points, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(grid_points, report.gram_weights, label="Gram-optimal")
    ax.plot(grid_points, report.kernel_weights, "--", label="discretised kernel")
    ax.set_xlabel("observation time")
    ax.set_ylabel("weight")
    ax.set_yscale("symlog", linthresh=1e-3)
    ax.legend()
    return _save(fig, path)
