"""SVG diagnostics drawn from a trace CSV."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import read_trace_csv  # noqa: E402

# fixed ids and no date stamp so the files are byte-stable
_RC = {"svg.hashsalt": "nilhcf", "svg.fonttype": "path"}
_META = {"Date": None}


def _save(fig, path):
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return Path(path)


def _column(header, data, name):
    return data[:, header.index(name)]


def plot_norm(header, data, path):
    t = _column(header, data, "t")
    y = _column(header, data, "norm_sq")
    keep = (t > 0) & (y > 0)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(t[keep], y[keep], label="norm_sq")
    if keep.any():
        # t^-1 through the last sample
        t1, y1 = t[keep][-1], y[keep][-1]
        tt = t[keep]
        ax.loglog(tt, y1 * t1 / tt, "--", label="t^-1")
    ax.set_xlabel("t")
    ax.set_ylabel("norm_sq")
    ax.legend()
    return _save(fig, path)


def plot_column(header, data, name, path, log=False):
    t = _column(header, data, "t")
    y = _column(header, data, name)
    fig, ax = plt.subplots(figsize=(5, 4))
    if log:
        keep = y > 0
        ax.semilogy(t[keep], y[keep])
    else:
        ax.plot(t, y)
    ax.set_xlabel("t")
    ax.set_ylabel(name)
    return _save(fig, path)


def plot_trace_csv(csv_path, out_dir=None) -> list[Path]:
    """Write ``norm_sq.svg``, ``F.svg`` and ``residual.svg`` next to the CSV."""
    csv_path = Path(csv_path)
    out = Path(out_dir) if out_dir is not None else csv_path.parent
    header, data = read_trace_csv(csv_path)
    if data.shape[0] == 0:
        data = np.zeros((0, len(header)))
    return [
        plot_norm(header, data, out / "norm_sq.svg"),
        plot_column(header, data, "F", out / "F.svg"),
        plot_column(header, data, "residual", out / "residual.svg", log=True),
    ]
