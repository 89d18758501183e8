"""Static report figures rendered next to the delimited output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .sim import TimeSeries

_RC = {
    "figure.figsize": (7.0, 4.0),
    "axes.grid": True,
    "grid.alpha": 0.35,
    "font.size": 10,
    "svg.fonttype": "none",
}


def _status_shading(ax, t: np.ndarray, status: np.ndarray) -> None:
    """Shade the spans where the optimize branch was active."""
    active = status == 1.0
    if not active.any():
        return
    edges = np.flatnonzero(np.diff(np.concatenate([[0], active.astype(int), [0]])))
    for start, stop in zip(edges[::2], edges[1::2]):
        t_hi = t[stop - 1] + (t[1] - t[0] if len(t) > 1 else 0.0)
        ax.axvspan(t[start], t_hi, color="plum", alpha=0.18, linewidth=0)


def render_plots(series: TimeSeries, out_dir: Path) -> list[Path]:
    """Write the p_y, v_y and ZMP X-Y charts as SVG files; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cols = series.columns
    t = cols["t"]
    written: list[Path] = []

    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        _status_shading(ax, t, cols["status"])
        ax.plot(t, cols["p_y"], color="firebrick", label="CoM y")
        ax.plot(t, cols["goal_y"], color="goldenrod", linestyle="--", label="goal y")
        ax.set_xlabel("t (s)")
        ax.set_ylabel("y (m)")
        ax.legend(loc="best")
        fig.tight_layout()
        path = out_dir / "com_y.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

        fig, ax = plt.subplots()
        _status_shading(ax, t, cols["status"])
        ax.plot(t, cols["v_y"], color="firebrick", label="CoM vy")
        ax.plot(t, cols["ref_v_y"], color="goldenrod", label="reference vy")
        ax.set_xlabel("t (s)")
        ax.set_ylabel("vy (m/s)")
        ax.legend(loc="best")
        fig.tight_layout()
        path = out_dir / "com_vy.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

        fig, ax = plt.subplots()
        ax.plot(cols["zmp_x"], cols["zmp_y"], color="goldenrod", label="planned ZMP", linewidth=0.9)
        ax.plot(
            cols["zmp_recon_x"], cols["zmp_recon_y"],
            color="firebrick", label="force-implied ZMP", linewidth=0.9, alpha=0.8,
        )
        ax.plot(cols["p_x"], cols["p_y"], color="steelblue", label="CoM", linewidth=1.2)
        ax.set_xlabel("x (m)")
        ax.set_ylabel("y (m)")
        ax.set_aspect("equal", adjustable="datalim")
        ax.legend(loc="best")
        fig.tight_layout()
        path = out_dir / "zmp_xy.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    return written
