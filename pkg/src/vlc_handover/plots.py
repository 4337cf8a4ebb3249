"""Figures written next to the CSV reports.

Uses the object-oriented matplotlib API with the Agg canvas, so nothing
touches pyplot global state and no display is needed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .experiment import BerMap, TrajectoryReport
from .phy import SampledWaveform

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
}


def _new(width=6.4, height=4.0, nrows=1, ncols=1, **subplot_kw):
    fig = Figure(figsize=(width, height))
    FigureCanvasAgg(fig)
    with matplotlib.rc_context(STYLE):
        axes = fig.subplots(nrows, ncols, **subplot_kw)
    return fig, axes


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    return path


def plot_trajectory(report: TrajectoryReport, path) -> Path:
    """Per-frame kurtosis with waypoint labels and handover events, cell levels below."""
    fig, (ax_k, ax_g) = _new(7.0, 5.0, nrows=2, sharex=True)
    frames = np.array([r.frame for r in report.records])
    ax_k.plot(frames, report.kurtosis_series, "o-", ms=3, lw=1, color="C0")
    ax_k.axhline(3.0, color="0.6", lw=0.8, ls="--")
    starts = {}
    for r in report.records:
        starts.setdefault(r.label, r.frame)
    for label, f in starts.items():
        ax_k.axvline(f - 0.5, color="0.85", lw=0.6)
        ax_k.text(f + 1, ax_k.get_ylim()[1], label, va="bottom", ha="center", fontsize=8)
    for ev in report.events:
        ax_k.axvline(ev.frame_index, color="C3", lw=1.2)
        ax_k.annotate(f"HO {ev.from_cell}->{ev.to_cell}", (ev.frame_index, ev.kurtosis_at_peak),
                      xytext=(4, -12), textcoords="offset points", color="C3", fontsize=8)
    ax_k.set_ylabel("kurtosis of cell-ID segment")
    for i, c in enumerate(report.cell_ids):
        ax_g.plot(frames, [r.gains[c] * 1e6 for r in report.records], lw=1, color=f"C{i + 1}", label=f"T{c}")
    ax_g.set_ylabel("cell level (uA)")
    ax_g.set_xlabel("frame")
    ax_g.legend(loc="best")
    return _save(fig, path)


def plot_ber_map(ber: BerMap, path) -> Path:
    """log10 BER contours per transmitter and for the max-combined map."""
    grid = ber.position_grid()
    maps = [(f"T{i}", v) for i, v in ber.per_tx.items()] + [("max", ber.combined)]
    fig, axes = _new(3.2 * len(maps), 3.2, ncols=len(maps))
    floor = 0.5 / ber.bits_per_point
    for ax, (name, values) in zip(np.atleast_1d(axes), maps):
        z = np.log10(np.maximum(values, floor))
        cs = ax.contourf(grid[..., 0], grid[..., 1], z, levels=12, cmap="viridis")
        ax.contour(grid[..., 0], grid[..., 1], z, levels=6, colors="k", linewidths=0.4)
        ax.set_aspect("equal")
        ax.set_title(f"BER {name} ({ber.mode})")
        ax.set_xlabel("x (m)")
        fig.colorbar(cs, ax=ax, shrink=0.8, label="log10 BER")
    np.atleast_1d(axes)[0].set_ylabel("y (m)")
    return _save(fig, path)


def plot_waveform(w: SampledWaveform, path) -> Path:
    fig, ax = _new(6.4, 3.0)
    t = w.times * 1e3
    ax.plot(t, np.asarray(w.samples) * 1e6, lw=0.7)
    id_end = w.n_id_bits * w.samples_per_bit * w.ts * 1e3
    ax.axvspan(0, id_end, color="C1", alpha=0.15, label="cell ID")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("photocurrent (uA)")
    ax.legend(loc="upper right")
    return _save(fig, path)
