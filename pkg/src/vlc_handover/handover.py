"""Kurtosis-peak handover decisions.

A receiver crossing the boundary between two cells sees the two cell-ID
levels converge, which turns the ID waveform from two-level (kurtosis near 1)
into noise-like (kurtosis near 3).  The engine watches for a relative maximum
of the per-frame kurtosis while the two strongest cell levels are close,
then waits to see which cell becomes dominant:

* the neighbour wins for ``confirm_frames`` frames -> hand over;
* the serving cell wins again for ``confirm_frames`` frames -> the user
  turned back, stay connected.

Gains enter only through ratios and kurtosis is invariant to affine changes
of the waveform, so a global brightness change does not alter decisions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .stats import KurtosisReport

__all__ = [
    "Phase",
    "HandoverConfig",
    "HandoverState",
    "HandoverEvent",
    "detect_relative_max",
    "initial_state",
    "process_frame",
    "run_decisions",
]


class Phase(str, enum.Enum):
    CONNECTED = "CONNECTED"
    BOUNDARY_PENDING = "BOUNDARY_PENDING"


@dataclass(frozen=True)
class HandoverConfig:
    peak_window: int = 2
    peak_margin: float = 0.3
    confirm_frames: int = 3
    gain_hysteresis: float = 1.1
    ber_gate: float | None = None  # reserved; BER is evaluated offline only

    def __post_init__(self):
        if self.peak_window < 1 or self.confirm_frames < 1:
            raise ValueError("peak_window and confirm_frames must be >= 1")
        if self.peak_margin <= 0:
            raise ValueError("peak_margin must be > 0")
        if self.gain_hysteresis < 1:
            raise ValueError("gain_hysteresis must be >= 1")

    @property
    def history_len(self) -> int:
        return 2 * self.peak_window + 1


@dataclass(frozen=True)
class HandoverEvent:
    frame_index: int  # frame of the kurtosis peak that initiated the handover
    from_cell: int
    to_cell: int
    kurtosis_at_peak: float
    decided_at: int = field(default=-1, compare=False)  # frame at which it was confirmed

    def __post_init__(self):
        if self.from_cell == self.to_cell:
            raise ValueError("handover to the serving cell")


@dataclass(frozen=True)
class HandoverState:
    serving_cell: int
    cells: tuple[int, ...]
    phase: Phase = Phase.CONNECTED
    history: tuple[tuple[float, tuple[float, ...]], ...] = ()
    frame_index: int = -1
    pending_peak: tuple[int, float] | None = None
    toward_count: int = 0
    back_count: int = 0

    def __post_init__(self):
        if self.serving_cell not in self.cells:
            raise ValueError(f"serving cell {self.serving_cell} not among {self.cells}")


def detect_relative_max(series: Sequence[float], window: int, margin: float) -> list[int]:
    """Indices that are the maximum of their +-window neighbourhood and clear its minimum by ``margin``.

    Only indices with a full window on both sides are considered.  On a
    plateau the first index is reported.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=float)
    if x.size < 2 * window + 1:
        raise ValueError(f"series of length {x.size} is too short for window {window}")
    return [k for k in range(window, x.size - window) if _is_peak(x[k - window:k + window + 1], window, margin)]


def _is_peak(win: np.ndarray, center: int, margin: float) -> bool:
    v = win[center]
    return bool(v >= win.max() and np.all(win[:center] < v) and v >= win.min() + margin)


def initial_state(gains: Mapping[int, float]) -> HandoverState:
    """Attach to the strongest cell."""
    cells = tuple(sorted(gains))
    serving = max(cells, key=lambda c: (gains[c], -c))
    return HandoverState(serving_cell=serving, cells=cells)


def _best_other(gains: Mapping[int, float], serving: int) -> tuple[int, float]:
    others = [(c, g) for c, g in gains.items() if c != serving]
    return max(others, key=lambda cg: (cg[1], -cg[0]))


def process_frame(state: HandoverState, report: KurtosisReport, gains: Mapping[int, float],
                  cfg: HandoverConfig) -> tuple[HandoverState, HandoverEvent | None]:
    """Advance the state machine by one frame."""
    if set(gains) != set(state.cells):
        unknown = set(gains) - set(state.cells)
        missing = set(state.cells) - set(gains)
        raise ValueError(f"gains do not match scene cells (unknown {sorted(unknown)}, missing {sorted(missing)})")
    frame = state.frame_index + 1
    entry = (float(report.kurtosis), tuple(float(gains[c]) for c in state.cells))
    history = (state.history + (entry,))[-cfg.history_len:]
    state = replace(state, history=history, frame_index=frame)

    if state.phase is Phase.CONNECTED:
        if len(history) < cfg.history_len:
            return state, None
        series = np.array([k for k, _ in history])
        w = cfg.peak_window
        if not _is_peak(series, w, cfg.peak_margin):
            return state, None
        top = sorted(history[w][1], reverse=True)
        if top[0] > cfg.gain_hysteresis * top[1]:
            return state, None
        peak = (frame - w, float(series[w]))
        return replace(state, phase=Phase.BOUNDARY_PENDING, pending_peak=peak,
                       toward_count=0, back_count=0), None

    serving_gain = gains[state.serving_cell]
    other, other_gain = _best_other(gains, state.serving_cell)
    toward = state.toward_count + 1 if other_gain > cfg.gain_hysteresis * serving_gain else 0
    back = state.back_count + 1 if serving_gain > cfg.gain_hysteresis * other_gain else 0

    if toward >= cfg.confirm_frames:
        peak_frame, peak_k = state.pending_peak
        event = HandoverEvent(peak_frame, state.serving_cell, other, peak_k, decided_at=frame)
        return replace(state, serving_cell=other, phase=Phase.CONNECTED, pending_peak=None,
                       toward_count=0, back_count=0), event
    if back >= cfg.confirm_frames:
        return replace(state, phase=Phase.CONNECTED, pending_peak=None,
                       toward_count=0, back_count=0), None
    return replace(state, toward_count=toward, back_count=back), None


def run_decisions(reports: Sequence[KurtosisReport], gains: Sequence[Mapping[int, float]],
                  cfg: HandoverConfig) -> tuple[list[int], list[HandoverEvent]]:
    """Feed a whole trace through the engine; returns serving cell per frame and the events."""
    if len(reports) != len(gains):
        raise ValueError("reports and gains differ in length")
    if not reports:
        return [], []
    state = initial_state(gains[0])
    serving, events = [], []
    for rep, g in zip(reports, gains):
        state, ev = process_frame(state, rep, g, cfg)
        if ev is not None:
            events.append(ev)
        serving.append(state.serving_cell)
    return serving, events
