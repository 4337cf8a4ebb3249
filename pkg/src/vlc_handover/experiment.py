"""Trajectory kurtosis/handover runs and BER grids over the room."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import phy
from .handover import HandoverConfig, HandoverEvent, initial_state, process_frame
from .rng import derive_rng
from .scene import Scene, grid_positions, resolve_config_path
from .stats import KurtosisReport, kurtosis

__all__ = [
    "Trajectory",
    "FrameRecord",
    "TrajectoryReport",
    "BerMap",
    "load_trajectory",
    "load_trajectory_file",
    "measure_frame",
    "run_trajectory",
    "ber_at_points",
    "run_ber_map",
    "boundary_visits",
    "export_report",
    "events_to_csv",
]

MODES = ("isolated", "concurrent")
DEFAULT_BITS_PER_POINT = 100_000
DEFAULT_FRAMES_PER_WAYPOINT = 5


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[tuple[str, tuple[float, float]], ...]
    frames_per_waypoint: int = DEFAULT_FRAMES_PER_WAYPOINT

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise ValueError("trajectory needs at least 2 waypoints")
        if self.frames_per_waypoint < 1:
            raise ValueError("frames_per_waypoint must be >= 1")

    @property
    def labels(self) -> list[str]:
        return [lab for lab, _ in self.waypoints]

    def position(self, label: str) -> tuple[float, float]:
        return dict(self.waypoints)[label]


def load_trajectory(text: str) -> Trajectory:
    """Parse ``{frames_per_waypoint: 5, waypoints: [{label: A, pos_m: [x, y]}, ...]}``."""
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict) or not isinstance(doc.get("waypoints"), list):
        raise ValueError("trajectory document needs a 'waypoints' list")
    wps = []
    for i, wp in enumerate(doc["waypoints"]):
        try:
            label = str(wp["label"])
            x, y = (float(v) for v in wp["pos_m"])
        except (KeyError, TypeError, ValueError):
            raise ValueError(f"waypoints[{i}]: expected {{label, pos_m: [x, y]}}") from None
        wps.append((label, (x, y)))
    fpw = doc.get("frames_per_waypoint", DEFAULT_FRAMES_PER_WAYPOINT)
    if isinstance(fpw, bool) or not isinstance(fpw, int):
        raise ValueError("frames_per_waypoint must be an integer")
    return Trajectory(tuple(wps), fpw)


def load_trajectory_file(name_or_path: str) -> Trajectory:
    return load_trajectory(resolve_config_path(name_or_path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class FrameRecord:
    label: str
    position: tuple[float, float]
    frame: int
    report: KurtosisReport
    gains: dict[int, float]
    serving_cell: int


@dataclass(frozen=True)
class TrajectoryReport:
    records: tuple[FrameRecord, ...]
    events: tuple[HandoverEvent, ...]
    cell_ids: tuple[int, ...]

    def waypoint_kurtosis(self) -> dict[str, float]:
        """Mean raw kurtosis per waypoint, in path order."""
        out: dict[str, list[float]] = {}
        for r in self.records:
            out.setdefault(r.label, []).append(r.report.kurtosis)
        return {k: float(np.mean(v)) for k, v in out.items()}

    @property
    def kurtosis_series(self) -> np.ndarray:
        return np.array([r.report.kurtosis for r in self.records])


@dataclass(frozen=True)
class BerMap:
    nx: int
    ny: int
    positions: tuple[tuple[float, float], ...]
    per_tx: dict[int, np.ndarray]  # (ny, nx) per transmitter id
    mode: str
    bits_per_point: int

    @property
    def combined(self) -> np.ndarray:
        return np.max(np.stack(list(self.per_tx.values())), axis=0)

    def position_grid(self) -> np.ndarray:
        return np.asarray(self.positions).reshape(self.ny, self.nx, 2)


def measure_frame(scene: Scene, rx_pos: Sequence[float], rng: np.random.Generator,
                  payload_len: int = phy.DEFAULT_PAYLOAD_BITS) -> tuple[KurtosisReport, dict[int, float]]:
    """One received frame -> (ID-segment kurtosis, per-cell level estimates)."""
    frames = phy.random_frames(scene, rng, payload_len)
    w = phy.synthesize_received(scene, rx_pos, frames, rng)
    rep = kurtosis(phy.extract_id_segment(w))
    codebook = [t.cell_id for t in scene.transmitters]
    levels = phy.measure_cell_levels(w, codebook, scene.receiver.ambient_dc)
    return rep, {t.id: float(v) for t, v in zip(scene.transmitters, levels)}


def run_trajectory(scene: Scene, trajectory: Trajectory, handover_cfg: HandoverConfig | None = None,
                   seed: int = 0, payload_len: int = phy.DEFAULT_PAYLOAD_BITS) -> TrajectoryReport:
    """Walk the path, measuring every frame and feeding the handover engine.

    Frame ``g`` (counted along the whole path) uses stream ``(seed, g, 0)``.
    """
    cfg = handover_cfg or HandoverConfig()
    for label, pos in trajectory.waypoints:
        if not scene.contains(pos):
            raise ValueError(f"waypoint {label} at {pos} lies outside the room")
    records, events = [], []
    state = None
    g = 0
    for label, pos in trajectory.waypoints:
        for _ in range(trajectory.frames_per_waypoint):
            rep, gains = measure_frame(scene, pos, derive_rng(seed, g, 0), payload_len)
            if state is None:
                state = initial_state(gains)
            state, ev = process_frame(state, rep, gains, cfg)
            if ev is not None:
                events.append(ev)
            records.append(FrameRecord(label, pos, g, rep, gains, state.serving_cell))
            g += 1
    return TrajectoryReport(tuple(records), tuple(events), tuple(t.id for t in scene.transmitters))


def _point_ber(scene: Scene, pos, n_bits: int, mode: str, seed: int, p: int,
               payload_len: int) -> np.ndarray:
    rx = scene.receiver
    spb = rx.samples_per_bit
    n_tx = len(scene.transmitters)
    n_frames = math.ceil(n_bits / payload_len)
    ids = np.array([t.cell_id for t in scene.transmitters], dtype=np.uint8)
    levels = scene.levels(pos)
    n_id = phy.N_ID_BITS * spb

    def decode(rng, active: list[int]) -> dict[int, np.ndarray]:
        payload = np.zeros((n_tx, n_frames, payload_len), dtype=np.uint8)
        for i in active:
            payload[i] = rng.integers(0, 2, size=(n_frames, payload_len), dtype=np.uint8)
        id_bits = np.zeros((n_tx, n_frames, phy.N_ID_BITS), dtype=np.uint8)
        id_bits[active] = ids[active][:, None, :]
        bits = np.concatenate([id_bits, payload], axis=-1)
        samples = phy.synthesize_slots(levels, bits, spb, rx.ambient_dc, rx.noise_std, rng)
        raw_id = samples[:, :n_id]
        baseline = raw_id.mean(axis=1) - rx.ambient_dc
        est = phy.estimate_cell_gains(raw_id - raw_id.mean(axis=1, keepdims=True), ids, spb, baseline)
        # midway between the measured cell's on/off levels; every other active
        # cell shifts both by its mean contribution (half its level)
        thr = rx.ambient_dc + 0.5 * est[:, active].sum(axis=1)
        rx_bits = phy.demodulate_ook(samples[:, n_id:], thr[:, None], spb)
        return {i: (rx_bits != payload[i]).ravel()[:n_bits] for i in active}

    out = np.empty(n_tx)
    if mode == "isolated":
        for i in range(n_tx):
            out[i] = decode(derive_rng(seed, p, i), [i])[i].mean()
    else:
        errs = decode(derive_rng(seed, p, 0), list(range(n_tx)))
        for i in range(n_tx):
            out[i] = errs[i].mean()
    return out


def ber_at_points(scene: Scene, positions: Sequence[Sequence[float]], bits_per_point: int = DEFAULT_BITS_PER_POINT,
                  mode: str = "isolated", seed: int = 0,
                  payload_len: int = phy.DEFAULT_PAYLOAD_BITS) -> np.ndarray:
    """Monte Carlo payload BER per transmitter at each position, shape ``(n_points, n_tx)``.

    ``isolated``: only the measured transmitter is lit, stream ``(seed, p, tx_index)``.
    ``concurrent``: all transmit random payloads together, stream ``(seed, p, 0)``.
    Decisions use a per-frame threshold halfway between the measured cell's
    on and off levels, both estimated from the frame's cell-ID bits.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if bits_per_point < 1:
        raise ValueError("bits_per_point must be >= 1")
    if bits_per_point < 10_000:
        warnings.warn(f"bits_per_point={bits_per_point} < 1e4 gives unstable BER estimates", stacklevel=2)
    for pos in positions:
        if not scene.contains(pos):
            raise ValueError(f"point {tuple(pos)} lies outside the room")
    return np.array([_point_ber(scene, pos, bits_per_point, mode, seed, p, payload_len)
                     for p, pos in enumerate(positions)])


def run_ber_map(scene: Scene, nx: int = 8, ny: int = 8, bits_per_point: int = DEFAULT_BITS_PER_POINT,
                mode: str = "isolated", seed: int = 0,
                payload_len: int = phy.DEFAULT_PAYLOAD_BITS) -> BerMap:
    """BER of every transmitter on an ``nx`` x ``ny`` cell-centre grid covering the room."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    positions = grid_positions(scene, nx, ny)
    ber = ber_at_points(scene, positions, bits_per_point, mode, seed, payload_len)
    per_tx = {t.id: ber[:, i].reshape(ny, nx) for i, t in enumerate(scene.transmitters)}
    return BerMap(nx, ny, tuple(positions), per_tx, mode, bits_per_point)


def boundary_visits(scene: Scene, trajectory: Trajectory) -> list[tuple[list[int], int]]:
    """Split a path into visits to the boundary between the two strongest cells.

    Uses the noiseless level imbalance ``|ln(L1 / L2)|`` of the two strongest
    cells at each waypoint.  Its local minima are the boundary waypoints; the
    path is cut at the most imbalanced waypoint between consecutive minima.
    Returns ``(waypoint indices of the visit, index of its boundary waypoint)``.
    """
    imbalance = []
    for _, pos in trajectory.waypoints:
        top = np.sort(scene.levels(pos))[::-1]
        imbalance.append(abs(math.log(top[0] / top[1])) if top[1] > 0 else math.inf)
    x = np.array(imbalance)
    n = len(x)
    minima = [k for k in range(n)
              if (k == 0 or x[k] < x[k - 1]) and (k == n - 1 or x[k] <= x[k + 1])
              and 0 < k < n - 1]
    if not minima:
        minima = [int(np.argmin(x))]
    cuts = [m1 + int(np.argmax(x[m1:m2 + 1])) for m1, m2 in zip(minima, minima[1:])]
    bounds = [0] + [c + 1 for c in cuts] + [n]
    return [(list(range(a, b)), m) for a, b, m in zip(bounds, bounds[1:], minima)]


def _fmt(x) -> str:
    return repr(float(x))


def _trajectory_csv(rep: TrajectoryReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "x_m", "y_m", "frame", "kurtosis", "excess", "class",
                *[f"gain_t{c}_a" for c in rep.cell_ids], "serving_cell"])
    for r in rep.records:
        w.writerow([r.label, _fmt(r.position[0]), _fmt(r.position[1]), r.frame,
                    _fmt(r.report.kurtosis), _fmt(r.report.excess), r.report.classification,
                    *[_fmt(r.gains[c]) for c in rep.cell_ids], r.serving_cell])
    return buf.getvalue()


def events_to_csv(events: Sequence[HandoverEvent]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame_index", "from_cell", "to_cell", "kurtosis_at_peak"])
    for e in events:
        w.writerow([e.frame_index, e.from_cell, e.to_cell, _fmt(e.kurtosis_at_peak)])
    return buf.getvalue()


def _ber_csv(m: BerMap) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    ids = list(m.per_tx)
    w.writerow(["x_m", "y_m", *[f"ber_t{i}" for i in ids], "ber_max"])
    flat = {i: v.ravel() for i, v in m.per_tx.items()}
    comb = m.combined.ravel()
    for k, (x, y) in enumerate(m.positions):
        w.writerow([_fmt(x), _fmt(y), *[_fmt(flat[i][k]) for i in ids], _fmt(comb[k])])
    return buf.getvalue()


def _structured(report) -> dict:
    if isinstance(report, TrajectoryReport):
        return {
            "kind": "trajectory",
            "records": [
                {"label": r.label, "x_m": r.position[0], "y_m": r.position[1], "frame": r.frame,
                 **r.report.as_record(), "gains_a": {str(c): r.gains[c] for c in report.cell_ids},
                 "serving_cell": r.serving_cell}
                for r in report.records
            ],
            "events": [
                {"frame_index": e.frame_index, "from_cell": e.from_cell, "to_cell": e.to_cell,
                 "kurtosis_at_peak": e.kurtosis_at_peak, "decided_at": e.decided_at}
                for e in report.events
            ],
        }
    if isinstance(report, BerMap):
        return {
            "kind": "bermap",
            "mode": report.mode,
            "bits_per_point": report.bits_per_point,
            "nx": report.nx,
            "ny": report.ny,
            "positions": [list(p) for p in report.positions],
            "ber": {f"t{i}": v.tolist() for i, v in report.per_tx.items()},
            "ber_max": report.combined.tolist(),
        }
    if isinstance(report, KurtosisReport):
        return report.as_record()
    raise TypeError(f"cannot export {type(report).__name__}")


def render_report(report, fmt: str = "csv") -> str:
    if fmt == "csv":
        if isinstance(report, TrajectoryReport):
            return _trajectory_csv(report)
        if isinstance(report, BerMap):
            return _ber_csv(report)
        if isinstance(report, KurtosisReport):
            rec = report.as_record()
            return ",".join(rec) + "\n" + ",".join(
                v if isinstance(v, str) else str(v) if isinstance(v, int) else _fmt(v) for v in rec.values()
            ) + "\n"
        raise TypeError(f"cannot export {type(report).__name__}")
    if fmt == "json":
        return json.dumps(_structured(report), indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown format {fmt!r} (csv or json)")


def export_report(report, path: str | Path, fmt: str = "csv") -> None:
    """Write a report as CSV or JSON.  Output bytes depend only on the report."""
    text = render_report(report, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
