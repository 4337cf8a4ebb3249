"""OOK framing, received-waveform synthesis and demodulation.

A frame is two cell-ID bits followed by the payload.  Transmitters are
bit-synchronous, so the receiver sees one merged frame whose every bit slot
carries the sum of the contributions of the LEDs that are on in that slot.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scene import Scene

N_ID_BITS = 2
DEFAULT_PAYLOAD_BITS = 62

__all__ = [
    "N_ID_BITS",
    "DEFAULT_PAYLOAD_BITS",
    "Frame",
    "SampledWaveform",
    "build_frame",
    "random_frames",
    "synthesize_received",
    "synthesize_slots",
    "extract_id_segment",
    "estimate_cell_gains",
    "measure_cell_levels",
    "demodulate_ook",
    "waveform_to_csv",
    "waveform_from_csv",
]


@dataclass(frozen=True)
class Frame:
    cell_id: tuple[int, int]
    payload: np.ndarray

    @property
    def bits(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.cell_id, dtype=np.uint8), self.payload])

    def __len__(self):
        return N_ID_BITS + len(self.payload)


@dataclass(frozen=True)
class SampledWaveform:
    """Samples ``y[n] = y(n * ts)`` of one received frame."""

    samples: np.ndarray
    ts: float
    samples_per_bit: int
    n_payload_bits: int
    n_id_bits: int = N_ID_BITS

    def __post_init__(self):
        if self.ts <= 0:
            raise ValueError("ts must be positive")
        expected = self.samples_per_bit * (self.n_id_bits + self.n_payload_bits)
        if len(self.samples) != expected:
            raise ValueError(f"waveform has {len(self.samples)} samples, layout needs {expected}")

    @property
    def n_bits(self) -> int:
        return self.n_id_bits + self.n_payload_bits

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.ts


def _as_bits(bits: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.int64).ravel()
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise ValueError("bits must be 0 or 1")
    return arr.astype(np.uint8)


def build_frame(cell_id: Sequence[int], payload: Sequence[int], payload_len: int | None = None) -> Frame:
    """Prepend the two cell-ID bits to a payload.

    ``payload_len`` is the configured payload length for the run; when given,
    a payload of any other length is rejected.
    """
    cid = tuple(int(b) for b in cell_id)
    if len(cid) != N_ID_BITS or any(b not in (0, 1) for b in cid):
        raise ValueError(f"cell_id must be a bit pair, got {cell_id!r}")
    bits = _as_bits(payload)
    if payload_len is not None and len(bits) != payload_len:
        raise ValueError(f"payload has {len(bits)} bits, expected {payload_len}")
    return Frame(cid, bits)


def random_frames(scene: Scene, rng: np.random.Generator, payload_len: int = DEFAULT_PAYLOAD_BITS) -> list[Frame]:
    """One frame per transmitter with uniform random payload bits."""
    payloads = rng.integers(0, 2, size=(len(scene.transmitters), payload_len), dtype=np.uint8)
    return [build_frame(t.cell_id, p, payload_len) for t, p in zip(scene.transmitters, payloads)]


def synthesize_slots(levels: np.ndarray, bits: np.ndarray, samples_per_bit: int,
                     ambient_dc: float, noise_std: float, rng: np.random.Generator) -> np.ndarray:
    """Vectorised synthesis core.

    ``bits`` has shape ``(n_tx, ..., n_bits)``; ``levels`` has one on-level
    (amps) per transmitter.  Returns noisy samples of shape
    ``(..., n_bits * samples_per_bit)``.  Noise is drawn in one call with
    C-order layout, so a batch of frames reproduces frame-by-frame draws from
    the same generator.
    """
    bits = np.asarray(bits)
    levels = np.asarray(levels, dtype=float).reshape((-1,) + (1,) * (bits.ndim - 1))
    clean = (levels * bits).sum(axis=0) + ambient_dc
    samples = np.repeat(clean, samples_per_bit, axis=-1)
    if noise_std > 0:
        samples = samples + rng.normal(0.0, noise_std, size=samples.shape)
    return samples


def synthesize_received(scene: Scene, rx_pos: Sequence[float], frames: Sequence[Frame],
                        rng: np.random.Generator) -> SampledWaveform:
    """Superimposed NRZ-OOK photocurrent at ``rx_pos`` plus ambient DC and Gaussian noise."""
    if len(frames) != len(scene.transmitters):
        raise ValueError(f"need one frame per transmitter ({len(scene.transmitters)}), got {len(frames)}")
    lengths = {len(f) for f in frames}
    if len(lengths) != 1:
        raise ValueError("all frames must have equal length")
    if not scene.contains(rx_pos):
        raise ValueError(f"receiver position {tuple(rx_pos)} lies outside the room")
    rx = scene.receiver
    bits = np.stack([f.bits for f in frames])
    samples = synthesize_slots(scene.levels(rx_pos), bits, rx.samples_per_bit,
                               rx.ambient_dc, rx.noise_std, rng)
    return SampledWaveform(samples, rx.ts, rx.samples_per_bit, lengths.pop() - N_ID_BITS)


def extract_id_segment(w: SampledWaveform) -> np.ndarray:
    """Cell-ID part of the frame with its mean removed (AC-coupled front end)."""
    n = w.n_id_bits * w.samples_per_bit
    if len(w.samples) < n:
        raise ValueError("waveform shorter than the cell-ID segment")
    seg = np.asarray(w.samples[:n], dtype=float)
    return seg - seg.mean()


def _code_matrix(codebook: Sequence[Sequence[int]]) -> np.ndarray:
    code = np.array([[int(b) for b in cid] for cid in codebook], dtype=float).T
    if code.shape[0] != N_ID_BITS:
        raise ValueError("codebook entries must be bit pairs")
    if np.linalg.matrix_rank(code) < code.shape[1]:
        raise ValueError(
            "codebook does not identify every transmitter's level "
            "(only complementary / independent 2-bit IDs for up to 2 cells are supported)"
        )
    return code


def estimate_cell_gains(id_segment: np.ndarray, codebook: Sequence[Sequence[int]],
                        samples_per_bit: int, baseline: float = 0.0) -> np.ndarray:
    """Per-transmitter received on-levels (amps) from a mean-removed ID segment.

    ``baseline`` is the removed segment mean minus the ambient level; adding
    it back restores levels relative to the all-off photocurrent.  Slot means
    are solved against the code matrix, which for the complementary pair
    01/10 reduces to "level of i = mean of the slot where only i is on".
    Returned in codebook order.
    """
    code = _code_matrix(codebook)
    seg = np.asarray(id_segment, dtype=float)
    if seg.shape[-1] != N_ID_BITS * samples_per_bit:
        raise ValueError("ID segment length does not match samples_per_bit")
    slot_means = seg.reshape(seg.shape[:-1] + (N_ID_BITS, samples_per_bit)).mean(axis=-1)
    slot_means = slot_means + np.asarray(baseline, dtype=float)[..., None]
    # slot_means (..., 2) = code (2, n_tx) @ levels
    pinv = np.linalg.pinv(code)
    return slot_means @ pinv.T


def measure_cell_levels(w: SampledWaveform, codebook: Sequence[Sequence[int]], ambient_dc: float) -> np.ndarray:
    """Level estimates from a raw waveform; ambient DC comes from the reference photodiode."""
    n = w.n_id_bits * w.samples_per_bit
    raw_mean = float(np.mean(w.samples[:n]))
    return estimate_cell_gains(extract_id_segment(w), codebook, w.samples_per_bit, raw_mean - ambient_dc)


def demodulate_ook(w: SampledWaveform | np.ndarray, threshold, samples_per_bit: int | None = None) -> np.ndarray:
    """Slot-average detector: bit is 1 iff the slot mean exceeds the threshold (ties give 0).

    Accepts a ``SampledWaveform`` or a raw sample array (then
    ``samples_per_bit`` is required; leading batch axes are allowed).
    ``threshold`` broadcasts against the per-slot means.
    """
    if isinstance(w, SampledWaveform):
        samples, spb = np.asarray(w.samples, dtype=float), w.samples_per_bit
    else:
        if samples_per_bit is None:
            raise ValueError("samples_per_bit is required for raw sample arrays")
        samples, spb = np.asarray(w, dtype=float), samples_per_bit
    if samples.shape[-1] % spb:
        raise ValueError("sample count is not a whole number of bit slots")
    thr = np.asarray(threshold, dtype=float)
    if not np.all(np.isfinite(thr)):
        raise ValueError("threshold must be finite")
    means = samples.reshape(samples.shape[:-1] + (-1, spb)).mean(axis=-1)
    return (means > thr).astype(np.uint8)


def waveform_to_csv(w: SampledWaveform) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "time_s", "amps"])
    for n, (t, y) in enumerate(zip(w.times, w.samples)):
        writer.writerow([n, repr(float(t)), repr(float(y))])
    return buf.getvalue()


def waveform_from_csv(text: str) -> np.ndarray:
    """Read the ``amps`` column of a waveform CSV (header ``n,time_s,amps``)."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or "amps" not in reader.fieldnames:
        raise ValueError("waveform CSV must have an 'amps' column")
    try:
        return np.array([float(row["amps"]) for row in reader])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed waveform CSV: {exc}") from None
