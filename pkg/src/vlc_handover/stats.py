"""Moment statistics of the cell-ID waveform, bit error rate and analytic references."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

__all__ = [
    "MESOKURTIC_BAND",
    "DEFAULT_BINS",
    "ZeroVarianceError",
    "KurtosisReport",
    "HistogramPdf",
    "kurtosis",
    "classify_excess",
    "histogram_pdf",
    "bit_error_rate",
    "bimodal_kurtosis_analytic",
    "q_function",
]

MESOKURTIC_BAND = 0.5
DEFAULT_BINS = 32


class ZeroVarianceError(ValueError):
    """Kurtosis is undefined for constant input."""

    def __init__(self, msg="zero variance: kurtosis undefined for constant samples"):
        super().__init__(msg)


@dataclass(frozen=True)
class KurtosisReport:
    kurtosis: float
    excess: float
    mean: float
    std: float
    n: int
    classification: str

    def as_record(self) -> dict:
        return {
            "kurtosis": self.kurtosis,
            "excess": self.excess,
            "mean": self.mean,
            "std": self.std,
            "n": self.n,
            "class": self.classification,
        }


@dataclass(frozen=True)
class HistogramPdf:
    bin_edges: np.ndarray
    probabilities: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


def classify_excess(excess: float, band: float = MESOKURTIC_BAND) -> str:
    if excess < -band:
        return "platykurtic"
    if excess > band:
        return "leptokurtic"
    return "mesokurtic"


def kurtosis(samples) -> KurtosisReport:
    """Raw kurtosis ``mean((y - ybar)^4) / s^4`` with population ``s`` (divisor N).

    Gaussian data gives 3, a balanced two-level signal gives 1.  The class is
    decided on the excess (raw - 3) with a +-0.5 mesokurtic band.
    """
    y = np.asarray(samples, dtype=float).ravel()
    n = y.size
    if n < 4:
        raise ValueError(f"kurtosis needs at least 4 samples, got {n}")
    mean = float(y.mean())
    dev = y - mean
    m2 = float(np.mean(dev * dev))
    scale = max(abs(mean), float(np.max(np.abs(y))))
    # variance below float resolution of the data is treated as constant
    if m2 == 0.0 or math.sqrt(m2) <= scale * 1e-15:
        raise ZeroVarianceError()
    m4 = float(np.mean(dev**4))
    k = m4 / (m2 * m2)
    excess = k - 3.0
    return KurtosisReport(k, excess, mean, math.sqrt(m2), n, classify_excess(excess))


def histogram_pdf(samples, n_bins: int = DEFAULT_BINS) -> HistogramPdf:
    """Equal-width histogram over [min, max], normalised to probabilities."""
    y = np.asarray(samples, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("histogram of empty input")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    lo, hi = float(y.min()), float(y.max())
    if hi == lo:
        return HistogramPdf(np.array([lo - 0.5, lo + 0.5]), np.array([1.0]))
    counts, edges = np.histogram(y, bins=n_bins, range=(lo, hi))
    return HistogramPdf(edges, counts / y.size)


def bit_error_rate(tx_bits, rx_bits) -> float:
    """Fraction of positions where the two bit sequences differ."""
    a = np.asarray(tx_bits).ravel()
    b = np.asarray(rx_bits).ravel()
    if a.size == 0:
        raise ValueError("BER of empty sequences")
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return float(np.count_nonzero(a != b)) / a.size


def bimodal_kurtosis_analytic(level_gap_half: float, noise_std: float) -> float:
    """Kurtosis of ``+-d`` (equiprobable) plus Gaussian noise of std ``sigma``.

    ``(d^4 + 6 d^2 s^2 + 3 s^4) / (d^2 + s^2)^2``: 3 for pure noise, 1 for a
    noiseless two-level signal.
    """
    d, s = abs(float(level_gap_half)), abs(float(noise_std))
    if d == 0 and s == 0:
        raise ValueError("level gap and noise cannot both be zero")
    # written in the ratio r = d/s (or s/d) to stay finite for extreme scales
    if s >= d:
        r2 = (d / s) ** 2
        return (r2 * r2 + 6 * r2 + 3) / (r2 + 1) ** 2
    t2 = (s / d) ** 2
    return (1 + 6 * t2 + 3 * t2 * t2) / (1 + t2) ** 2


def q_function(x):
    """Gaussian tail probability ``P(Z > x)``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
