"""Deterministic random streams.

Every stochastic quantity in a run is drawn from a ``numpy.random.Generator``
backed by PCG64 (128-bit state, 64-bit output).  A run has one integer
master seed; the stream used at position ``p`` (frame index or grid-point
index) and repetition ``r`` (sub-run index, e.g. the measured transmitter) is

    key  = SHA-256( u64le(master_seed) || u64le(p) || u64le(r) )
    seed = int.from_bytes(key[:8], "little")
    gen  = numpy.random.Generator(numpy.random.PCG64(seed))

``u64le`` is the 8-byte little-endian encoding of the value modulo 2**64.
Streams therefore do not depend on evaluation order, so points may be
computed in any order or in parallel.
"""

import hashlib
import struct

import numpy as np

MASK64 = (1 << 64) - 1


def stream_seed(master_seed: int, p: int, r: int = 0) -> int:
    raw = struct.pack("<QQQ", master_seed & MASK64, p & MASK64, r & MASK64)
    return int.from_bytes(hashlib.sha256(raw).digest()[:8], "little")


def derive_rng(master_seed: int, p: int, r: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(stream_seed(master_seed, p, r)))
