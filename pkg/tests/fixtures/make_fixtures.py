"""Regenerate the bundled test waveforms: ``python tests/fixtures/make_fixtures.py``."""

from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
GAUSSIAN_SEED = 20240601
GAUSSIAN_N = 100_000
TS = 2e-5


def gaussian_samples():
    return np.random.Generator(np.random.PCG64(GAUSSIAN_SEED)).normal(0.0, 1e-6, GAUSSIAN_N)


def write_csv(path, samples):
    lines = ["n,time_s,amps"]
    lines += [f"{n},{n * TS!r},{float(y)!r}" for n, y in enumerate(samples)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


if __name__ == "__main__":
    write_csv(HERE / "gaussian_waveform.csv", gaussian_samples())
    write_csv(HERE / "two_level.csv", [1.0, 1.0, -1.0, -1.0])
    write_csv(HERE / "constant.csv", [0.5] * 8)
