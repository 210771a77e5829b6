"""Poisson spike-train encoding of intensity images.

Each pixel becomes an independent Poisson process whose rate is proportional
to its intensity: a full-scale pixel (255) fires at ``max_rate_hz`` and a zero
pixel emits nothing at all.  Spike times are integer cycles in
``[0, duration_cycles)`` and the draw is fully determined by the seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PoissonEncoder:
    duration_cycles: int
    max_rate_hz: float = 250.0
    f_clk_mhz: float = 55.0

    def __post_init__(self):
        if self.duration_cycles < 1:
            raise ValueError("duration_cycles must be >= 1")
        if self.max_rate_hz < 0 or self.f_clk_mhz <= 0:
            raise ValueError("rates must be non-negative, clock positive")

    @property
    def duration_s(self) -> float:
        return self.duration_cycles / (self.f_clk_mhz * 1e6)

    def expected_counts(self, intensities) -> np.ndarray:
        """Mean spike count per pixel for this window (float array)."""
        inten = np.asarray(intensities, dtype=np.float64).reshape(-1)
        if inten.size and (inten.min() < 0 or inten.max() > 255):
            raise ValueError("intensities must lie in [0, 255]")
        return (inten / 255.0) * self.max_rate_hz * self.duration_s

    def encode(self, intensities, seed: int) -> list[tuple[int, int]]:
        """Spike train for one image: [(cycle, pixel_index)] sorted by cycle.

        ``intensities`` is any array-like of values in [0, 255]; it is
        flattened, and the pixel index is the flat position.
        """
        lam = self.expected_counts(intensities)
        rng = np.random.default_rng(seed)
        counts = rng.poisson(lam)
        total = int(counts.sum())
        if total == 0:
            return []
        axons = np.repeat(np.arange(lam.size, dtype=np.int64), counts)
        times = rng.integers(0, self.duration_cycles, size=total)
        order = np.lexsort((axons, times))
        return list(zip(times[order].tolist(), axons[order].tolist()))
