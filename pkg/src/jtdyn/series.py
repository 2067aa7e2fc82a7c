"""Time-indexed records of expectation values shared by all engines."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ObservableSeries:
    t: np.ndarray
    channels: dict[str, np.ndarray]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        if self.t.ndim != 1:
            raise ValueError("t must be one-dimensional")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("t must be strictly increasing")
        self.channels = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}
        for name, values in self.channels.items():
            if values.shape != self.t.shape:
                raise ValueError(f"channel {name!r} has length {values.size}, expected {self.t.size}")

    def __getitem__(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        return self.channels[name]

    def __contains__(self, name: str) -> bool:
        return name == "t" or name in self.channels

    def __len__(self) -> int:
        return self.t.size

    @property
    def names(self) -> list[str]:
        return list(self.channels)

    def window(self, t_lo: float, t_hi: float) -> "ObservableSeries":
        m = (self.t >= t_lo) & (self.t <= t_hi)
        return ObservableSeries(self.t[m], {k: v[m] for k, v in self.channels.items()}, dict(self.meta))

    def resample(self, times) -> "ObservableSeries":
        times = np.asarray(times, dtype=float)
        if times.size and (times[0] < self.t[0] or times[-1] > self.t[-1]):
            raise ValueError("resample times fall outside the series")
        return ObservableSeries(times, {k: np.interp(times, self.t, v) for k, v in self.channels.items()},
                                dict(self.meta))
