"""Piecewise-linear drive waveforms in dimensionless time."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import WaveformError


@dataclass(frozen=True, eq=False)
class PulseWaveform:
    """A piecewise-linear signal defined by knots ``(times[i], values[i])``.

    The signal is held at ``values[0]`` before the first knot and at
    ``values[-1]`` (the baseline) after the last one.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size == 0:
            raise WaveformError("times and values must be equal-length, non-empty 1-d sequences")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise WaveformError("waveform knots must be finite")
        if np.any(np.diff(t) <= 0):
            raise WaveformError("knot times must be strictly increasing")
        if t[0] < 0:
            raise WaveformError("waveform must start at tau >= 0")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float = 0.0) -> "PulseWaveform":
        return cls(np.array([0.0]), np.array([float(value)]))

    @classmethod
    def square(
        cls,
        amplitude: float,
        rise: float = 1000.0,
        hold: float = 1000.0,
        fall: float = 1000.0,
        delay: float = 0.0,
        baseline: float = 0.0,
    ) -> "PulseWaveform":
        """Trapezoidal pulse of height ``amplitude`` above ``baseline``."""
        return cls.train([amplitude], rise=rise, hold=hold, fall=fall, gap=0.0, delay=delay, baseline=baseline)

    @classmethod
    def train(
        cls,
        amplitudes: Sequence[float],
        rise: float = 1.0,
        hold: float = 1.0,
        fall: float = 1.0,
        gap: float = 1.0,
        delay: float = 0.0,
        baseline: float = 0.0,
    ) -> "PulseWaveform":
        """Sequence of trapezoidal pulses separated by ``gap`` at baseline.

        Amplitudes may be signed; a zero amplitude leaves a flat slot.
        """
        if min(rise, fall) <= 0 or min(hold, gap, delay) < 0:
            raise WaveformError("rise and fall must be positive; hold, gap and delay non-negative")
        times = [0.0]
        values = [baseline]
        t = delay
        for k, a in enumerate(amplitudes):
            if k > 0:
                t += gap
            if t > times[-1]:
                times.append(t)
                values.append(baseline)
            times += [t + rise]
            values += [baseline + a]
            if hold > 0:
                times.append(t + rise + hold)
                values.append(baseline + a)
            t += rise + hold + fall
            times.append(t)
            values.append(baseline)
        return cls(np.array(times), np.array(values))

    @property
    def end(self) -> float:
        """Time after which the waveform sits at its baseline."""
        return float(self.times[-1])

    @property
    def baseline(self) -> float:
        return float(self.values[-1])

    @property
    def peak(self) -> float:
        """Largest excursion from baseline, signed."""
        dev = self.values - self.baseline
        return float(dev[np.argmax(np.abs(dev))])

    def __call__(self, tau):
        return np.interp(tau, self.times, self.values)

    def scaled(self, gain: float, offset: float = 0.0) -> "PulseWaveform":
        """Return ``gain * self + offset``."""
        return PulseWaveform(self.times.copy(), gain * self.values + offset)
