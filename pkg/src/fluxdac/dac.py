"""Digit-level model of the flux DAC.

A :class:`DacState` is an immutable value: every programming operation
returns a new state with one more entry in its event log.

Bias pulses tilt the loop potential by ``2 pi (phi_trap + polarity *
bias_coupling * amplitude)`` radians. Trapped flux is a static offset on
the tilt, which is what makes the positive and negative thresholds differ.
Two interchangeable execution paths exist: ``"exact-physics"`` integrates
the RCSJ equation for every pulse, ``"threshold-table"`` compares the pulse
tilt with the static critical tilts of the wells.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Literal, Sequence

import numpy as np

from . import squid
from .errors import InvalidParameterError, WindowOverflowError
from .squid import TWO_PI
from .units import DerivedParams, DeviceParams, derive
from .waveform import PulseWaveform

Mode = Literal["exact-physics", "threshold-table"]

DEFAULT_USABLE_FRACTION = 0.96


@dataclass(frozen=True)
class PulseShape:
    """Rise/hold/fall of a square bias pulse, in units of 1/omega_c."""

    rise: float = 1000.0
    hold: float = 1000.0
    fall: float = 1000.0


@dataclass(frozen=True)
class DacEvent:
    ordinal: int
    kind: str
    params: dict[str, Any]
    digit: int

    def to_dict(self) -> dict[str, Any]:
        return {"ordinal": self.ordinal, "kind": self.kind, "params": self.params, "digit": self.digit}


@dataclass(frozen=True)
class _Landscape:
    derived: DerivedParams
    baseline: float  # rad
    escape_tilt: float  # critical tilt of well 0, positive direction
    ideal_window: tuple[int, int]


@functools.lru_cache(maxsize=64)
def _landscape(device: DeviceParams) -> _Landscape:
    derived = derive(device)
    baseline = TWO_PI * device.phi_trap
    c0 = squid.critical_tilt(derived.beta_l, 0, +1)
    return _Landscape(derived, baseline, c0, squid.stable_indices(baseline, derived.beta_l))


def ideal_window(device: DeviceParams) -> tuple[int, int]:
    """Digits whose wells are stable with no bias applied."""
    return _landscape(device).ideal_window


def usable_window(device: DeviceParams, usable_fraction: float = DEFAULT_USABLE_FRACTION) -> tuple[int, int]:
    """Ideal window shrunk about its centre by ``usable_fraction``."""
    if not 0 < usable_fraction <= 1:
        raise InvalidParameterError("usable_fraction", f"must be in (0, 1], got {usable_fraction!r}")
    lo, hi = ideal_window(device)
    centre = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo) * usable_fraction
    # guard against 36.999999 -> 36 from the product above
    return math.ceil(centre - half - 1e-9), math.floor(centre + half + 1e-9)


@dataclass(frozen=True)
class DacState:
    digit: int
    window: tuple[int, int]
    device: DeviceParams
    event_log: tuple[DacEvent, ...] = field(default=(), repr=False)

    def __post_init__(self):
        n_min, n_max = self.window
        if not n_min <= self.digit <= n_max:
            raise InvalidParameterError("digit", f"{self.digit} outside window [{n_min}, {n_max}]")

    @classmethod
    def initial(
        cls,
        device: DeviceParams,
        digit: int = 0,
        usable_fraction: float = DEFAULT_USABLE_FRACTION,
        window: tuple[int, int] | None = None,
    ) -> "DacState":
        if window is None:
            window = usable_window(device, usable_fraction)
        return cls(digit=int(digit), window=(int(window[0]), int(window[1])), device=device)

    @property
    def n_min(self) -> int:
        return self.window[0]

    @property
    def n_max(self) -> int:
        return self.window[1]

    @property
    def span(self) -> int:
        return self.window[1] - self.window[0]

    def with_event(self, kind: str, digit: int, **params: Any) -> "DacState":
        ev = DacEvent(len(self.event_log), kind, params, int(digit))
        return replace(self, digit=int(digit), event_log=self.event_log + (ev,))

    def events_jsonl(self) -> str:
        """Event log as JSON lines, one event per line."""
        return "".join(json.dumps(ev.to_dict(), sort_keys=True) + "\n" for ev in self.event_log)


def pulse_tilt(device: DeviceParams, amplitude: float, polarity: int) -> float:
    """Peak external phase (rad) reached by a bias pulse."""
    return TWO_PI * (device.phi_trap + polarity * device.bias_coupling * amplitude)


def _tilt_to_amplitude(device: DeviceParams, tilt: float, polarity: int) -> float:
    return (tilt / TWO_PI - device.phi_trap) / (polarity * device.bias_coupling)


def step_threshold(device: DeviceParams, digit: int, polarity: int, steps: int = 1) -> float:
    """Smallest pulse amplitude (mA) moving the DAC at least ``steps`` digits
    away from ``digit`` in the direction ``polarity``."""
    _check_polarity(polarity)
    c0 = _landscape(device).escape_tilt
    # critical tilts of successive wells are spaced by exactly 2 pi
    last = digit + polarity * (steps - 1)
    tilt = polarity * c0 + TWO_PI * last
    return _tilt_to_amplitude(device, tilt, polarity)


def single_step_amplitude(device: DeviceParams, digit: int, polarity: int) -> float:
    """Amplitude in the middle of the single-step plateau from ``digit``."""
    return 0.5 * (step_threshold(device, digit, polarity, 1) + step_threshold(device, digit, polarity, 2))


def _check_polarity(polarity):
    if polarity not in (1, -1):
        raise InvalidParameterError("polarity", f"must be +1 or -1, got {polarity!r}")


def _table_landing(device: DeviceParams, digit: int, tilt: float, polarity: int) -> int:
    land = _landscape(device)
    c0 = land.escape_tilt
    if polarity > 0:
        k = max(digit, math.floor((tilt - c0) / TWO_PI) + 1)
        return min(k, land.ideal_window[1])
    k = min(digit, math.ceil((tilt + c0) / TWO_PI) - 1)
    return max(k, land.ideal_window[0])


def _physics_landing(device: DeviceParams, digit: int, tilt: float, pulse: PulseShape) -> int:
    land = _landscape(device)
    start = next(w for w in squid.find_minima(land.baseline, land.derived.beta_l) if w.index_n == digit)
    wf = PulseWaveform.square(tilt - land.baseline, pulse.rise, pulse.hold, pulse.fall, baseline=land.baseline)
    traj = squid.rcsj_transient(start.phi_min, wf, land.derived, sample_every=1000)
    if traj.final_state is None:
        raise FloatingPointError("RCSJ integration diverged")
    return traj.final_state.index_n


def apply_bias_pulse(
    state: DacState,
    amplitude: float,
    polarity: int,
    mode: Mode = "threshold-table",
    *,
    pulse: PulseShape | None = None,
    on_overflow: Literal["raise", "clamp"] = "raise",
    kind: str = "bias_pulse",
) -> tuple[DacState, int]:
    """Apply one square bias pulse and return ``(new_state, delta_digit)``.

    Raises :class:`WindowOverflowError` (carrying the clamped state) when the
    landing digit is outside the usable window, unless ``on_overflow`` is
    ``"clamp"``.
    """
    _check_polarity(polarity)
    if not amplitude >= 0:
        raise InvalidParameterError("amplitude", f"must be non-negative, got {amplitude!r}")
    device = state.device
    tilt = pulse_tilt(device, amplitude, polarity)
    if mode == "threshold-table":
        landing = _table_landing(device, state.digit, tilt, polarity)
    elif mode == "exact-physics":
        landing = _physics_landing(device, state.digit, tilt, pulse or PulseShape())
    else:
        raise InvalidParameterError("mode", f"unknown mode {mode!r}")

    clamped = min(max(landing, state.n_min), state.n_max)
    new = state.with_event(kind, clamped, amplitude=float(amplitude), polarity=polarity, mode=mode,
                           requested_digit=landing)
    if clamped != landing and on_overflow == "raise":
        raise WindowOverflowError(
            f"pulse of {amplitude} mA (polarity {polarity:+d}) from digit {state.digit} lands on "
            f"{landing}, outside window [{state.n_min}, {state.n_max}]",
            state=new,
        )
    return new, clamped - state.digit


def reset(state: DacState, reference_digit: int = 0, cycles: int = 3) -> DacState:
    """Saturate to ``n_max`` and ``n_min`` alternately ``cycles`` times, then
    step one digit at a time up to ``reference_digit``."""
    if cycles < 1:
        raise InvalidParameterError("cycles", f"must be >= 1, got {cycles!r}")
    if not state.n_min <= reference_digit <= state.n_max:
        raise InvalidParameterError("reference_digit", f"{reference_digit} outside window {state.window}")
    device = state.device
    lo, hi = ideal_window(device)
    up = step_threshold(device, lo, +1, steps=hi - lo + 1)
    down = step_threshold(device, hi, -1, steps=hi - lo + 1)
    for _ in range(cycles):
        state, _ = apply_bias_pulse(state, up, +1, on_overflow="clamp", kind="saturate")
        state, _ = apply_bias_pulse(state, down, -1, on_overflow="clamp", kind="saturate")
    while state.digit < reference_digit:
        state, _ = apply_bias_pulse(state, single_step_amplitude(device, state.digit, +1), +1, kind="reset_step")
    return state


def qubit_flux_shift(state: DacState) -> float:
    """Flux the DAC adds to the qubit loop, in mPhi0."""
    return state.digit * state.device.step_mphi0


@dataclass(frozen=True, eq=False)
class PlateauScanResult:
    amplitudes: np.ndarray  # mA
    delta_flux: np.ndarray  # mPhi0
    delta_digit: np.ndarray
    polarity: int


def scan_plateau(
    state: DacState,
    amplitudes: Sequence[float],
    polarity: int,
    *,
    reference_digit: int = 0,
    cycles: int = 3,
    mode: Mode = "threshold-table",
    pulse: PulseShape | None = None,
) -> PlateauScanResult:
    """Qubit-flux change produced by one pulse per amplitude, each applied to a
    freshly reset DAC."""
    _check_polarity(polarity)
    amps = np.asarray(amplitudes, dtype=float)
    if amps.ndim != 1 or amps.size == 0:
        raise InvalidParameterError("amplitudes", "must be a non-empty 1-d sequence")
    if np.any(np.diff(amps) <= 0):
        raise InvalidParameterError("amplitudes", "must be strictly increasing")
    start = reset(state, reference_digit, cycles)
    step = state.device.step_mphi0
    deltas = np.empty(amps.size, dtype=int)
    for i, a in enumerate(amps):
        _, deltas[i] = apply_bias_pulse(start, float(a), polarity, mode, pulse=pulse)
    return PlateauScanResult(amps, deltas * step, deltas, polarity)


@dataclass(frozen=True)
class OutputRange:
    range_phi0: float
    step_count: int
    window: tuple[int, int]


def output_range(device: DeviceParams, usable_fraction: float = DEFAULT_USABLE_FRACTION) -> OutputRange:
    """Analog output span of the DAC: usable digit span times the flux step."""
    lo, hi = usable_window(device, usable_fraction)
    count = hi - lo
    return OutputRange(count * device.step_mphi0 / 1000.0, count, (lo, hi))
