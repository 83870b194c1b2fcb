"""Event-level model of the SFQ programming chain.

Pulses are produced by a dc/SFQ converter, travel down a Josephson
transmission line and are routed through a binary DEMUX tree to one DAC of
an array. The back-action of the stored DAC flux on the front end is
modelled as a digit-dependent margin: a pulse is dropped when the DAC has
no room left in its direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .config import validate
from .dac import DacState
from .errors import ConfigError, InvalidParameterError, RoutingError, ScheduleError
from .waveform import PulseWaveform


@dataclass(frozen=True)
class SfqPulse:
    polarity: int
    time: float
    target_port: int | None = None
    dropped: bool = False

    def __post_init__(self):
        if self.polarity not in (1, -1):
            raise InvalidParameterError("polarity", f"must be +1 or -1, got {self.polarity!r}")


@dataclass(frozen=True)
class MarginProfile:
    digit: int
    positive_margin: int
    negative_margin: int

    @property
    def total(self) -> int:
        return self.positive_margin + self.negative_margin

    def remaining(self, polarity: int) -> int:
        return self.positive_margin if polarity > 0 else self.negative_margin


def margins(dac: DacState) -> MarginProfile:
    """Number of further +1 and -1 SFQ pulses the DAC can absorb."""
    return MarginProfile(dac.digit, dac.n_max - dac.digit, dac.digit - dac.n_min)


def window_margin_model(window: tuple[int, int]) -> Callable[[int], MarginProfile]:
    n_min, n_max = window
    return lambda digit: MarginProfile(digit, n_max - digit, digit - n_min)


def dc_sfq_convert(
    trigger: PulseWaveform,
    bias: float,
    threshold: float,
    operating_margin: tuple[float, float] = (0.7, 1.3),
) -> list[SfqPulse]:
    """One SFQ pulse per trigger excursion beyond ``threshold``.

    The pulse is stamped at the moment the excursion first crosses the
    threshold and takes the sign of the excursion. Nothing is emitted when
    ``bias`` lies outside ``operating_margin``.
    """
    if not threshold > 0:
        raise InvalidParameterError("threshold", f"must be positive, got {threshold!r}")
    lo, hi = operating_margin
    if not lo <= bias <= hi:
        return []
    t = trigger.times
    v = trigger.values - trigger.baseline
    level = np.where(v >= threshold, 1, np.where(v <= -threshold, -1, 0))
    pulses = []
    if level[0] != 0:
        pulses.append(SfqPulse(int(level[0]), float(t[0])))
    for i in range(1, len(t)):
        if level[i] != 0 and level[i] != level[i - 1]:
            s = level[i]
            # linear crossing inside the segment (i-1, i)
            v0, v1 = v[i - 1], v[i]
            frac = (s * threshold - v0) / (v1 - v0)
            pulses.append(SfqPulse(int(s), float(t[i - 1] + frac * (t[i] - t[i - 1]))))
    return pulses


def jtl_propagate(
    pulses: Sequence[SfqPulse],
    stages: int,
    delay_per_stage: float = 1.0,
    downstream_digit: int = 0,
    margin_model: Callable[[int], MarginProfile] | tuple[int, int] | None = None,
) -> list[SfqPulse]:
    """Delay pulses through ``stages`` JTL cells and drop those the
    downstream DAC cannot accept.

    Pulses are handled in time order; each accepted pulse moves the
    downstream digit by its polarity before the next one is checked. Dropped
    pulses stay in the output with ``dropped=True``.
    """
    if stages < 0:
        raise InvalidParameterError("stages", f"must be >= 0, got {stages!r}")
    if isinstance(margin_model, tuple):
        margin_model = window_margin_model(margin_model)
    shift = stages * delay_per_stage
    out = []
    digit = downstream_digit
    for p in sorted(pulses, key=lambda p: p.time):
        if p.dropped:
            out.append(replace(p, time=p.time + shift))
            continue
        ok = margin_model is None or margin_model(digit).remaining(p.polarity) > 0
        if ok:
            digit += p.polarity
        out.append(replace(p, time=p.time + shift, dropped=not ok))
    return out


def program_dac_sfq(dac: DacState, count: int, polarity: int) -> tuple[DacState, int]:
    """Send ``count`` SFQ pulses of one polarity; returns ``(state, applied)``.

    Pulses beyond the available margin are dropped, so the DAC saturates at
    its window edge.
    """
    if count < 0:
        raise InvalidParameterError("count", f"must be >= 0, got {count!r}")
    if polarity not in (1, -1):
        raise InvalidParameterError("polarity", f"must be +1 or -1, got {polarity!r}")
    applied = min(count, margins(dac).remaining(polarity))
    new = dac.with_event(
        "sfq_train", dac.digit + polarity * applied,
        polarity=polarity, requested=int(count), applied=int(applied), dropped=int(count - applied),
    )
    return new, applied


@dataclass(frozen=True)
class DemuxTree:
    depth: int

    def __post_init__(self):
        if self.depth < 0:
            raise InvalidParameterError("depth", f"must be >= 0, got {self.depth!r}")

    @property
    def port_count(self) -> int:
        return 1 << self.depth

    @property
    def select_lines(self) -> int:
        return self.depth

    @classmethod
    def for_ports(cls, n: int) -> "DemuxTree":
        if n < 1 or n & (n - 1):
            raise InvalidParameterError("n", f"port count must be a power of two, got {n}")
        return cls(n.bit_length() - 1)


def parse_select(select: str | Sequence[int] | int, depth: int | None = None) -> tuple[int, ...]:
    """Normalise ``"101"``, ``[1, 0, 1]`` or an int (needs ``depth``) to a bit tuple."""
    if isinstance(select, str):
        if any(c not in "01" for c in select):
            raise RoutingError(f"select {select!r} is not a binary string")
        return tuple(int(c) for c in select)
    if isinstance(select, (int, np.integer)):
        if depth is None:
            raise RoutingError("integer select needs an explicit depth")
        if not 0 <= select < (1 << depth):
            raise RoutingError(f"select {select} out of range for depth {depth}")
        return tuple((int(select) >> (depth - 1 - i)) & 1 for i in range(depth))
    bits = tuple(int(b) for b in select)
    if any(b not in (0, 1) for b in bits):
        raise RoutingError(f"select {select!r} contains non-binary values")
    return bits


def demux_route(tree: DemuxTree, select: str | Sequence[int], pulse: SfqPulse | None = None) -> int:
    """Output port reached through the tree; the first select bit drives the
    first (root) stage and is the most significant address bit."""
    bits = parse_select(select, tree.depth)
    if len(bits) != tree.depth:
        raise RoutingError(f"select has {len(bits)} bits, tree depth is {tree.depth}")
    port = 0
    for b in bits:
        port = (port << 1) | b
    return port


@dataclass(frozen=True)
class ScheduleEntry:
    select: str
    polarity: int
    count: int

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ScheduleEntry":
        sel = d["select"]
        if not isinstance(sel, str):
            sel = "".join(str(int(b)) for b in sel)
        return cls(sel, int(d["polarity"]), int(d["count"]))

    def to_dict(self) -> dict[str, Any]:
        return {"select": self.select, "polarity": self.polarity, "count": self.count}


def load_schedule(text: str) -> list[ScheduleEntry]:
    """Parse and validate a JSON schedule
    ``[{"select": "101", "polarity": 1, "count": 12}, ...]``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("schedule", f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    validate(doc, "schedule")
    return [ScheduleEntry.from_dict(d) for d in doc]


def program_array(
    dacs: Sequence[DacState],
    tree: DemuxTree,
    schedule: Iterable[ScheduleEntry | dict[str, Any] | tuple],
) -> list[DacState]:
    """Apply a programming schedule to a DAC array addressed by ``tree``."""
    if len(dacs) != tree.port_count:
        raise InvalidParameterError("dacs", f"{len(dacs)} DACs for a tree with {tree.port_count} ports")
    states = list(dacs)
    for i, entry in enumerate(schedule):
        try:
            if isinstance(entry, dict):
                entry = ScheduleEntry.from_dict(entry)
            elif not isinstance(entry, ScheduleEntry):
                entry = ScheduleEntry(*entry)
            port = demux_route(tree, entry.select)
            states[port], _ = program_dac_sfq(states[port], entry.count, entry.polarity)
        except (RoutingError, InvalidParameterError, KeyError, TypeError, ValueError) as exc:
            raise ScheduleError(i, exc) from exc
    return states


def array_report(dacs: Sequence[DacState]) -> list[dict[str, Any]]:
    """Per-DAC digit and SFQ applied/dropped totals."""
    report = []
    for port, dac in enumerate(dacs):
        sfq = [ev for ev in dac.event_log if ev.kind == "sfq_train"]
        report.append({
            "port": port,
            "digit": dac.digit,
            "applied": sum(ev.params["applied"] for ev in sfq),
            "dropped": sum(ev.params["dropped"] for ev in sfq),
        })
    return report
