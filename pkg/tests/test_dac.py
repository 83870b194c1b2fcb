import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fluxdac.dac import (
    DacState,
    apply_bias_pulse,
    ideal_window,
    output_range,
    pulse_tilt,
    qubit_flux_shift,
    reset,
    scan_plateau,
    single_step_amplitude,
    step_threshold,
    usable_window,
)
from fluxdac.errors import InvalidParameterError, WindowOverflowError
from fluxdac.squid import critical_tilt
from fluxdac.units import derive, get_preset

TWO_PI = 2 * math.pi


def guarded(device, digit, polarity, amps, guard=0.02):
    """Drop amplitudes within ``guard`` mA of any multi-step threshold, where
    escape slows down without bound (saddle-node bottleneck)."""
    edges = np.array([step_threshold(device, digit, polarity, k) for k in range(1, 6)])
    return [a for a in amps if np.min(np.abs(edges - a)) > guard]


def test_windows(c4r1):
    assert ideal_window(c4r1) == (-38, 38)
    assert usable_window(c4r1) == (-36, 36)
    assert usable_window(c4r1, 1.0) == (-38, 38)
    with pytest.raises(InvalidParameterError):
        usable_window(c4r1, 0.0)


def test_threshold_is_critical_tilt(c4r1):
    beta = derive(c4r1).beta_l
    for n in (-3, 0, 5):
        for pol in (1, -1):
            amp = step_threshold(c4r1, n, pol)
            assert pulse_tilt(c4r1, amp, pol) == pytest.approx(critical_tilt(beta, n, pol), abs=1e-9)


def test_sub_threshold_no_change(c4r1):
    s = DacState.initial(c4r1)
    amp = step_threshold(c4r1, 0, 1) - 0.01
    assert apply_bias_pulse(s, amp, 1)[1] == 0
    assert apply_bias_pulse(s, 0.0, -1)[1] == 0


def test_single_step_plateau(c4r1):
    s = DacState.initial(c4r1)
    for pol in (1, -1):
        new, delta = apply_bias_pulse(s, single_step_amplitude(c4r1, 0, pol), pol)
        assert delta == pol
        assert qubit_flux_shift(new) == pytest.approx(pol * 4.58)


def test_multi_step_is_logged(c4r1):
    s = DacState.initial(c4r1)
    amp = step_threshold(c4r1, 0, 1, steps=3) + 0.1
    new, delta = apply_bias_pulse(s, amp, 1)
    assert delta == 3
    assert new.event_log[-1].params["requested_digit"] == 3


def test_window_overflow(c4r1):
    s = DacState.initial(c4r1, digit=35)
    amp = step_threshold(c4r1, 35, 1, steps=3) + 0.1
    with pytest.raises(WindowOverflowError) as exc:
        apply_bias_pulse(s, amp, 1)
    assert exc.value.state.digit == 36
    clamped, delta = apply_bias_pulse(s, amp, 1, on_overflow="clamp")
    assert clamped.digit == 36 and delta == 1


def test_invalid_pulse_args(c4r1):
    s = DacState.initial(c4r1)
    with pytest.raises(InvalidParameterError):
        apply_bias_pulse(s, -1.0, 1)
    with pytest.raises(InvalidParameterError):
        apply_bias_pulse(s, 1.0, 0)
    with pytest.raises(InvalidParameterError):
        apply_bias_pulse(s, 1.0, 1, mode="fast")


def test_modes_agree_on_50_amplitude_scan(c4r1):
    s = DacState.initial(c4r1)
    amps = guarded(c4r1, 0, 1, np.linspace(38.0, 41.5, 60))[:50]
    assert len(amps) == 50
    for a in amps:
        table = apply_bias_pulse(s, a, 1, "threshold-table")[1]
        phys = apply_bias_pulse(s, a, 1, "exact-physics")[1]
        assert table == phys, a


@pytest.mark.parametrize("seed", [0, 1])
def test_modes_agree_on_random_sequences(c4r1, seed):
    rng = np.random.default_rng(seed)
    table = phys = DacState.initial(c4r1)
    for _ in range(int(rng.integers(5, 11))):
        pol = int(rng.choice([1, -1]))
        lo = step_threshold(c4r1, table.digit, pol) - 0.5
        hi = step_threshold(c4r1, table.digit, pol, steps=3) + 0.3
        amps = guarded(c4r1, table.digit, pol, rng.uniform(lo, hi, 20))
        table, _ = apply_bias_pulse(table, amps[0], pol, "threshold-table")
        phys, _ = apply_bias_pulse(phys, amps[0], pol, "exact-physics")
        assert table.digit == phys.digit


def test_trapped_flux_breaks_symmetry():
    sym = get_preset("C4R1-DAC1")
    assert step_threshold(sym, 0, 1) == pytest.approx(step_threshold(sym, 0, -1), abs=1e-12)
    trapped = replace(sym, phi_trap=0.2)
    up, down = step_threshold(trapped, 0, 1), step_threshold(trapped, 0, -1)
    assert down - up == pytest.approx(0.4, abs=1e-9)


@pytest.mark.parametrize("trap", [-0.3, -0.1, 0.0, 0.17, 0.3])
def test_reset_reaches_reference_from_every_digit(c4r1, trap):
    dev = replace(c4r1, phi_trap=trap)
    win = usable_window(dev)
    for d in range(win[0], win[1] + 1):
        assert reset(DacState.initial(dev, digit=d), 0, 3).digit == 0


def test_reset_to_window_edge_and_idempotence(c4r1):
    s = DacState.initial(c4r1, digit=-7)
    assert reset(s, s.n_max).digit == s.n_max
    once = reset(s, 4)
    twice = reset(once, 4)
    assert once.digit == twice.digit == 4
    kinds = [e.kind for e in once.event_log]
    assert kinds.count("saturate") == 6


def test_reset_validation(c4r1):
    s = DacState.initial(c4r1)
    with pytest.raises(InvalidParameterError):
        reset(s, 0, cycles=0)
    with pytest.raises(InvalidParameterError):
        reset(s, 99)


def test_plateau_threshold_ordering(c4r1):
    lo, hi = usable_window(c4r1)
    for d in range(lo, hi + 1):
        for pol in (1, -1):
            assert step_threshold(c4r1, d, pol, 2) > step_threshold(c4r1, d, pol, 1)


def test_window_centred_on_trap(c4r1):
    for trap in (-0.3, 0.25):
        lo, hi = usable_window(replace(c4r1, phi_trap=trap))
        assert abs((lo + hi) / 2 - trap) <= 1.0


def test_flux_shift_examples():
    s = DacState.initial(get_preset("C4R1-DAC1"))
    assert qubit_flux_shift(s) == 0
    assert qubit_flux_shift(replace(s, digit=1)) == pytest.approx(4.58)
    s2 = DacState.initial(get_preset("C1R5-DAC2"), digit=10)
    assert qubit_flux_shift(s2) == pytest.approx(47.0)


@given(st.lists(st.tuples(st.floats(0, 45), st.sampled_from([1, -1])), max_size=15))
def test_quantization(pulses):
    dev = get_preset("C4R1-DAC1")
    s = DacState.initial(dev)
    for amp, pol in pulses:
        s, delta = apply_bias_pulse(s, amp, pol, on_overflow="clamp")
        assert isinstance(delta, int)
        assert s.n_min <= s.digit <= s.n_max
        assert qubit_flux_shift(s) == pytest.approx(s.digit * dev.step_mphi0, abs=1e-12)


def test_scan_plateau(c4r1):
    amps = np.arange(38.0, 41.0, 0.05)
    res = scan_plateau(DacState.initial(c4r1, digit=5), amps, 1)
    assert len(res.amplitudes) == len(res.delta_flux) == len(amps)
    first = step_threshold(c4r1, 0, 1)
    assert np.all(res.delta_flux[amps < first] == 0)
    single = (amps > first) & (amps < step_threshold(c4r1, 0, 1, 2))
    assert np.allclose(res.delta_flux[single], 4.58)
    neg = scan_plateau(DacState.initial(c4r1), amps, -1)
    assert np.array_equal(neg.delta_flux, -res.delta_flux)


def test_scan_plateau_validation(c4r1):
    s = DacState.initial(c4r1)
    with pytest.raises(InvalidParameterError):
        scan_plateau(s, [], 1)
    with pytest.raises(InvalidParameterError):
        scan_plateau(s, [39.0, 38.0], 1)


def test_output_range(c4r1):
    r = output_range(c4r1)
    assert r.step_count == 72
    assert r.range_phi0 == pytest.approx(r.step_count * 4.58e-3)
    ideal = output_range(c4r1, 1.0)
    assert ideal.window == (-38, 38)
    # the chip's measured range is carried with the preset, not derived
    assert c4r1.meta["range_measured_phi0"] == 0.70


def test_event_log_json_lines(c4r1):
    s = DacState.initial(c4r1)
    s, _ = apply_bias_pulse(s, single_step_amplitude(c4r1, 0, 1), 1)
    s, _ = apply_bias_pulse(s, single_step_amplitude(c4r1, 1, -1), -1)
    lines = s.events_jsonl().splitlines()
    assert len(lines) == 2
    events = [json.loads(line) for line in lines]
    assert [e["ordinal"] for e in events] == [0, 1]
    assert events[0]["digit"] == 1 and events[1]["digit"] == 0
    assert events[0]["kind"] == "bias_pulse"


def test_state_invariant(c4r1):
    with pytest.raises(InvalidParameterError):
        DacState.initial(c4r1, digit=37)
