import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fluxdac.dac import DacState, qubit_flux_shift
from fluxdac.errors import ConfigError, InvalidParameterError, RoutingError, ScheduleError
from fluxdac.sfq import (
    DemuxTree,
    MarginProfile,
    ScheduleEntry,
    SfqPulse,
    array_report,
    dc_sfq_convert,
    demux_route,
    jtl_propagate,
    load_schedule,
    margins,
    parse_select,
    program_array,
    program_dac_sfq,
)
from fluxdac.units import get_preset
from fluxdac.waveform import PulseWaveform

DEV = get_preset("C4R1-DAC1")


def dac(digit=0):
    return DacState.initial(DEV, digit=digit)


def entries():
    return st.lists(
        st.tuples(st.integers(0, 7), st.sampled_from([1, -1]), st.integers(0, 50)), max_size=12
    ).map(lambda xs: [ScheduleEntry(format(p, "03b"), pol, n) for p, pol, n in xs])


def test_zero_trigger_no_pulses():
    assert dc_sfq_convert(PulseWaveform.constant(0.0), 1.0, 0.5) == []
    assert dc_sfq_convert(PulseWaveform.train([0.0, 0.0]), 1.0, 0.5) == []


@pytest.mark.parametrize("n, pol", [(1, 1), (5, 1), (7, -1)])
def test_n_triggers_give_n_pulses(n, pol):
    pulses = dc_sfq_convert(PulseWaveform.train([pol * 1.0] * n), 1.0, 0.5)
    assert len(pulses) == n
    assert all(p.polarity == pol for p in pulses)
    times = [p.time for p in pulses]
    assert times == sorted(times)


def test_mixed_triggers_and_subthreshold():
    w = PulseWaveform.train([1.0, 0.2, -1.0, 0.4, 2.0], rise=1, hold=1, fall=1, gap=1)
    assert [p.polarity for p in dc_sfq_convert(w, 1.0, 0.5)] == [1, -1, 1]


def test_crossing_time():
    w = PulseWaveform.square(1.0, rise=10, hold=1, fall=10, delay=5)
    (p,) = dc_sfq_convert(w, 1.0, 0.25)
    assert p.time == pytest.approx(7.5)


@pytest.mark.parametrize("bias", [0.0, 0.69, 1.31, 5.0])
def test_bias_outside_margin_emits_nothing(bias):
    assert dc_sfq_convert(PulseWaveform.train([10.0] * 4), bias, 0.5) == []


def test_threshold_validation():
    with pytest.raises(InvalidParameterError):
        dc_sfq_convert(PulseWaveform.constant(0.0), 1.0, 0.0)
    with pytest.raises(InvalidParameterError):
        SfqPulse(0, 0.0)


def test_jtl_zero_stages_is_identity():
    pulses = [SfqPulse(1, 0.5), SfqPulse(-1, 2.0)]
    assert jtl_propagate(pulses, 0) == pulses


def test_jtl_delay_preserves_order():
    pulses = [SfqPulse(1, t) for t in (0.0, 1.0, 3.5)]
    out = jtl_propagate(pulses, stages=4, delay_per_stage=2.0)
    assert [p.time for p in out] == [8.0, 9.0, 11.5]
    with pytest.raises(InvalidParameterError):
        jtl_propagate(pulses, -1)


def test_jtl_drops_at_window_edge():
    out = jtl_propagate([SfqPulse(1, 0.0), SfqPulse(-1, 1.0), SfqPulse(1, 2.0)], 2,
                        downstream_digit=36, margin_model=(-36, 36))
    assert [p.dropped for p in out] == [True, False, False]


def test_program_examples():
    s, applied = program_dac_sfq(dac(), 0, 1)
    assert s.digit == 0 and applied == 0
    s, applied = program_dac_sfq(dac(), 10, 1)
    assert applied == 10
    assert qubit_flux_shift(s) == pytest.approx(45.8)
    for _ in range(5):
        s, _ = program_dac_sfq(s, 1, 1)
        s, _ = program_dac_sfq(s, 1, -1)
    assert s.digit == 10


def test_program_saturates_and_conserves():
    s, applied = program_dac_sfq(dac(30), 20, 1)
    assert s.digit == 36 and applied == 6
    ev = s.event_log[-1].params
    assert ev["applied"] + ev["dropped"] == ev["requested"] == 20
    with pytest.raises(InvalidParameterError):
        program_dac_sfq(dac(), -1, 1)


@given(st.integers(-36, 36), st.integers(0, 40), st.sampled_from([1, -1]))
def test_flux_linear_in_applied(d0, count, pol):
    start = dac(d0)
    s, applied = program_dac_sfq(start, count, pol)
    assert applied <= count
    assert qubit_flux_shift(s) - qubit_flux_shift(start) == pytest.approx(pol * applied * 4.58, abs=1e-9)


def test_margins_examples():
    assert margins(dac(36)).positive_margin == 0
    m = margins(dac(0))
    assert m.positive_margin == m.negative_margin == 36
    profile = [margins(dac(d)) for d in range(-36, 37)]
    assert {p.total for p in profile} == {72}
    d = np.arange(-36, 37)
    assert np.polyfit(d, [p.positive_margin for p in profile], 1)[0] == pytest.approx(-1)
    assert np.polyfit(d, [p.negative_margin for p in profile], 1)[0] == pytest.approx(1)
    assert MarginProfile(0, 3, 4).remaining(-1) == 4


def test_demux_examples():
    t3 = DemuxTree(3)
    assert demux_route(t3, "000") == 0
    assert demux_route(t3, "101") == 5
    assert demux_route(t3, [1, 0, 1]) == 5
    assert demux_route(t3, 6) == 6
    with pytest.raises(RoutingError):
        demux_route(t3, "10")
    with pytest.raises(RoutingError):
        demux_route(t3, "1021")
    with pytest.raises(RoutingError):
        parse_select(3)


def test_demux_bijection_depth_4():
    tree = DemuxTree(4)
    ports = {demux_route(tree, "".join(bits)) for bits in itertools.product("01", repeat=4)}
    assert ports == set(range(16))


@pytest.mark.parametrize("depth", range(0, 8))
def test_control_line_count(depth):
    tree = DemuxTree(depth)
    assert tree.port_count == 2**depth
    assert tree.select_lines == depth
    assert DemuxTree.for_ports(2**depth).depth == depth


def test_for_ports_rejects_non_power_of_two():
    with pytest.raises(InvalidParameterError):
        DemuxTree.for_ports(6)


def test_empty_schedule_identity():
    dacs = [dac(i - 4) for i in range(8)]
    assert [d.digit for d in program_array(dacs, DemuxTree(3), [])] == [d.digit for d in dacs]


def test_program_each_dac_to_distinct_digit():
    targets = [-30, -12, -1, 0, 3, 9, 21, 36]
    sched = [ScheduleEntry(format(p, "03b"), 1 if t >= 0 else -1, abs(t)) for p, t in enumerate(targets)]
    dacs = [dac() for _ in range(8)]
    rng = np.random.default_rng(0)
    for _ in range(5):
        order = rng.permutation(len(sched))
        out = program_array(dacs, DemuxTree(3), [sched[i] for i in order])
        assert [d.digit for d in out] == targets


def test_oversized_entry_saturates_only_target():
    dacs = [dac() for _ in range(8)]
    out = program_array(dacs, DemuxTree(3), [("010", 1, 100), ("111", -1, 5)])
    assert [d.digit for d in out] == [0, 0, 36, 0, 0, 0, 0, -5]
    rep = array_report(out)
    assert rep[2] == {"port": 2, "digit": 36, "applied": 36, "dropped": 64}


@given(entries(), st.integers(0, 7))
def test_routing_isolation(sched, j):
    dacs = [dac() for _ in range(8)]
    full = program_array(dacs, DemuxTree(3), sched)
    only_j = program_array(dacs, DemuxTree(3), [e for e in sched if int(e.select, 2) == j])
    assert full[j].digit == only_j[j].digit


@given(entries(), st.randoms())
def test_interleaving_of_distinct_targets(sched, rnd):
    # random merge of the per-target queues; order within a target is kept
    queues = {}
    for e in sched:
        queues.setdefault(e.select, []).append(e)
    interleaved = []
    while any(queues.values()):
        q = rnd.choice([q for q in queues.values() if q])
        interleaved.append(q.pop(0))
    dacs = [dac() for _ in range(8)]
    a = program_array(dacs, DemuxTree(3), sched)
    b = program_array(dacs, DemuxTree(3), interleaved)
    assert [d.digit for d in a] == [d.digit for d in b]


def test_schedule_errors_carry_index():
    dacs = [dac() for _ in range(8)]
    with pytest.raises(ScheduleError) as exc:
        program_array(dacs, DemuxTree(3), [("000", 1, 1), ("00", 1, 1)])
    assert exc.value.index == 1
    with pytest.raises(ScheduleError):
        program_array(dacs, DemuxTree(3), [{"select": "001", "polarity": 2, "count": 1}])
    with pytest.raises(InvalidParameterError):
        program_array(dacs[:3], DemuxTree(3), [])


def test_schedule_json():
    text = json.dumps([{"select": "101", "polarity": 1, "count": 12}, {"select": [0, 1, 1], "polarity": -1, "count": 2}])
    sched = load_schedule(text)
    assert sched[0] == ScheduleEntry("101", 1, 12)
    assert sched[1].select == "011"
    assert ScheduleEntry.from_dict(sched[0].to_dict()) == sched[0]
    out = program_array([dac() for _ in range(8)], DemuxTree(3), sched)
    assert out[5].digit == 12 and out[3].digit == -2
    with pytest.raises(ConfigError, match=r"\[0\]"):
        load_schedule('[{"select": "101", "polarity": 3, "count": 1}]')
    with pytest.raises(ConfigError, match="line 1"):
        load_schedule("[{")
