import numpy as np
import pytest

from fluxdac.errors import WaveformError
from fluxdac.waveform import PulseWaveform


def test_square_pulse_shape():
    w = PulseWaveform.square(2.0, rise=10, hold=5, fall=10, baseline=1.0)
    assert w(0) == 1.0
    assert w(10) == pytest.approx(3.0)
    assert w(12) == pytest.approx(3.0)
    assert w(20) == pytest.approx(2.0)
    assert w.end == 25
    assert w(1e6) == w.baseline == 1.0
    assert w.peak == pytest.approx(2.0)


def test_train_signed_amplitudes():
    w = PulseWaveform.train([1.0, -1.0, 0.0], rise=1, hold=1, fall=1, gap=2)
    assert w(1.5) == 1.0
    assert w(6.5) == -1.0
    assert w.end == pytest.approx(3 * 3 + 2 * 2)


@pytest.mark.parametrize("times, values", [
    ([0, 1, 1], [0, 1, 0]),
    ([1, 0], [0, 0]),
    ([-1, 0], [0, 0]),
    ([0, 1], [0, np.inf]),
    ([], []),
])
def test_invalid_knots(times, values):
    with pytest.raises(WaveformError):
        PulseWaveform(np.array(times, float), np.array(values, float))


def test_knots_are_read_only():
    w = PulseWaveform.square(1.0)
    with pytest.raises(ValueError):
        w.values[0] = 3.0


def test_scaled():
    w = PulseWaveform.square(1.0, 1, 1, 1).scaled(2.0, 0.5)
    assert w.peak == pytest.approx(2.0)
    assert w.baseline == 0.5


def test_constant_has_no_duration():
    w = PulseWaveform.constant(0.3)
    assert w.end == 0.0
    assert w(5.0) == 0.3
