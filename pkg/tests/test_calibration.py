import math

import numpy as np
import pytest

from fluxdac.calibration import fit_dac_step, fit_flux_noise, fit_fluxonium, flux_from_frequency
from fluxdac.errors import DegenerateDataError, InvalidParameterError
from fluxdac.fluxonium import DephasingModel, FluxoniumParams, dephasing_rate, f01, flux_sensitivity

TRUE = FluxoniumParams(1.3, 5.08, 0.806)
GUESS = FluxoniumParams(1.5, 4.5, 0.9)
FLUX = np.linspace(0.45, 0.55, 15)


def synth(params=TRUE, flux=FLUX, sigma=0.0, seed=1):
    f = np.array([f01(params, x) for x in flux])
    if sigma:
        f = f + np.random.default_rng(seed).normal(0.0, sigma, f.size)
    return list(zip(flux, f))


@pytest.fixture(scope="module")
def noiseless_fit():
    return fit_fluxonium(synth(), GUESS)


def test_noiseless_recovery(noiseless_fit):
    for name, true in (("e_c", 1.3), ("e_j", 5.08), ("e_l", 0.806)):
        assert noiseless_fit[name] == pytest.approx(true, rel=1e-6)
        assert noiseless_fit.parameters[name].stderr < 1e-6
    assert noiseless_fit.converged
    assert noiseless_fit.residual_rms < 1e-9


def test_idempotent_from_optimum(noiseless_fit):
    start = TRUE.with_energies(noiseless_fit["e_c"], noiseless_fit["e_j"], noiseless_fit["e_l"])
    again = fit_fluxonium(synth(), start, restarts=0)
    for name in ("e_c", "e_j", "e_l"):
        assert again[name] == pytest.approx(noiseless_fit[name], rel=1e-6)


def test_noisy_recovery_and_error_bars():
    fit = fit_fluxonium(synth(sigma=100e-6), GUESS)
    for name, true in (("e_c", 1.3), ("e_j", 5.08), ("e_l", 0.806)):
        p = fit.parameters[name]
        assert p.value == pytest.approx(true, rel=0.03)
        assert 0 < p.stderr < 0.05 * true
        assert abs(p.value - true) < 3 * p.stderr
    assert fit.residual_rms == pytest.approx(100e-6, rel=0.5)


def test_scale_equivariance():
    k = 2.0
    scaled = [(x, k * f) for x, f in synth()]
    fit = fit_fluxonium(scaled, GUESS.with_energies(k * 1.5, k * 4.5, k * 0.9), restarts=0)
    for name, true in (("e_c", 1.3), ("e_j", 5.08), ("e_l", 0.806)):
        assert fit[name] == pytest.approx(k * true, rel=1e-5)


def test_harmonic_limit_fit_with_fixed_ej():
    harmonic = TRUE.with_energies(1.3, 0.0, 0.806)
    fit = fit_fluxonium(synth(harmonic), GUESS, fixed={"e_j": 0.0}, restarts=0)
    assert fit["e_j"] == 0.0 and fit.parameters["e_j"].stderr == 0.0
    plasma = math.sqrt(8 * fit["e_c"] * fit["e_l"])
    assert plasma == pytest.approx(math.sqrt(8 * 1.3 * 0.806), rel=1e-8)
    # only the product is constrained; the split is not identifiable
    assert fit.parameters["e_c"].stderr is None and fit.parameters["e_l"].stderr is None


def test_round_trip_closure(noiseless_fit):
    fitted = TRUE.with_energies(noiseless_fit["e_c"], noiseless_fit["e_j"], noiseless_fit["e_l"])
    regenerated = np.array([f01(fitted, x) for x in FLUX])
    measured = np.array([f for _, f in synth()])
    assert np.max(np.abs(regenerated - measured)) < 1e-8


def test_fit_fluxonium_input_errors():
    with pytest.raises(InvalidParameterError):
        fit_fluxonium(synth()[:3], GUESS)
    with pytest.raises(DegenerateDataError):
        fit_fluxonium([(0.5, 0.4)] * 5, GUESS)
    with pytest.raises(InvalidParameterError):
        fit_fluxonium(synth(), GUESS, fixed={"e_x": 1.0})
    with pytest.raises(InvalidParameterError):
        fit_fluxonium(synth(), GUESS, fixed={"e_c": 1.0, "e_j": 1.0, "e_l": 1.0})
    with pytest.raises(InvalidParameterError):
        fit_fluxonium([(1, 2, 3)] * 5, GUESS)


def test_dac_step_exact():
    pts = [(d, 0.5 + 4.58e-3 * d) for d in range(-5, 6)]
    fit = fit_dac_step(pts)
    assert fit["step"] == pytest.approx(4.58, abs=1e-9)
    assert fit["intercept"] == pytest.approx(0.5, abs=1e-12)
    assert fit.parameters["step"].units == "mPhi0"


def test_dac_step_two_points_has_no_error_bar():
    fit = fit_dac_step([(0, 0.5), (1, 0.50458)])
    assert fit["step"] == pytest.approx(4.58)
    assert fit.parameters["step"].stderr is None


def test_dac_step_noisy():
    rng = np.random.default_rng(3)
    digits = np.arange(-10, 10)
    flux = 0.5 + 4.58e-3 * digits + rng.normal(0, 0.05e-3, digits.size)
    fit = fit_dac_step(list(zip(digits, flux)))
    assert fit["step"] == pytest.approx(4.58, abs=0.01)
    assert abs(fit["step"] - 4.58) < 4 * fit.parameters["step"].stderr


def test_dac_step_degenerate():
    with pytest.raises(DegenerateDataError):
        fit_dac_step([(3, 0.5), (3, 0.51)])


@pytest.mark.parametrize("kind,amp", [("ramsey", 6.75), ("echo", 10.47)])
def test_flux_noise_round_trip(kind, amp):
    d = np.linspace(-20, 20, 11)
    gamma = [dephasing_rate(amp, x, kind) for x in d]
    fit = fit_flux_noise(list(zip(d, gamma)), kind)
    assert fit["a_phi"] == pytest.approx(amp, rel=1e-12)


def test_flux_noise_offset():
    d = np.linspace(1, 20, 8)
    gamma = [dephasing_rate(6.75, x, "echo") + 0.01 for x in d]
    fit = fit_flux_noise(list(zip(d, gamma)), "echo", offset=True)
    assert fit["a_phi"] == pytest.approx(6.75, rel=1e-9)
    assert fit["gamma_offset"] == pytest.approx(0.01, abs=1e-12)


def test_flux_noise_zero_rates():
    fit = fit_flux_noise([(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], "ramsey")
    assert fit["a_phi"] == 0.0


def test_flux_noise_constant_absorbed():
    # a different model constant changes A_phi but not the fitted rates
    d = np.linspace(2, 10, 5)
    gamma = [dephasing_rate(6.75, x, "ramsey") for x in d]
    other = DephasingModel(ir_cutoff_hz=0.1)
    fit = fit_flux_noise(list(zip(d, gamma)), "ramsey", other)
    refit = [dephasing_rate(fit["a_phi"], x, "ramsey", other) for x in d]
    assert np.allclose(refit, gamma)


def test_flux_noise_errors():
    with pytest.raises(DegenerateDataError):
        fit_flux_noise([(0.0, 0.1)] * 4, "echo")
    with pytest.raises(InvalidParameterError):
        fit_flux_noise([(1.0, 0.1), (2.0, 0.2)], "echo")
    with pytest.raises(InvalidParameterError):
        fit_flux_noise([(1.0, 0.1), (2.0, 0.2), (3.0, 0.3)], "cpmg")


@pytest.mark.parametrize("x", [0.46, 0.4954, 0.51, 0.54])
def test_flux_from_frequency_inverts_f01(x):
    branch = 1 if x > 0.5 else -1
    assert flux_from_frequency(TRUE, f01(TRUE, x), branch) == pytest.approx(x, abs=1e-9)


def test_flux_from_frequency_edges():
    assert flux_from_frequency(TRUE, 0.1, 0) == 0.5
    with pytest.raises(DegenerateDataError):
        flux_from_frequency(TRUE, 0.1, 1)
    assert flux_sensitivity(TRUE, flux_from_frequency(TRUE, 0.6, -1)) < 0
