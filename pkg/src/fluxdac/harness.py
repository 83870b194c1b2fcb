"""Scenario runners: each turns a :class:`ScenarioConfig` into an
:class:`ExperimentRecord`, plus :func:`calibrate` which fits a record.

Runs are noiseless unless the config's ``noise`` section says otherwise;
all randomness comes from one generator seeded with ``noise.seed``.
"""

from __future__ import annotations

import itertools
from typing import Any

import numpy as np

from .calibration import FitResult, fit_dac_step, fit_flux_noise, fit_fluxonium, flux_from_frequency
from .config import ScenarioConfig
from .dac import DacState, qubit_flux_shift, reset, scan_plateau, step_threshold
from .errors import ConfigError, DegenerateDataError
from .fluxonium import FluxoniumParams, dephasing_rates, f01, flux_sensitivity, t1_sample, total_flux
from .records import ExperimentRecord
from .sfq import DemuxTree, dc_sfq_convert, demux_route, jtl_propagate, margins, program_array, program_dac_sfq
from .waveform import PulseWaveform

CALIBRATION_SCHEMA_VERSION = 1


def _rng(cfg: ScenarioConfig) -> np.random.Generator:
    return np.random.default_rng(cfg.noise.seed)


def _record(cfg: ScenarioConfig, kind: str, sweep, outputs, metadata=None) -> ExperimentRecord:
    return ExperimentRecord.build(cfg.name, kind, cfg.snapshot, cfg.noise.seed, sweep, outputs, metadata)


def _start(cfg: ScenarioConfig, digit: int | None = None) -> DacState:
    """Freshly reset DAC at ``digit`` (the reference digit by default)."""
    state = DacState.initial(cfg.device, window=cfg.window)
    target = cfg.reference_digit if digit is None else digit
    return reset(state, target, cfg.reset_cycles)


def _line_fit(x, y) -> tuple[float, float, float]:
    """Least-squares slope, intercept and residual RMS."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.unique(x).size < 2:
        return 0.0, float(y.mean()), 0.0
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    return float(slope), float(icpt), float(np.sqrt(np.mean(resid**2)))


def run_plateau_scan(cfg: ScenarioConfig) -> ExperimentRecord:
    """Qubit-flux increment versus bias-pulse amplitude for each polarity,
    every point starting from a freshly reset DAC."""
    rng = _rng(cfg)
    amps = cfg.plateau.amplitudes
    sigma = cfg.noise.flux_sigma_phi0 * 1000.0
    state = DacState.initial(cfg.device, window=cfg.window)
    rows: dict[str, list] = {"amplitude": [], "polarity": [], "delta_digit": [], "delta_flux": []}
    thresholds = {}
    for pol in cfg.plateau.polarities:
        scan = scan_plateau(state, amps, pol, reference_digit=cfg.reference_digit, cycles=cfg.reset_cycles,
                            mode=cfg.mode, pulse=cfg.pulse)
        flux = scan.delta_flux + (rng.normal(0.0, sigma, amps.size) if sigma > 0 else 0.0)
        rows["amplitude"] += list(amps)
        rows["polarity"] += [pol] * amps.size
        rows["delta_digit"] += list(scan.delta_digit)
        rows["delta_flux"] += list(flux)
        moved = np.nonzero(scan.delta_digit != 0)[0]
        single = scan.delta_digit == pol
        thresholds["positive" if pol > 0 else "negative"] = {
            "first_step_mA": float(amps[moved[0]]) if moved.size else None,
            "predicted_mA": step_threshold(cfg.device, cfg.reference_digit, pol),
            "plateau_height_mPhi0": float(np.median(np.abs(flux[single]))) if single.any() else None,
        }
    return _record(
        cfg, "plateau",
        ("amplitude", rows["amplitude"], "mA"),
        {
            "polarity": ("", rows["polarity"]),
            "delta_digit": ("", rows["delta_digit"]),
            "delta_flux": ("mPhi0", rows["delta_flux"]),
        },
        {"thresholds": thresholds, "step_mPhi0": cfg.device.step_mphi0, "amplitude_step_mA": cfg.plateau.step_mA},
    )


def _sfq_train(cfg: ScenarioConfig, start: DacState, count: int, polarity: int) -> tuple[DacState, int, int]:
    """Trigger -> dc/SFQ -> JTL -> DAC. Returns ``(state, emitted, dropped)``."""
    s = cfg.sfq
    if count == 0:
        return start, 0, 0
    trigger = PulseWaveform.train([polarity * s.trigger_amplitude_mA] * count)
    pulses = dc_sfq_convert(trigger, s.bias_mA, s.threshold_mA, s.operating_margin_mA)
    arrived = jtl_propagate(pulses, s.jtl_stages, s.delay_per_stage, start.digit, start.window)
    accepted = [p for p in arrived if not p.dropped]
    state = start
    for pol in (1, -1):
        n = sum(1 for p in accepted if p.polarity == pol)
        if n:
            state, _ = program_dac_sfq(state, n, pol)
    return state, len(pulses), len(arrived) - len(accepted)


def run_sfq_program(cfg: ScenarioConfig) -> ExperimentRecord:
    """Flux output versus number of SFQ pulses, for each start digit and
    polarity. Pulses beyond the programming margin are dropped and counted."""
    rng = _rng(cfg)
    sigma = cfg.noise.flux_sigma_phi0 * 1000.0
    cols: dict[str, list] = {k: [] for k in ("count", "start_digit", "polarity", "digit", "flux", "emitted", "dropped")}
    lines = []
    for d0, pol in itertools.product(cfg.sfq.start_digits, (1, -1)):
        start = _start(cfg, d0)
        counts = np.arange(cfg.sfq.max_pulses + 1)
        flux = []
        for n in counts:
            state, emitted, dropped = _sfq_train(cfg, start, int(n), pol)
            f = qubit_flux_shift(state) + (rng.normal(0.0, sigma) if sigma > 0 else 0.0)
            flux.append(f)
            for k, v in (("count", n), ("start_digit", d0), ("polarity", pol), ("digit", state.digit),
                         ("flux", f), ("emitted", emitted), ("dropped", dropped)):
                cols[k].append(v)
        slope, icpt, rms = _line_fit(counts, flux)
        lines.append({"start_digit": d0, "polarity": pol, "slope_mPhi0_per_pulse": slope,
                      "intercept_mPhi0": icpt, "residual_rms_Phi0": rms / 1000.0})
    return _record(
        cfg, "sfq-program",
        ("pulse_count", cols["count"], ""),
        {
            "start_digit": ("", cols["start_digit"]),
            "polarity": ("", cols["polarity"]),
            "digit": ("", cols["digit"]),
            "flux": ("mPhi0", cols["flux"]),
            "emitted": ("", cols["emitted"]),
            "dropped": ("", cols["dropped"]),
        },
        {"lines": lines, "step_mPhi0": cfg.device.step_mphi0, "window": list(cfg.window)},
    )


def run_margin_sweep(cfg: ScenarioConfig) -> ExperimentRecord:
    """Remaining +/- SFQ programming margin at each initialisation digit."""
    digits = np.array(cfg.margin_digits)
    prof = [margins(DacState.initial(cfg.device, int(d), window=cfg.window)) for d in digits]
    pos = np.array([p.positive_margin for p in prof])
    neg = np.array([p.negative_margin for p in prof])
    total = pos + neg
    sp, _, rp = _line_fit(digits, pos)
    sn, _, rn = _line_fit(digits, neg)
    meta = {
        "positive_slope": sp,
        "negative_slope": sn,
        "affine": bool(rp < 1e-9 and rn < 1e-9),
        "constant_sum": bool(np.all(total == total[0])),
        "window": list(cfg.window),
    }
    return _record(
        cfg, "margins",
        ("digit", digits, ""),
        {"positive_margin": ("pulses", pos), "negative_margin": ("pulses", neg), "total_margin": ("pulses", total)},
        meta,
    )


def _dac_fluxes(cfg: ScenarioConfig, digits, global_bias: float) -> list[float]:
    """Qubit flux after programming the DAC from the reference digit with SFQ trains."""
    ref = _start(cfg)
    out = []
    for d in digits:
        delta = d - ref.digit
        state, _ = program_dac_sfq(ref, abs(delta), 1 if delta >= 0 else -1)
        out.append(total_flux(global_bias, state))
    return out


def _flux_points(cfg: ScenarioConfig, sweep) -> tuple[list[float], list[str], list[int | None]]:
    conv = list(sweep.fluxes)
    dac = _dac_fluxes(cfg, sweep.digits, sweep.global_bias_phi0)
    return (conv + dac, ["conventional"] * len(conv) + ["dac"] * len(dac),
            [None] * len(conv) + list(sweep.digits))


def run_spectroscopy(cfg: ScenarioConfig) -> ExperimentRecord:
    """f01 versus qubit flux set by the bias line alone and by the DAC on top
    of a fixed global bias."""
    rng = _rng(cfg)
    sweep = cfg.spectroscopy
    flux, path, digit = _flux_points(cfg, sweep)
    n = len(flux)
    jitter = rng.normal(0.0, cfg.noise.flux_sigma_phi0, n) if cfg.noise.flux_sigma_phi0 > 0 else np.zeros(n)
    freq = np.array([f01(cfg.fluxonium, x + j) for x, j in zip(flux, jitter)])
    if cfg.noise.frequency_sigma_GHz > 0:
        freq = freq + rng.normal(0.0, cfg.noise.frequency_sigma_GHz, n)
    return _record(
        cfg, "spectroscopy",
        ("phi_ext_qubit", flux, "Phi0"),
        {"path": ("", path), "digit": ("", digit), "f01": ("GHz", freq)},
        {"global_bias_Phi0": sweep.global_bias_phi0, "step_mPhi0": cfg.device.step_mphi0,
         "reference_digit": cfg.reference_digit},
    )


def run_coherence(cfg: ScenarioConfig) -> ExperimentRecord:
    """Flux sensitivity, Ramsey/echo dephasing rates and a T1 draw at each
    flux point, tagged by control path."""
    rng = _rng(cfg)
    noise = cfg.noise
    flux, path, digit = _flux_points(cfg, cfg.coherence_sweep)
    n = len(flux)
    sens = np.array([flux_sensitivity(cfg.fluxonium, x) for x in flux])
    freq = np.array([f01(cfg.fluxonium, x) for x in flux])
    g_r, g_e = dephasing_rates(noise.a_phi_ramsey_uphi0, noise.a_phi_echo_uphi0, sens, cfg.dephasing)
    if noise.rate_sigma_rel > 0:
        g_r = np.clip(g_r * (1.0 + rng.normal(0.0, noise.rate_sigma_rel, n)), 0.0, None)
        g_e = np.clip(g_e * (1.0 + rng.normal(0.0, noise.rate_sigma_rel, n)), 0.0, None)
    t1 = t1_sample(cfg.t1, rng, size=n)
    return _record(
        cfg, "coherence",
        ("phi_ext_qubit", flux, "Phi0"),
        {
            "path": ("", path),
            "digit": ("", digit),
            "f01": ("GHz", freq),
            "sensitivity": ("GHz/Phi0", sens),
            "gamma_ramsey": ("1/us", g_r),
            "gamma_echo": ("1/us", g_e),
            "t1": ("us", t1),
        },
        {"a_phi_ramsey_uPhi0": noise.a_phi_ramsey_uphi0, "a_phi_echo_uPhi0": noise.a_phi_echo_uphi0,
         "c_ramsey": cfg.dephasing.c_ramsey, "c_echo": cfg.dephasing.c_echo,
         "t1_model_us": [cfg.t1.mean_us, cfg.t1.scatter_us]},
    )


def run_demux_check(cfg: ScenarioConfig, depth: int, schedules: int = 100) -> ExperimentRecord:
    """Exhaustive address-to-port map of a DEMUX tree plus a routing-isolation
    check: random schedules must only change the addressed DACs."""
    if not 0 <= depth <= 16:
        raise ConfigError("depth", f"must be in [0, 16], got {depth}")
    rng = _rng(cfg)
    tree = DemuxTree(depth)
    selects = np.arange(tree.port_count)
    ports = np.array([demux_route(tree, int(s)) for s in selects])
    bijective = bool(np.array_equal(np.sort(ports), selects))

    isolated = True
    base = [DacState.initial(cfg.device, 0, window=cfg.window) for _ in range(tree.port_count)]
    for _ in range(schedules):
        port = int(rng.integers(tree.port_count))
        entry = {"select": format(port, f"0{depth}b") if depth else "",
                 "polarity": int(rng.choice([1, -1])), "count": int(rng.integers(1, 6))}
        after = program_array(base, tree, [entry])
        isolated &= all(a.digit == b.digit for i, (a, b) in enumerate(zip(after, base)) if i != port)
        isolated &= after[port].digit == base[port].digit + entry["polarity"] * entry["count"]
    return _record(
        cfg, "demux-check",
        ("select", selects, ""),
        {"port": ("", ports)},
        {"depth": depth, "ports": tree.port_count, "bijective": bijective,
         "isolation_schedules": schedules, "isolated": bool(isolated)},
    )


RUNNERS = {
    "plateau": run_plateau_scan,
    "sfq-program": run_sfq_program,
    "margins": run_margin_sweep,
    "spectroscopy": run_spectroscopy,
    "coherence": run_coherence,
}


# calibration of stored records ---------------------------------------------


def _guess_from(record: ExperimentRecord) -> tuple[FluxoniumParams, int]:
    cal = record.config.get("calibration", {})
    guess = cal.get("initial_guess_GHz", [1.5, 4.5, 0.9])
    grid = record.config.get("fluxonium", {}).get("grid_points", 1024)
    return FluxoniumParams(*guess, grid_points=grid), int(cal.get("restarts", 3))


def calibrate_spectroscopy(record: ExperimentRecord) -> dict[str, FitResult]:
    """Fit the fluxonium energies to the conventional-path points, then map
    each DAC-path frequency back to flux with the fitted model and fit the
    DAC step. The side of the sweet spot is taken from the nominal flux."""
    phi = record.column("phi_ext_qubit")
    path = record.column("path")
    freq = record.column("f01")
    conv = path == "conventional"
    guess, restarts = _guess_from(record)
    energies = fit_fluxonium(list(zip(phi[conv], freq[conv])), guess, restarts=restarts,
                             seed=record.rng_seed)
    fitted = guess.with_energies(energies["e_c"], energies["e_j"], energies["e_l"])
    bias = float(record.metadata.get("global_bias_Phi0", 0.5))
    pts = []
    for x, f, d in zip(phi[~conv], freq[~conv], record.column("digit")[~conv]):
        branch = int(np.sign(round(x - bias, 12)))
        try:
            pts.append((d, flux_from_frequency(fitted, f, branch, sweet_spot=bias)))
        except DegenerateDataError:
            continue
    out = {"fluxonium": energies}
    if len({d for d, _ in pts}) >= 2:
        out["dac_step"] = fit_dac_step(pts)
    return out


def calibrate(record: ExperimentRecord) -> dict[str, FitResult]:
    """Fits appropriate to the record kind."""
    if record.kind == "spectroscopy":
        return calibrate_spectroscopy(record)
    if record.kind == "coherence":
        d = record.column("sensitivity")
        return {
            "flux_noise_ramsey": fit_flux_noise(list(zip(d, record.column("gamma_ramsey"))), "ramsey"),
            "flux_noise_echo": fit_flux_noise(list(zip(d, record.column("gamma_echo"))), "echo"),
        }
    if record.kind == "sfq-program":
        pts = list(zip(record.column("digit"), record.column("flux") / 1000.0))
        return {"dac_step": fit_dac_step(pts)}
    if record.kind == "plateau":
        pts = list(zip(record.column("delta_digit"), record.column("delta_flux") / 1000.0))
        return {"dac_step": fit_dac_step(pts)}
    raise ConfigError("kind", f"records of kind {record.kind!r} have nothing to calibrate")


def calibration_document(record: ExperimentRecord, fits: dict[str, FitResult]) -> dict[str, Any]:
    return {
        "schema_version": CALIBRATION_SCHEMA_VERSION,
        "source": {"scenario": record.scenario, "kind": record.kind, "rng_seed": record.rng_seed},
        "fits": {name: fit.to_dict() for name, fit in fits.items()},
    }


def calibration_rows(fits: dict[str, FitResult]) -> list[list[Any]]:
    rows = [["fit", "parameter", "value", "stderr", "units"]]
    for name, fit in fits.items():
        for pname, p in fit.parameters.items():
            rows.append([name, pname, repr(p.value), "" if p.stderr is None else repr(p.stderr), p.units])
    return rows

