"""Scenario configuration for the experiment harness.

A scenario is a JSON document validated against ``schemas/config.schema.json``.
Every section is optional; :data:`DEFAULTS` fills in what is missing. Errors
are reported as :class:`ConfigError` carrying the dotted path of the field.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np

from .dac import PulseShape, ideal_window, usable_window
from .errors import ConfigError, InvalidParameterError, PresetError
from .fluxonium import DephasingModel, FluxoniumParams, T1Model
from .units import DeviceParams, device_from_mapping, device_to_mapping, get_preset, load_device_presets

CONFIG_SCHEMA_VERSION = 1

DEFAULTS: dict[str, Any] = {
    "schema_version": CONFIG_SCHEMA_VERSION,
    "scenario": "default",
    "device": "C4R1-DAC1",
    "device_overrides": {},
    "fluxonium": {"e_c_GHz": 1.3, "e_j_GHz": 5.08, "e_l_GHz": 0.806, "grid_points": 1024},
    "dac": {
        "usable_fraction": 0.96,
        "window": None,
        "reference_digit": 0,
        "reset_cycles": 3,
        "mode": "threshold-table",
        "pulse": {"rise": 1000.0, "hold": 1000.0, "fall": 1000.0},
    },
    "sfq": {
        "bias_mA": 1.0,
        "threshold_mA": 0.5,
        "trigger_amplitude_mA": 1.0,
        "operating_margin_mA": [0.7, 1.3],
        "jtl_stages": 4,
        "delay_per_stage": 1.0,
        "start_digits": [-20, 0, 20],
        "max_pulses": 10,
    },
    "sweeps": {
        "plateau": {"start_mA": 38.0, "stop_mA": 41.0, "step_mA": 0.02, "polarities": [1, -1]},
        "spectroscopy": {
            "flux_start_phi0": 0.45,
            "flux_stop_phi0": 0.55,
            "points": 15,
            "global_bias_phi0": 0.5,
            "digits": list(range(-10, 11)),
        },
        "coherence": {
            "flux_start_phi0": 0.47,
            "flux_stop_phi0": 0.53,
            "points": 13,
            "global_bias_phi0": 0.5,
            "digits": list(range(-6, 7)),
        },
        "margins": {"digits": None},
    },
    "noise": {
        "seed": 0,
        "frequency_sigma_GHz": 0.0,
        "flux_sigma_phi0": 0.0,
        "rate_sigma_rel": 0.0,
        "a_phi_ramsey_uphi0": 6.75,
        "a_phi_echo_uphi0": 10.47,
    },
    "coherence": {"ir_cutoff_Hz": 1.0, "measurement_time_us": 10.0, "t1_mean_us": 82.0, "t1_scatter_us": 17.0},
    "calibration": {"initial_guess_GHz": [1.5, 4.5, 0.9], "restarts": 3},
}


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict[str, Any]:
    """A JSON schema shipped with the package, e.g. ``"record"``."""
    return json.loads(resources.files("fluxdac.schemas").joinpath(f"{name}.schema.json").read_text())


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def validate(doc: Any, schema: str) -> None:
    """Raise :class:`ConfigError` for the first schema violation in ``doc``."""
    validator = jsonschema.Draft202012Validator(load_schema(schema))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        err = errors[0]
        raise ConfigError(_path(err.absolute_path) or "<root>", err.message)


def _merge(base: dict, over: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict) and k != "device":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass(frozen=True)
class PlateauSweep:
    start_mA: float
    stop_mA: float
    step_mA: float
    polarities: tuple[int, ...]

    @property
    def amplitudes(self) -> np.ndarray:
        n = int(round((self.stop_mA - self.start_mA) / self.step_mA)) + 1
        return self.start_mA + self.step_mA * np.arange(max(n, 0))


@dataclass(frozen=True)
class FluxSweep:
    """Conventional flux points plus DAC digits on top of a fixed global bias."""

    flux_start_phi0: float
    flux_stop_phi0: float
    points: int
    global_bias_phi0: float
    digits: tuple[int, ...]

    @property
    def fluxes(self) -> np.ndarray:
        return np.linspace(self.flux_start_phi0, self.flux_stop_phi0, self.points)


@dataclass(frozen=True)
class SfqSettings:
    bias_mA: float
    threshold_mA: float
    trigger_amplitude_mA: float
    operating_margin_mA: tuple[float, float]
    jtl_stages: int
    delay_per_stage: float
    start_digits: tuple[int, ...]
    max_pulses: int


@dataclass(frozen=True)
class NoiseSettings:
    seed: int
    frequency_sigma_GHz: float
    flux_sigma_phi0: float
    rate_sigma_rel: float
    a_phi_ramsey_uphi0: float
    a_phi_echo_uphi0: float


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    name: str
    device: DeviceParams
    fluxonium: FluxoniumParams
    window: tuple[int, int]
    reference_digit: int
    reset_cycles: int
    mode: str
    pulse: PulseShape
    sfq: SfqSettings
    plateau: PlateauSweep
    spectroscopy: FluxSweep
    coherence_sweep: FluxSweep
    margin_digits: tuple[int, ...]
    noise: NoiseSettings
    dephasing: DephasingModel
    t1: T1Model
    initial_guess: FluxoniumParams
    restarts: int
    snapshot: dict[str, Any]

    def with_seed(self, seed: int) -> "ScenarioConfig":
        doc = copy.deepcopy(self.snapshot)
        doc["noise"]["seed"] = int(seed)
        return config_from_dict(doc)


def _resolve_device(doc: dict) -> DeviceParams:
    presets = None
    if doc.get("presets_file"):
        try:
            presets = load_device_presets(doc["presets_file"])
        except PresetError as exc:
            raise ConfigError("presets_file", str(exc)) from exc
    ref = doc["device"]
    try:
        if isinstance(ref, str):
            base = device_to_mapping(get_preset(ref, presets))
        else:
            base = dict(ref)
        base.update(doc["device_overrides"])
        return device_from_mapping(base, where="device")
    except PresetError as exc:
        raise ConfigError("device", str(exc)) from exc


def _check_in(window, value, path):
    if not window[0] <= value <= window[1]:
        raise ConfigError(path, f"digit {value} outside DAC window [{window[0]}, {window[1]}]")


def config_from_dict(doc: Mapping[str, Any]) -> ScenarioConfig:
    """Validate ``doc`` (merged over the defaults) and build a :class:`ScenarioConfig`."""
    if not isinstance(doc, Mapping):
        raise ConfigError("<root>", "config must be a JSON object")
    validate(dict(doc), "config")
    merged = _merge(DEFAULTS, doc)
    device = _resolve_device(merged)

    fl = merged["fluxonium"]
    try:
        fluxonium = FluxoniumParams(fl["e_c_GHz"], fl["e_j_GHz"], fl["e_l_GHz"], grid_points=fl["grid_points"])
        guess = FluxoniumParams(*merged["calibration"]["initial_guess_GHz"], grid_points=fl["grid_points"])
    except InvalidParameterError as exc:
        raise ConfigError(f"fluxonium.{exc.field}", str(exc)) from exc

    dac = merged["dac"]
    if dac["window"] is None:
        window = usable_window(device, dac["usable_fraction"])
    else:
        window = tuple(dac["window"])
        lo, hi = ideal_window(device)
        if not lo <= window[0] <= window[1] <= hi:
            raise ConfigError("dac.window", f"{list(window)} is not inside the stable range [{lo}, {hi}]")
    _check_in(window, dac["reference_digit"], "dac.reference_digit")

    sfq = merged["sfq"]
    for i, d in enumerate(sfq["start_digits"]):
        _check_in(window, d, f"sfq.start_digits[{i}]")
    sweeps = merged["sweeps"]
    plateau = PlateauSweep(**{**sweeps["plateau"], "polarities": tuple(sweeps["plateau"]["polarities"])})
    if plateau.stop_mA < plateau.start_mA or plateau.amplitudes.size == 0:
        raise ConfigError("sweeps.plateau", "amplitude sweep is empty")

    flux_sweeps = {}
    for key in ("spectroscopy", "coherence"):
        s = sweeps[key]
        fs = FluxSweep(**{**s, "digits": tuple(s["digits"])})
        if fs.points + len(fs.digits) == 0:
            raise ConfigError(f"sweeps.{key}", "sweep is empty")
        for i, d in enumerate(fs.digits):
            _check_in(window, d, f"sweeps.{key}.digits[{i}]")
        flux_sweeps[key] = fs

    margin_digits = sweeps["margins"]["digits"]
    if margin_digits is None:
        margin_digits = range(window[0], window[1] + 1)
    for i, d in enumerate(margin_digits):
        _check_in(window, d, f"sweeps.margins.digits[{i}]")

    coh = merged["coherence"]
    snapshot = copy.deepcopy(merged)
    snapshot["device"] = device_to_mapping(device)
    snapshot["device_overrides"] = {}
    snapshot.pop("presets_file", None)
    return ScenarioConfig(
        name=merged["scenario"],
        device=device,
        fluxonium=fluxonium,
        window=(int(window[0]), int(window[1])),
        reference_digit=dac["reference_digit"],
        reset_cycles=dac["reset_cycles"],
        mode=dac["mode"],
        pulse=PulseShape(**dac["pulse"]),
        sfq=SfqSettings(**{**sfq, "operating_margin_mA": tuple(sfq["operating_margin_mA"]),
                           "start_digits": tuple(sfq["start_digits"])}),
        plateau=plateau,
        spectroscopy=flux_sweeps["spectroscopy"],
        coherence_sweep=flux_sweeps["coherence"],
        margin_digits=tuple(int(d) for d in margin_digits),
        noise=NoiseSettings(**merged["noise"]),
        dephasing=DephasingModel(coh["ir_cutoff_Hz"], coh["measurement_time_us"]),
        t1=T1Model(coh["t1_mean_us"], coh["t1_scatter_us"]),
        initial_guess=guess,
        restarts=merged["calibration"]["restarts"],
        snapshot=snapshot,
    )


def load_config(source: str | Path | None = None) -> ScenarioConfig:
    """Read a scenario from a JSON file; ``None`` gives the defaults."""
    if source is None:
        return config_from_dict({})
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), exc.strerror or str(exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(doc)
