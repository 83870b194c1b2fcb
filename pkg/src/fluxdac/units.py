"""Physical constants, DAC cell parameters and the dimensionless quantities
derived from them.

Phase convention
----------------
The rf-SQUID potential is often written in flux units,

    U(Phi) = E_J [ (Phi - Phi_ext)^2 / (2 beta_L Phi0^2) - cos(2 pi Phi / Phi0) ].

Everything downstream of this module works with the phase
``phi = 2 pi Phi / Phi0`` instead, where the same landscape reads

    U / E_J = (phi - phi_ext)^2 / (2 beta_L) - cos(phi),

with ``beta_L = 2 pi L I_c / Phi0``. Metastable minima then sit close to
``phi = 2 pi N`` and ``beta_L`` is 243 for I_c = 80 uA, L = 1 nH.

Inputs are carried in laboratory units (uA, nH, pF, Ohm, pH) and converted
to SI only inside :func:`derive`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .errors import InvalidParameterError, PresetError

#: Magnetic flux quantum h/2e in Wb.
PHI0 = 2.067833848e-15

MICRO = 1e-6
NANO = 1e-9
PICO = 1e-12


@dataclass(frozen=True)
class DeviceParams:
    """Physical parameters of one flux-DAC cell.

    Attributes
    ----------
    i_c : float
        Junction critical current in uA.
    l_storage : float
        Storage-loop inductance in nH.
    c_junction : float
        Junction capacitance in pF.
    r_normal : float
        Junction normal-state resistance in Ohm.
    r_shunt : float or None
        Shunt resistance in Ohm; ``None`` for an unshunted junction.
    m_coupling : float or None
        DAC-to-qubit mutual inductance in pH.
    phi_trap : float
        Flux trapped in the bias loop, in units of Phi0.
    bias_coupling : float
        Flux tilt per unit bias-line current, in Phi0 per mA.
    """

    i_c: float
    l_storage: float
    c_junction: float
    r_normal: float
    r_shunt: float | None = None
    m_coupling: float | None = None
    phi_trap: float = 0.0
    bias_coupling: float = 1.0
    name: str = ""
    meta: Mapping[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        for name in ("i_c", "l_storage", "c_junction", "r_normal"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidParameterError(name, f"must be a positive finite number, got {value!r}")
        if self.r_shunt is not None and not self.r_shunt > 0:
            raise InvalidParameterError("r_shunt", f"must be positive when given, got {self.r_shunt!r}")
        if self.m_coupling is not None and not self.m_coupling >= 0:
            raise InvalidParameterError("m_coupling", f"must be non-negative, got {self.m_coupling!r}")
        if not self.bias_coupling > 0:
            raise InvalidParameterError("bias_coupling", f"must be positive, got {self.bias_coupling!r}")
        # the digit window spans roughly beta_L / pi digits
        span = 2.0 * self.l_storage * NANO * self.i_c * MICRO / PHI0
        if not abs(self.phi_trap) < span:
            raise InvalidParameterError(
                "phi_trap", f"|phi_trap| = {abs(self.phi_trap)} exceeds the digit window span {span:.1f}"
            )

    @property
    def step_mphi0(self) -> float:
        """Qubit-flux change per stored flux quantum, ``M Phi0 / L``, in mPhi0."""
        if self.m_coupling is None:
            raise InvalidParameterError("m_coupling", "not set for this device")
        return self.m_coupling * PICO / (self.l_storage * NANO) * 1000.0


@dataclass(frozen=True)
class DerivedParams:
    beta_l: float
    beta_c: float
    omega_c: float  # rad/s
    r_eff: float  # Ohm


def effective_resistance(r_normal: float, r_shunt: float | None) -> float:
    if r_shunt is None:
        return r_normal
    return r_normal * r_shunt / (r_normal + r_shunt)


def derive(params: DeviceParams) -> DerivedParams:
    """Screening parameter, Stewart-McCumber parameter and characteristic
    frequency of the DAC junction.

    >>> d = derive(DeviceParams(i_c=80, l_storage=1, c_junction=3.5, r_normal=3.5))
    >>> round(d.beta_l, 1), round(d.beta_c, 1)
    (243.1, 10.4)
    """
    i_c = params.i_c * MICRO
    r_eff = effective_resistance(params.r_normal, params.r_shunt)
    beta_l = 2.0 * math.pi * params.l_storage * NANO * i_c / PHI0
    beta_c = 2.0 * math.pi * i_c * r_eff**2 * params.c_junction * PICO / PHI0
    omega_c = 2.0 * math.pi * i_c * r_eff / PHI0
    return DerivedParams(beta_l=beta_l, beta_c=beta_c, omega_c=omega_c, r_eff=r_eff)


# Preset documents encode units in the key names.
_FIELD_KEYS = {
    "i_c": "i_c_uA",
    "l_storage": "l_storage_nH",
    "c_junction": "c_junction_pF",
    "r_normal": "r_normal_ohm",
    "r_shunt": "r_shunt_ohm",
    "m_coupling": "m_coupling_pH",
    "phi_trap": "phi_trap_phi0",
    "bias_coupling": "bias_coupling_phi0_per_mA",
}
_REQUIRED = ("i_c", "l_storage", "c_junction", "r_normal")


def device_from_mapping(entry: Mapping[str, Any], where: str = "device") -> DeviceParams:
    """Build a :class:`DeviceParams` from a unit-suffixed key/value mapping."""
    if not isinstance(entry, Mapping):
        raise PresetError(f"{where}: expected an object, got {type(entry).__name__}")
    known = set(_FIELD_KEYS.values()) | {"name", "meta"}
    unknown = sorted(set(entry) - known)
    if unknown:
        raise PresetError(f"{where}: unknown field(s) {', '.join(unknown)}")
    kwargs: dict[str, Any] = {}
    for attr, key in _FIELD_KEYS.items():
        if key in entry and entry[key] is not None:
            kwargs[attr] = entry[key]
        elif attr in _REQUIRED:
            raise PresetError(f"{where}: missing field '{key}'")
    try:
        return DeviceParams(name=entry.get("name", ""), meta=dict(entry.get("meta", {})), **kwargs)
    except InvalidParameterError as exc:
        raise PresetError(f"{where}: field '{_FIELD_KEYS.get(exc.field, exc.field)}': {exc}") from exc


def device_to_mapping(params: DeviceParams) -> dict[str, Any]:
    out: dict[str, Any] = {"name": params.name}
    for attr, key in _FIELD_KEYS.items():
        out[key] = getattr(params, attr)
    if params.meta:
        out["meta"] = dict(params.meta)
    return out


def load_device_presets(source: str | Path | None = None) -> list[DeviceParams]:
    """Load named device presets from a JSON file.

    ``None`` loads the presets bundled with the package.
    """
    if source is None:
        text = resources.files("fluxdac.data").joinpath("presets.json").read_text()
        return parse_device_presets(text, where="presets.json")
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise PresetError(f"{path}: {exc.strerror or exc}") from exc
    return parse_device_presets(text, where=str(path))


def parse_device_presets(text: str, where: str = "<string>") -> list[DeviceParams]:
    """Parse a preset document. An empty document yields an empty list."""
    if not text.strip():
        return []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PresetError(f"{where}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc

    if isinstance(doc, Mapping):
        entries = doc.get("devices", [])
    elif isinstance(doc, list):
        entries = doc
    else:
        raise PresetError(f"{where}: expected an object with a 'devices' list")
    if not isinstance(entries, list):
        raise PresetError(f"{where}: 'devices' must be a list")

    devices = []
    for i, entry in enumerate(entries):
        label = entry.get("name", f"#{i}") if isinstance(entry, Mapping) else f"#{i}"
        devices.append(device_from_mapping(entry, where=f"{where}: devices[{i}] ({label})"))
    return devices


def get_preset(name: str, presets: list[DeviceParams] | None = None) -> DeviceParams:
    presets = load_device_presets() if presets is None else presets
    for device in presets:
        if device.name == name:
            return device
    raise PresetError(f"unknown preset '{name}'; available: {', '.join(d.name for d in presets)}")
