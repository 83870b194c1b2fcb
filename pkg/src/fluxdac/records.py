"""Persistent run records.

A record holds one swept variable, any number of output columns of the same
length, the config snapshot it was produced from and the RNG seed. Wall-clock
data lives only in the ``provenance`` block, so the remaining "data block" is
byte-identical across reruns of the same config and seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import metadata as _metadata
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .config import validate
from .errors import ConfigError, InvalidParameterError

RECORD_SCHEMA_VERSION = 1


def _plain(x: Any) -> Any:
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, Mapping):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def column_header(name: str, units: str) -> str:
    """CSV header with a unit suffix, e.g. ``f01_GHz`` or ``gamma_ramsey_per_us``."""
    if not units:
        return name
    suffix = units.replace("1/", "per_").replace("/", "_per_")
    return f"{name}_{suffix}"


@dataclass(frozen=True)
class Column:
    units: str
    values: list


@dataclass(frozen=True)
class Sweep:
    name: str
    values: list
    units: str


@dataclass(frozen=True, eq=False)
class ExperimentRecord:
    scenario: str
    kind: str
    config: dict[str, Any]
    rng_seed: int
    sweep: Sweep
    outputs: dict[str, Column]
    metadata: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)
    schema_version: int = RECORD_SCHEMA_VERSION

    def __post_init__(self):
        n = len(self.sweep.values)
        for name, col in self.outputs.items():
            if len(col.values) != n:
                raise InvalidParameterError(
                    "outputs", f"column {name!r} has {len(col.values)} values, sweep has {n}"
                )

    @classmethod
    def build(
        cls,
        scenario: str,
        kind: str,
        config: Mapping[str, Any],
        rng_seed: int,
        sweep: tuple[str, Sequence, str],
        outputs: Mapping[str, tuple[str, Sequence]],
        metadata: Mapping[str, Any] | None = None,
    ) -> "ExperimentRecord":
        """Convenience constructor taking ``(name, values, units)`` and
        ``{column: (units, values)}``; stamps provenance with the current time."""
        name, values, units = sweep
        return cls(
            scenario=scenario,
            kind=kind,
            config=_plain(dict(config)),
            rng_seed=int(rng_seed),
            sweep=Sweep(name, _plain(list(values)), units),
            outputs={k: Column(u, _plain(list(v))) for k, (u, v) in outputs.items()},
            metadata=_plain(dict(metadata or {})),
            provenance=_provenance(),
        )

    def __len__(self) -> int:
        return len(self.sweep.values)

    def column(self, name: str) -> np.ndarray:
        """Output column as an array (``None`` becomes NaN for numeric data)."""
        if name == self.sweep.name:
            return np.asarray(self.sweep.values, dtype=float)
        values = self.outputs[name].values
        if any(isinstance(v, str) for v in values):
            return np.asarray(values, dtype=object)
        return np.asarray([np.nan if v is None else v for v in values], dtype=float)

    def to_dict(self, provenance: bool = True) -> dict[str, Any]:
        out = {
            "schema_version": self.schema_version,
            "scenario": self.scenario,
            "kind": self.kind,
            "config": self.config,
            "rng_seed": self.rng_seed,
            "sweep": {"name": self.sweep.name, "values": self.sweep.values, "units": self.sweep.units},
            "outputs": {k: {"units": c.units, "values": c.values} for k, c in self.outputs.items()},
            "metadata": self.metadata,
        }
        if provenance:
            out["provenance"] = self.provenance
        return out

    def data_json(self) -> str:
        """Canonical JSON of everything except provenance."""
        return json.dumps(self.to_dict(provenance=False), sort_keys=True, indent=2) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        """Columns with unit-suffixed headers after ``#`` comment lines naming
        the scenario and seed. Contains no timestamps."""
        buf = io.StringIO()
        buf.write(f"# scenario: {self.scenario}\n# kind: {self.kind}\n# rng_seed: {self.rng_seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.outputs)
        w.writerow([column_header(self.sweep.name, self.sweep.units)]
                   + [column_header(n, self.outputs[n].units) for n in names])
        for i, x in enumerate(self.sweep.values):
            row = [x] + [self.outputs[n].values[i] for n in names]
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
        return buf.getvalue()

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise InvalidParameterError("format", f"must be 'json' or 'csv', got {fmt!r}")

    def validate(self) -> None:
        """Check against the bundled record schema; raises ConfigError."""
        validate(self.to_dict(), "record")


def _provenance() -> dict[str, Any]:
    try:
        version = _metadata.version("artifact")
    except _metadata.PackageNotFoundError:
        version = "unknown"
    return {"created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"), "package_version": version}


def record_from_dict(doc: Mapping[str, Any]) -> ExperimentRecord:
    validate(dict(doc), "record")
    sw = doc["sweep"]
    return ExperimentRecord(
        scenario=doc["scenario"],
        kind=doc["kind"],
        config=doc["config"],
        rng_seed=doc["rng_seed"],
        sweep=Sweep(sw["name"], list(sw["values"]), sw["units"]),
        outputs={k: Column(c["units"], list(c["values"])) for k, c in doc["outputs"].items()},
        metadata=doc.get("metadata", {}),
        provenance=doc.get("provenance", {}),
        schema_version=doc["schema_version"],
    )


def load_record(path: str | Path) -> ExperimentRecord:
    """Read a JSON record; any problem is reported as ConfigError naming the file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(str(path), exc.strerror or str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return record_from_dict(doc)
    except (ConfigError, InvalidParameterError) as exc:
        raise ConfigError(str(path), str(exc)) from exc
