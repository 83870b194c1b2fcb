"""Simulation library for an SFQ-programmable superconducting flux DAC that
biases a fluxonium qubit.

Layers, bottom up: device parameters (:mod:`units`), the storage-loop
physics (:mod:`squid`), the digit-level DAC (:mod:`dac`), the SFQ
programming chain (:mod:`sfq`), the qubit (:mod:`fluxonium`), parameter
extraction (:mod:`calibration`) and the experiment harness
(:mod:`config`, :mod:`records`, :mod:`harness`, :mod:`cli`).
"""

from .calibration import FitParameter, FitResult, fit_dac_step, fit_flux_noise, fit_fluxonium, flux_from_frequency
from .config import ScenarioConfig, config_from_dict, load_config
from .dac import (
    DacEvent,
    DacState,
    OutputRange,
    PulseShape,
    apply_bias_pulse,
    ideal_window,
    output_range,
    qubit_flux_shift,
    reset,
    scan_plateau,
    single_step_amplitude,
    step_threshold,
    usable_window,
)
from .errors import (
    ConfigError,
    ConfinementError,
    DegenerateDataError,
    FluxDacError,
    InvalidParameterError,
    NonConvergenceError,
    OutOfRangeError,
    PresetError,
    RoutingError,
    ScheduleError,
    WaveformError,
    WindowOverflowError,
)
from .fluxonium import (
    DephasingModel,
    FluxoniumParams,
    T1Model,
    dephasing_rate,
    dephasing_rates,
    eigenenergies,
    f01,
    flux_sensitivity,
    oscillator_basis_spectrum,
    qubit_point,
    spectrum,
    t1_sample,
    total_flux,
)
from .harness import (
    calibrate,
    run_coherence,
    run_demux_check,
    run_margin_sweep,
    run_plateau_scan,
    run_sfq_program,
    run_spectroscopy,
)
from .records import ExperimentRecord, load_record
from .sfq import (
    DemuxTree,
    MarginProfile,
    ScheduleEntry,
    SfqPulse,
    array_report,
    dc_sfq_convert,
    demux_route,
    jtl_propagate,
    margins,
    program_array,
    program_dac_sfq,
)
from .squid import MetastableState, Trajectory, critical_tilt, find_minima, potential, rcsj_transient
from .units import PHI0, DerivedParams, DeviceParams, derive, get_preset, load_device_presets
from .waveform import PulseWaveform

__version__ = "0.1.0"
