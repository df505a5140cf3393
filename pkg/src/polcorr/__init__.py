"""Polarization correlation of femtosecond-pumped type-II SPDC pairs behind an X-Y delay.

The full four-component detection amplitude and the truncated XX/YY-only
model are both available; see :mod:`polcorr.interference`.
"""
from .amplitude import (
    BiphotonAmplitude,
    OverlapResult,
    apply_filters,
    build_amplitude,
    norm,
    overlap,
    prepare_amplitude,
)
from .analysis import (
    ModulationCurve,
    Simulation,
    VisibilityResult,
    fit_modulation,
    ingest_counts_csv,
    scan_tau,
    scan_theta2,
    synth_counts,
    visibility_map,
)
from .config import (
    AnalyzerPair,
    Crystal,
    DelayElement,
    ExperimentConfig,
    FilterSpec,
    ModelKind,
    PumpPulse,
    TimeGrid,
    default_config,
    dump_config,
    load_config,
    validate_config,
)
from .errors import ConfigError, DataError, GridError, NumericalError, PolcorrError
from .estimators import CoincidenceSimulator, ModulationFitter
from .interference import (
    ComponentAmplitudes,
    PolarizationDensityMatrix,
    bell_fidelity,
    coincidence_rate,
    component_amplitudes,
    density_matrix,
    detection_amplitude,
    mixture_law_rate,
    rate_from_rho,
    rate_no_delay,
)

__version__ = "0.1.0"
