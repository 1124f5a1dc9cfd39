"""Delayed SEIQRD epidemic model: integrator, stability analysis, sweeps and reports."""

__version__ = "0.1.0"

from .analysis import (
    StabilityReport,
    classify_dfe,
    classify_endemic,
    critical_delay,
    critical_delay_by_root_tracking,
    endemic_equilibrium,
    leading_root,
    reproduction_number,
    transversality,
)
from .config import ConfigError, RunConfig, format_config, parse_config
from .dde import (
    ConfigurationError,
    DelayedVectorField,
    IntegrationError,
    Trajectory,
    constant_history,
    integrate,
)
from .experiments import (
    SensitivityResult,
    SweepSpec,
    SweepTable,
    bifurcation_sweep,
    isolation_delay_sweep,
    isolation_probability_sweep,
    r0_sweep,
    sensitivity_scan,
    temperature_sweep,
)
from .io import ResultBundle, read_csv, write_csv
from .model import DEFAULT_INITIAL, ModelParams, ParameterError, State, TempBetaModel, simulate
from .svg import plot_svg

__all__ = [
    "ConfigError", "ConfigurationError", "DEFAULT_INITIAL", "DelayedVectorField",
    "IntegrationError", "ModelParams", "ParameterError", "ResultBundle", "RunConfig",
    "SensitivityResult", "StabilityReport", "State", "SweepSpec", "SweepTable",
    "TempBetaModel", "Trajectory", "bifurcation_sweep", "classify_dfe", "classify_endemic",
    "constant_history", "critical_delay", "critical_delay_by_root_tracking",
    "endemic_equilibrium", "format_config", "integrate", "isolation_delay_sweep",
    "isolation_probability_sweep", "leading_root", "parse_config", "plot_svg", "r0_sweep",
    "read_csv", "reproduction_number", "sensitivity_scan", "simulate", "temperature_sweep",
    "transversality", "write_csv",
]
