"""Cooperative PMCW phase-code design against radar-to-radar interference."""

__version__ = "0.1.0"

from .waveform import (
    DesignGrid,
    HermitianForm,
    IncompatibleCodesError,
    PhaseCode,
    circular_shift,
    cross_correlation,
    interference_objective,
    steering_vector,
)
from .codesign import (
    DesignTrace,
    SolverConfig,
    build_quadratic_form,
    codesign,
    diagonal_load,
    dominant_eigenvalue,
    pmli_step,
    random_pair,
    solve_subproblem,
)
from .radarsim import (
    InterfererParams,
    RangeDopplerMap,
    Scenario,
    TargetParams,
    WaveformTiming,
    paper_scenario,
    simulate,
)
from .metrics import DetectionReport, interference_power_db, threshold_detect

__all__ = [
    "DesignGrid", "HermitianForm", "IncompatibleCodesError", "PhaseCode", "circular_shift",
    "cross_correlation", "interference_objective", "steering_vector",
    "DesignTrace", "SolverConfig", "build_quadratic_form", "codesign", "diagonal_load",
    "dominant_eigenvalue", "pmli_step", "random_pair", "solve_subproblem",
    "InterfererParams", "RangeDopplerMap", "Scenario", "TargetParams", "WaveformTiming",
    "paper_scenario", "simulate",
    "DetectionReport", "interference_power_db", "threshold_detect",
]
