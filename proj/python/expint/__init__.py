"""Exponential time integrators (EPI2, EPIRK4) with Runge-Kutta baselines."""

from ._expint import (
    ConfigError,
    ConvergenceError,
    DimensionError,
    Diffusion1D,
    Diffusion2D,
    ExpintError,
    IoError,
    NumericError,
    SingularPointError,
    StudyConfig,
    StudyReport,
    UnsupportedOrderError,
    emit_csv,
    expm,
    integrate,
    kiops_eval,
    load_study,
    methods,
    nominal_order,
    phi_combination_dense,
    phi_k,
    run_study,
    two_wire_field,
)

__all__ = [name for name in dir() if not name.startswith("_")]
