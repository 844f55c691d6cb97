"""Flow-map trajectory tilting: reward-tilted sampling and search on Gaussian-mixture transports."""

import json as _json

from ._fmtt import (
    ConfigError,
    DegenerateEnsembleError,
    DiscrepancyOptions,
    DomainError,
    FlowMap,
    GaussianMixture,
    Problem,
    Schedule,
    SchemeError,
    ToleranceError,
    ess,
    gaussian_tilt_linear,
    gaussian_tilt_quadratic,
    incremental_discrepancy,
    quality_ratio,
    refine_schedule,
    snis_tilted_mean,
    thermodynamic_length,
    var_model,
)
from . import _fmtt

__all__ = [
    "ConfigError", "DegenerateEnsembleError", "DiscrepancyOptions", "DomainError", "FlowMap", "GaussianMixture",
    "Problem", "Schedule", "SchemeError", "ToleranceError", "ess", "gaussian_tilt_linear", "gaussian_tilt_quadratic",
    "incremental_discrepancy", "quality_ratio", "refine_schedule", "snis_tilted_mean", "thermodynamic_length",
    "var_model", "run_command", "resolve_config", "verify",
]


def run_command(command, config, out_dir, base_dir="."):
    """Run sample/search/diagnose/refine on a config dict; returns the summary dict."""
    return _json.loads(_fmtt.run_command(command, _json.dumps(config), str(out_dir), str(base_dir)))


def resolve_config(config):
    """Validated config with every default filled in."""
    return _json.loads(_fmtt.resolve_config(_json.dumps(config)))


def verify(only=(), rel_tol=1e-10):
    """Invariant suite; returns one dict per check."""
    return _fmtt.verify(list(only), rel_tol)
