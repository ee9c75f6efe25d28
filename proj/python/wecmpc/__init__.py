"""Single-iteration MPC for wave energy converters (C++ core)."""

import json

from ._wecmpc import (
    ConfigError,
    Controller,
    ConvexityError,
    DesignError,
    InvalidParameterError,
    NumericError,
    count_step_flops,
    cost_config,
    default_config,
    design_report,
    flops_report,
    ipm_min_period,
    normalize_config,
    rt_min_period,
    solve_qp,
)

__all__ = [
    "ConfigError",
    "Controller",
    "ConvexityError",
    "DesignError",
    "InvalidParameterError",
    "NumericError",
    "count_step_flops",
    "cost_config",
    "default_config",
    "design",
    "design_report",
    "flops",
    "flops_report",
    "ipm_min_period",
    "normalize_config",
    "rt_min_period",
    "solve_qp",
]


def _text(config):
    if config is None:
        return ""
    return config if isinstance(config, str) else json.dumps(config)


def design(config=None):
    """Gain design report as a dict. `config` may be a dict or JSON text."""
    return json.loads(design_report(_text(config)))


def flops(config=None):
    """FLOP ledger and minimum-period report as a dict."""
    return json.loads(flops_report(_text(config)))
