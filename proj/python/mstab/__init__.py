"""Python access to the magnetic Schroedinger stability toolkit."""

import json

from ._core import (
    Field,
    Grid,
    MstabError,
    besov_norm,
    d,
    delta,
    diff_seminorm,
    fourier_hat,
    generate_pair,
    inner_product,
    l2_norm,
    load_field,
    lp_project,
    make_zetas,
    mollify,
    save_field,
    sobolev_norm,
)
from . import _core

__all__ = [
    "Field", "Grid", "MstabError", "besov_norm", "d", "delta", "diff_seminorm",
    "fourier_hat", "generate_pair", "inner_product", "l2_norm", "load_field",
    "lp_project", "make_zetas", "mollify", "save_field", "sobolev_norm",
    "default_config", "validate_config", "run_experiment",
]


def default_config():
    """Default experiment configuration as a dict."""
    return json.loads(_core.default_config_json())


def validate_config(config):
    """Raise MstabError if the configuration is rejected."""
    _core.validate_config_json(json.dumps(config))


def run_experiment(config):
    """Run calibration plus hold-out sweep and return the parsed report.

    @param config dict with the same keys as the JSON configuration file
    """
    return json.loads(_core.run_experiment_json(json.dumps(config)))
