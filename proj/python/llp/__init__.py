"""Python front end for the llp online learning library.

Configs are plain dicts with the same layout as the JSON files the CLI reads.
"""

import json

from . import _llp
from ._llp import ConfigError, UnsupportedScenarioError, dual_closed_form

__all__ = [
    "ConfigError",
    "UnsupportedScenarioError",
    "bench",
    "compare",
    "dual_closed_form",
    "fit_growth_exponent",
    "normalize_config",
    "run",
    "sweep",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def run(config):
    """Run one experiment. Returns the summary and per-round series."""
    out = _llp.run_json(_text(config))
    out["summary"] = json.loads(out["summary"])
    return out


def bench(config):
    """Hindsight benchmark of a run: feasibility, x_star and its total cost."""
    return run(config)["summary"]["benchmark"]


def normalize_config(config):
    """The config with every default filled in."""
    return json.loads(_llp.normalize_config_json(_text(config)))


def sweep(config, workers=0):
    """Returns (cells_csv, fits_csv)."""
    return _llp.sweep_json(_text(config), workers)


def compare(configs, record_every=1, workers=0):
    """Returns (labels, csv) for configs sharing one scenario."""
    return _llp.compare_json([_text(c) for c in configs], record_every, workers)


def fit_growth_exponent(samples, fraction=0.5):
    """Log-log slope of value against horizon over the largest horizons."""
    return _llp.fit_growth_exponent([tuple(s) for s in samples], fraction)
