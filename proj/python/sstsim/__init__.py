"""Python front end to the sstsim C++ library.

Configs are plain dicts in the same shape as the JSON config files.
"""

import json

from . import _core
from ._core import ConfigError

__all__ = [
    "ConfigError",
    "blocking_resonance",
    "catalog",
    "default_config",
    "margins",
    "run_scenario",
    "simulate",
]


def _dump(cfg):
    return "" if cfg is None else json.dumps(cfg)


def default_config():
    return json.loads(_core.default_config_json())


def normalise_config(cfg):
    """Fill defaults and validate; raises ConfigError."""
    return json.loads(_core.normalise_config_json(_dump(cfg)))


def blocking_resonance(cfg=None):
    return _core.blocking_resonance(_dump(cfg))


def catalog():
    return list(_core.catalog())


def margins(cfg=None, resonant=True):
    return json.loads(_core.margins_json(_dump(cfg), resonant))


def simulate(cfg=None):
    """Runs the scenario in cfg. Returns (columns, summary): columns maps
    trace column names to numpy arrays."""
    cols, summary = _core.simulate(_dump(cfg))
    return cols, json.loads(summary)


def run_scenario(name, cfg=None, *, resonant=None, duration=None, decimate=None, seed=None):
    """Runs a catalog scenario. Returns (summary, traces) with traces keyed by
    run label."""
    opts = {k: v for k, v in dict(resonant=resonant, duration=duration, decimate=decimate, seed=seed).items()
            if v is not None}
    summary, traces = _core.run_scenario(name, _dump(cfg), json.dumps(opts) if opts else "")
    return json.loads(summary), traces
