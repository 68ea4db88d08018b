"""Python bindings for the Dirichlet continual-learning core."""

import json as _json

from ._core import (
    ConfigError,
    NumericalError,
    accuracy,
    avg_jga,
    digamma,
    dirichlet_kl,
    dist_n,
    gaussian_kl,
    js_divergence,
    lca,
    lgamma,
    selftest,
    span_f1,
    trigamma,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "accuracy",
    "avg_jga",
    "config",
    "digamma",
    "dirichlet_kl",
    "dist_n",
    "gaussian_kl",
    "js_divergence",
    "lca",
    "lgamma",
    "make_stream",
    "run",
    "selftest",
    "span_f1",
    "trigamma",
]


def config(base=None, overrides=()):
    """Validated config document: defaults or `base`, with "a.b=value" overrides applied."""
    from . import _core

    text = "" if base is None else _json.dumps(base)
    return _json.loads(_core._config_json(text, list(overrides)))


def make_stream(base=None, overrides=()):
    """Realized tasks in learning order, each with train/dev/test lists of {x, y}."""
    from . import _core

    return _json.loads(_core._stream_json(_json.dumps(config(base, overrides))))


def run(base=None, overrides=()):
    """Runs one stream and returns the metrics document."""
    from . import _core

    return _json.loads(_core._run_json(_json.dumps(config(base, overrides))))
