"""Geometric RSK, Toda flows, tau functions and Whittaker diffusions.

Triangles are lists of rows: ``[[x11], [x21, x22], ...]``.
"""

import json

from ._core import *  # noqa: F401,F403
from ._core import generator_test_json, run_suite_json

__all__ = [name for name in dir() if not name.startswith("_")]


def run_suite(name, quick=True, seed=20240611):
    """Run a verification suite and return its report as a dict."""
    return json.loads(run_suite_json(name, quick, seed))


def generator_test(lam, eps=1.0, replicas=2000, dt=1e-3, seed=1, drift_scale=1.0):
    """Two-sample test of the path transform of Brownian motion against the diffusion."""
    return json.loads(generator_test_json(lam, eps, replicas, dt, seed, drift_scale))
