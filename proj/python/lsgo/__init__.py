"""Power allocation for decentralized detection in sensor networks."""

import json
import os

from ._core import (
    WsnConfig,
    WsnInstance,
    algorithm_names,
    fading_seed,
    friedman_ranks,
    q_function,
    signal_covariance,
    total_power,
    wilcoxon,
)
from . import _core

__all__ = [
    "WsnConfig",
    "WsnInstance",
    "algorithm_names",
    "fading_seed",
    "friedman_ranks",
    "q_function",
    "run_experiment",
    "signal_covariance",
    "solve",
    "total_power",
    "wilcoxon",
]


def solve(instance, algorithm, max_evals=60000, population=100, seed=1, overrides=None, bounds=(0.0, 15.0)):
    """Minimise the penalized power of `instance` with a named algorithm.

    Returns a dict with best_position, best_fitness, evaluations, trace,
    power and feasible.
    """
    return _core._solve(instance, algorithm, int(max_evals), int(population), int(seed),
                        json.dumps(overrides or {}), float(bounds[0]), float(bounds[1]))


def run_experiment(config, base_dir=""):
    """Run an experiment from a config dict or a JSON file path; returns mean best_f per case and algorithm."""
    if isinstance(config, (str, os.PathLike)):
        with open(config) as fh:
            text = fh.read()
        base_dir = base_dir or os.path.dirname(os.path.abspath(config))
        return _core._run_experiment(json.dumps(json.loads(text)), str(base_dir))
    return _core._run_experiment(json.dumps(config), str(base_dir))
