"""Shared, cached solves of the two treatment scenarios used across tests.

The sweeps take seconds each; caching keeps the suite's total runtime sane.
"""

from functools import lru_cache

import numpy as np

from hivdelay import GridConfig, HistorySpec, ModelParams, OcpConfig, fbsm_solve

TABLE1 = dict(lambda_src=1.0, d=0.1, a=0.2, p=1.0, c=0.1, h=0.1)


def params(beta: float) -> ModelParams:
    return ModelParams(beta=beta, **TABLE1)


@lru_cache(maxsize=None)
def solve_no_delay(step: float = 0.01):
    """Treatment run without delays: tf = 10, history (5, 1, 2), u0 = 0."""
    grid = GridConfig.from_delays(0.0, 10.0, step)
    config = OcpConfig(params=params(0.5), grid=grid, history=HistorySpec(5.0, 1.0, 2.0, 0.0))
    return config, fbsm_solve(config)


@lru_cache(maxsize=None)
def solve_with_delays(step: float = 0.01):
    """Treatment run with incubation 0.5 and pharmacological 0.1 delays."""
    grid = GridConfig.from_delays(0.0, 10.0, step, tau=0.5, xi=0.1)
    config = OcpConfig(params=params(0.5), grid=grid, history=HistorySpec(5.0, 1.0, 2.0, 0.0))
    return config, fbsm_solve(config)
