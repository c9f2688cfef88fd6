"""Shared fixtures: synthetic traces at several scales, reused across files.

Session scope keeps the expensive full-scale generation and pipeline runs to
one execution each.
"""

import numpy as np
import pytest

from swakit.engine import PipelineConfig, Strategy, run_pipeline
from swakit.trace import (
    TraceConfig,
    build_catalog,
    default_arrival_dist,
    default_degree_dist,
    default_span_dist,
    generate_trace,
)


def make_trace(services, instances, *, seed, repeat=1.0, user_pool=5000,
               shared_atomics=False, partitions=2):
    """Build a catalog + trace from one master seed, like the CLI does."""
    cat_seed, trace_seed = np.random.SeedSequence(seed).spawn(2)
    catalog = build_catalog(
        services,
        default_degree_dist(),
        seed=cat_seed,
        n_partitions=partitions,
        shared_atomics=shared_atomics,
    )
    cfg = TraceConfig(
        instance_count=instances,
        arrival_dist=default_arrival_dist(),
        span_dist=default_span_dist(),
        user_pool=user_pool,
        repeat_factor=repeat,
        seed=trace_seed,
    )
    return generate_trace(catalog, cfg)


@pytest.fixture(scope="session")
def full_scale_trace():
    """The reference workload: 13997 instances over 10000 distinct services."""
    return make_trace(10000, 13997, seed=0, repeat=1.3997)


@pytest.fixture(scope="session")
def small_trace():
    return make_trace(200, 300, seed=3, repeat=1.5)


@pytest.fixture(scope="session")
def collision_trace():
    """Shared sub-service pool + repeated services + few users: ambiguous keys."""
    return make_trace(400, 3000, seed=2, repeat=2.0, user_pool=120,
                      shared_atomics=True)


@pytest.fixture(scope="session")
def clean_trace():
    """Every instance uses a distinct service: association keys never collide."""
    return make_trace(2500, 2500, seed=5, repeat=1.0, user_pool=5000)


@pytest.fixture(scope="session")
def swa_full_run(full_scale_trace):
    cfg = PipelineConfig(kind="swa", capacity=13, timeout_s=22,
                         strategy=Strategy.HEAD_TS_IP)
    return run_pipeline(full_scale_trace, cfg, keep_members=True)


@pytest.fixture(scope="session")
def swa_small_run(small_trace):
    cfg = PipelineConfig(kind="swa", capacity=13, timeout_s=22,
                         strategy=Strategy.HEAD_TS_IP)
    return run_pipeline(small_trace, cfg, keep_members=True)
