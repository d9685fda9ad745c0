import time

import numpy as np
import pytest

from cdn_energy_sim.cache import NodeCache
from cdn_energy_sim.engine import run
from cdn_energy_sim.scenario import CachePolicy, load_scenario, parse_scenario
from cdn_energy_sim.workload import Catalog, RngStreams, build_catalog, pick_contents
from tests.test_config import MINIMAL_SCENARIO, scenario_document


def test_performance_minimal_scenario():
    """Test the minimal scenario runs quickly"""
    start_time = time.time()
    report = run(load_scenario(MINIMAL_SCENARIO))
    end_time = time.time()
    assert report.request_count > 0
    assert end_time - start_time < 2.0


def test_performance_catalog_weights():
    """Test vectorised popularity over a large catalog"""
    scenario = parse_scenario(scenario_document(catalog_size=20000))
    catalog = Catalog(build_catalog(scenario.content_space, RngStreams(1), scenario.horizon_s))
    start_time = time.time()
    for step in range(200):
        weights = catalog.weights_at(float(step))
    end_time = time.time()
    assert weights.shape == (20000,)
    assert end_time - start_time < 2.0


def test_performance_bulk_picks():
    """Test drawing many requests at once"""
    weights = np.linspace(1.0, 2.0, 10000)
    start_time = time.time()
    picks = pick_contents(weights, np.random.default_rng(0), 1_000_000)
    end_time = time.time()
    assert len(picks) == 1_000_000
    assert end_time - start_time < 2.0


@pytest.mark.parametrize("policy", [CachePolicy.LRU, CachePolicy.LFU])
def test_performance_cache_churn(policy):
    """Test a small cache under heavy eviction"""
    cache = NodeCache("edge", 64.0, policy)
    start_time = time.time()
    for step in range(20000):
        cache.admit(f"content-{step % 500}", 1.0, float(step))
    end_time = time.time()
    assert len(cache) == 64
    assert end_time - start_time < 5.0


@pytest.mark.slow
def test_performance_request_throughput():
    """Test thousands of requests complete in reasonable time"""
    scenario = parse_scenario(scenario_document(user_count=200, horizon_s=3600.0))
    start_time = time.time()
    report = run(scenario, record_requests=False)
    end_time = time.time()
    assert report.request_count > 1000
    assert not report.requests
    assert end_time - start_time < 30.0
