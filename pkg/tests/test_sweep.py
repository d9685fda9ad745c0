import csv
import json

import pytest

from cdn_energy_sim.engine import run
from cdn_energy_sim.errors import SweepError
from cdn_energy_sim.report import write_report
from cdn_energy_sim.scenario import apply_seed, parse_scenario
from cdn_energy_sim.sweep import SWEEP_HEADER, SweepRun, SweepSpec, run_document, run_sweep
from tests.test_config import scenario_document

EDGE_CAPACITY = "topology.nodes.2.cache_capacity_bits"


def _rows(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def test_sweep_spec_requires_values_and_seeds():
    """Test empty value or seed lists are rejected"""
    with pytest.raises(SweepError):
        SweepSpec(param_path=EDGE_CAPACITY, values=[], seeds=[0])
    with pytest.raises(SweepError):
        SweepSpec(param_path=EDGE_CAPACITY, values=[1], seeds=[])


def test_sweep_spec_runs_cross_product():
    """Test runs enumerate every value and seed"""
    spec = SweepSpec(param_path=EDGE_CAPACITY, values=[0, 1], seeds=[5, 3])
    assert [(r.value_index, r.seed) for r in spec.runs()] == [(0, 5), (0, 3), (1, 5), (1, 3)]
    assert spec.runs()[1].dirname == "run-0-seed-3"


def test_unresolvable_path_rejected():
    """Test a sweep over a missing parameter fails before running"""
    spec = SweepSpec(param_path="topology.links.0", values=[1], seeds=[0])
    with pytest.raises(SweepError):
        run_sweep(scenario_document(), spec)


def test_single_run_matches_simulate(tmp_path):
    """Test a 1x1 sweep reproduces a plain run"""
    document = scenario_document()
    spec = SweepSpec(param_path=EDGE_CAPACITY, values=[2e10], seeds=[3])
    results = run_sweep(document, spec, out_dir=tmp_path / "sweep")

    document["topology"]["nodes"][2]["cache_capacity_bits"] = 2e10
    write_report(run(parse_scenario(apply_seed(document, 3))), tmp_path / "simulate")

    swept = tmp_path / "sweep" / "run-0-seed-3"
    for name in ("summary.json", "timeseries.csv"):
        assert (swept / name).read_bytes() == (tmp_path / "simulate" / name).read_bytes()
    summary = json.loads((swept / "summary.json").read_text())
    assert results[0].ok
    assert results[0].ledger["total_wh"] == pytest.approx(summary["ledger"]["total_wh"])


def test_sweep_table_sorted(tmp_path):
    """Test the sweep table is ordered by value index then seed"""
    spec = SweepSpec(param_path=EDGE_CAPACITY, values=[0, 1e10], seeds=[2, 1])
    run_sweep(scenario_document(horizon_s=600.0), spec, out_dir=tmp_path, jobs=2)
    rows = _rows(tmp_path / "sweep.csv")
    assert list(rows[0]) == SWEEP_HEADER
    assert [(row["value_index"], row["seed"]) for row in rows] == [
        ("0", "1"),
        ("0", "2"),
        ("1", "1"),
        ("1", "2"),
    ]
    assert {row["status"] for row in rows} == {"ok"}
    assert [row["value"] for row in rows] == ["0", "0", "10000000000", "10000000000"]


def test_failed_run_recorded(tmp_path):
    """Test an invalid value fails its own run only"""
    spec = SweepSpec(param_path="simulation.horizon_s", values=[600.0, -1.0], seeds=[0])
    results = run_sweep(scenario_document(), spec, out_dir=tmp_path)
    assert [result.ok for result in results] == [True, False]
    rows = _rows(tmp_path / "sweep.csv")
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"].startswith("error: ")
    assert "horizon_s" in rows[1]["status"]
    assert rows[1]["total_wh"] == ""
    assert not (tmp_path / "run-1-seed-0").exists()


def test_out_of_range_value_fails_its_run():
    """Test a value beyond float range becomes a failed row"""
    spec = SweepSpec(param_path="simulation.horizon_s", values=[600.0, 10**400], seeds=[0])
    results = run_sweep(scenario_document(), spec)
    assert [result.ok for result in results] == [True, False]
    assert "must be finite" in results[1].status


def test_run_document_leaves_base_untouched():
    """Test a run edits its own copy of the document"""
    document = scenario_document()
    run_document(document, EDGE_CAPACITY, SweepRun(value_index=0, value=0.0, seed=9))
    assert document["topology"]["nodes"][2]["cache_capacity_bits"] == 1e10
    assert document["simulation"]["seed"] == 7


def test_edge_capacity_lowers_transport():
    """Test more edge capacity never raises transport energy"""
    document = scenario_document(regional_capacity_bits=0.0)
    for path in (EDGE_CAPACITY, "topology.nodes.3.cache_capacity_bits"):
        spec = SweepSpec(param_path=path, values=[0.0, 1e12], seeds=[1, 2])
        results = run_sweep(document, spec)
        by_seed = {}
        for result in results:
            by_seed.setdefault(result.run.seed, []).append(result.transport_wh)
        for transports in by_seed.values():
            assert transports[1] <= transports[0]
