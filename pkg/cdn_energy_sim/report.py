"""Energy consumption statistics and their file formats.

Three files are produced per run:

* ``summary.json``: canonical JSON (sorted keys, floats rounded to 12
  significant digits) with the aggregate, per-cluster and replication ledgers,
  cache statistics and the top contents by energy.
* ``timeseries.csv``: cumulative watt-hours per class and the surrogate hit
  rate at every report tick.
* ``requests.csv``: one audit row per request.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Union

from . import __version__
from .energy import ENERGY_CLASSES, EnergyClass, EnergyLedger
from .errors import ReportWriteError
from .logging import get_logger
from .scenario import Tier
from .utils import canonicalize, format_float

if TYPE_CHECKING:
    from .engine import ReplicationAction, RequestOutcome

logger = get_logger(__name__)

TIMESERIES_HEADER = (
    ["t_s"]
    + [f"{energy_class.value}_wh" for energy_class in ENERGY_CLASSES]
    + ["total_wh", "hit_rate"]
)
REQUESTS_HEADER = [
    "t_s",
    "cluster_id",
    "content_id",
    "serving_node",
    "hops",
    "size_bits",
    "transport_wh",
    "device_wh",
    "decode_wh",
    "replicas",
    "downloads_per_hr",
    "bitrate_bps",
    "device_profile",
]

PathLike = Union[str, Path]


@dataclass
class TierStats:
    hits: int = 0
    misses: int = 0

    def to_dict(self) -> Dict[str, int]:
        return {"hits": self.hits, "misses": self.misses}


@dataclass(frozen=True)
class TimeseriesPoint:
    t_s: float
    cumulative_wh: Dict[EnergyClass, float]
    total_wh: float
    hit_rate: float


@dataclass(frozen=True)
class RunMetadata:
    seed: int
    scenario_hash: str
    horizon_s: float
    report_interval_s: float
    tool_version: str = __version__

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "scenario_hash": self.scenario_hash,
            "horizon_s": self.horizon_s,
            "report_interval_s": self.report_interval_s,
            "tool_version": self.tool_version,
        }


@dataclass
class SimulationReport:
    metadata: RunMetadata
    ledger: EnergyLedger = field(default_factory=EnergyLedger)
    cluster_ledgers: Dict[str, EnergyLedger] = field(default_factory=dict)
    replication_ledger: EnergyLedger = field(default_factory=EnergyLedger)
    content_ledgers: Dict[str, EnergyLedger] = field(default_factory=dict)
    tier_stats: Dict[Tier, TierStats] = field(
        default_factory=lambda: {tier: TierStats() for tier in Tier}
    )
    timeseries: List[TimeseriesPoint] = field(default_factory=list)
    requests: List["RequestOutcome"] = field(default_factory=list)
    replications: List["ReplicationAction"] = field(default_factory=list)

    @property
    def request_count(self) -> int:
        return self.ledger.request_count

    @property
    def surrogate_hits(self) -> int:
        return self.tier_stats[Tier.EDGE].hits + self.tier_stats[Tier.REGIONAL].hits

    @property
    def hit_rate(self) -> float:
        if self.request_count == 0:
            return 0.0
        return self.surrogate_hits / self.request_count

    def top_contents(self, k: int = 10) -> List[Dict[str, Any]]:
        """The ``k`` contents with the highest energy, ties by id."""
        ranked = sorted(
            self.content_ledgers.items(), key=lambda item: (-item[1].total_wh, item[0])
        )
        return [
            {
                "content_id": content_id,
                "requests": ledger.request_count,
                "total_wh": ledger.total_wh,
                "transport_wh": ledger.transport_wh,
            }
            for content_id, ledger in ranked[:k]
        ]

    def summary(self, top_k: int = 10) -> Dict[str, Any]:
        cache: Dict[str, Any] = {
            tier.value: stats.to_dict() for tier, stats in self.tier_stats.items()
        }
        cache["hit_rate"] = self.hit_rate
        replication = self.replication_ledger.to_dict()
        replication["pushes"] = len(self.replications)
        return {
            "metadata": self.metadata.to_dict(),
            "ledger": self.ledger.to_dict(),
            "transport_wh": self.ledger.transport_wh,
            "clusters": {
                cluster_id: ledger.to_dict()
                for cluster_id, ledger in sorted(self.cluster_ledgers.items())
            },
            "replication": replication,
            "cache": cache,
            "top_contents": self.top_contents(top_k),
        }


def _open_for_write(path: PathLike) -> Any:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise ReportWriteError("Cannot open report file", str(path), cause=exc) from exc


def render_summary_json(report: SimulationReport, top_k: int = 10) -> str:
    """Canonical summary text: identical reports render to identical bytes."""
    payload = canonicalize(report.summary(top_k))
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_summary_json(report: SimulationReport, path: PathLike, top_k: int = 10) -> Path:
    """
    Write summary.json.

    Raises:
        ReportWriteError: If the file cannot be written
    """
    text = render_summary_json(report, top_k)
    handle = _open_for_write(path)
    try:
        with handle:
            handle.write(text)
    except OSError as exc:
        raise ReportWriteError("Cannot write summary", str(path), cause=exc) from exc
    logger.info("Summary written", extra={"path": str(path)})
    return Path(path)


def write_timeseries_csv(report: SimulationReport, path: PathLike) -> Path:
    """
    Write timeseries.csv, one row per report tick.

    Raises:
        ReportWriteError: If the file cannot be written
    """
    handle = _open_for_write(path)
    try:
        with handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(TIMESERIES_HEADER)
            for point in report.timeseries:
                writer.writerow(
                    [format_float(point.t_s)]
                    + [format_float(point.cumulative_wh[cls]) for cls in ENERGY_CLASSES]
                    + [format_float(point.total_wh), format_float(point.hit_rate)]
                )
    except OSError as exc:
        raise ReportWriteError("Cannot write time series", str(path), cause=exc) from exc
    logger.info("Time series written", extra={"path": str(path), "rows": len(report.timeseries)})
    return Path(path)


def write_requests_csv(report: SimulationReport, path: PathLike) -> Path:
    """
    Write requests.csv, the per-request audit trail.

    Raises:
        ReportWriteError: If the file cannot be written
    """
    handle = _open_for_write(path)
    try:
        with handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(REQUESTS_HEADER)
            for outcome in report.requests:
                writer.writerow(
                    [
                        format_float(outcome.t_s),
                        outcome.cluster_id,
                        outcome.content_id,
                        outcome.serving_node,
                        outcome.hops,
                        format_float(outcome.size_bits),
                        format_float(outcome.transport_wh),
                        format_float(outcome.device_wh),
                        format_float(outcome.decode_wh),
                        outcome.replicas,
                        format_float(outcome.downloads_per_hr),
                        format_float(outcome.bitrate_bps),
                        outcome.device_profile or "",
                    ]
                )
    except OSError as exc:
        raise ReportWriteError("Cannot write request log", str(path), cause=exc) from exc
    logger.info("Request log written", extra={"path": str(path), "rows": len(report.requests)})
    return Path(path)


def write_report(
    report: SimulationReport,
    out_dir: PathLike,
    requests_csv: bool = False,
    top_k: int = 10,
) -> Dict[str, Path]:
    """Write every report file of a run into ``out_dir``."""
    out = Path(out_dir)
    written = {
        "summary": write_summary_json(report, out / "summary.json", top_k),
        "timeseries": write_timeseries_csv(report, out / "timeseries.csv"),
    }
    if requests_csv:
        written["requests"] = write_requests_csv(report, out / "requests.csv")
    return written
