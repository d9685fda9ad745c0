"""Parameter sweeps: the cross product of values and seeds over one scenario."""

import copy
import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from . import engine
from .energy import ENERGY_CLASSES
from .errors import CdnEnergySimError, ReportWriteError, SweepError
from .logging import get_logger
from .report import write_report
from .scenario import JsonObject, apply_seed, parse_scenario
from .utils import format_float, resolve_path, set_path

logger = get_logger(__name__)

SWEEP_HEADER = (
    ["value_index", "value", "seed", "status"]
    + [f"{energy_class.value}_wh" for energy_class in ENERGY_CLASSES]
    + ["total_wh", "transport_wh", "hit_rate"]
)


@dataclass(frozen=True)
class SweepSpec:
    """A dotted parameter path, the values it takes and the seeds to run."""

    param_path: str
    values: Sequence[Any]
    seeds: Sequence[int]

    def __post_init__(self) -> None:
        if not self.values:
            raise SweepError("A sweep needs at least one value")
        if not self.seeds:
            raise SweepError("A sweep needs at least one seed")

    def check(self, document: JsonObject) -> None:
        """
        Raises:
            SweepError: If the parameter path does not resolve in ``document``
        """
        try:
            resolve_path(document, self.param_path)
        except (KeyError, ValueError) as exc:
            raise SweepError(
                f"Parameter path does not resolve: {self.param_path}",
                cause=exc,
                context={"param": self.param_path},
            ) from exc

    def runs(self) -> List["SweepRun"]:
        return [
            SweepRun(value_index=index, value=value, seed=seed)
            for index, value in enumerate(self.values)
            for seed in self.seeds
        ]


@dataclass(frozen=True)
class SweepRun:
    value_index: int
    value: Any
    seed: int

    @property
    def dirname(self) -> str:
        return f"run-{self.value_index}-seed-{self.seed}"


@dataclass(frozen=True)
class SweepResult:
    run: SweepRun
    status: str = "ok"
    ledger: Dict[str, float] = field(default_factory=dict)
    transport_wh: float = 0.0
    hit_rate: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def row(self) -> List[Any]:
        value = self.run.value
        if isinstance(value, float):
            rendered = format_float(value)
        else:
            rendered = json.dumps(value, sort_keys=True)
        row: List[Any] = [self.run.value_index, rendered, self.run.seed, self.status]
        if not self.ok:
            return row + [""] * (len(SWEEP_HEADER) - len(row))
        row += [format_float(self.ledger[f"{cls.value}_wh"]) for cls in ENERGY_CLASSES]
        row += [
            format_float(self.ledger["total_wh"]),
            format_float(self.transport_wh),
            format_float(self.hit_rate),
        ]
        return row


def run_document(
    document: JsonObject,
    param_path: str,
    run: SweepRun,
    out_dir: Optional[Union[str, Path]] = None,
    top_k: int = 10,
) -> SweepResult:
    """
    Execute one sweep run in isolation. Failures become the result's status.

    Module-level so worker processes can unpickle it.
    """
    try:
        variant = copy.deepcopy(document)
        set_path(variant, param_path, run.value)
        scenario = parse_scenario(apply_seed(variant, run.seed))
        report = engine.run(scenario, record_requests=False)
        if out_dir is not None:
            write_report(report, Path(out_dir) / run.dirname, top_k=top_k)
    except (CdnEnergySimError, KeyError, ValueError) as exc:
        logger.error(
            "Sweep run failed",
            extra={"value_index": run.value_index, "seed": run.seed, "error": str(exc)},
        )
        message = "; ".join(str(exc).splitlines())
        return SweepResult(run=run, status=f"error: {message}")
    return SweepResult(
        run=run,
        ledger=report.ledger.to_dict(),
        transport_wh=report.ledger.transport_wh,
        hit_rate=report.hit_rate,
    )


def run_sweep(
    document: JsonObject,
    spec: SweepSpec,
    out_dir: Optional[Union[str, Path]] = None,
    jobs: int = 1,
    top_k: int = 10,
) -> List[SweepResult]:
    """
    Run every (value, seed) combination of a sweep.

    Args:
        document: The decoded base scenario document
        spec: Parameter path, values and seeds
        out_dir: Where per-run directories and sweep.csv go; nothing is
            written when omitted
        jobs: Worker processes; 1 runs inline
        top_k: Size of the per-content summary in each run's summary.json

    Returns:
        Results sorted by (value index, seed), independent of completion order

    Raises:
        SweepError: If the parameter path does not resolve
    """
    spec.check(document)
    runs = spec.runs()
    logger.info(
        "Sweep started",
        extra={"param": spec.param_path, "runs": len(runs), "jobs": jobs},
    )

    if jobs <= 1 or len(runs) == 1:
        results = [run_document(document, spec.param_path, run, out_dir, top_k) for run in runs]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(run_document, document, spec.param_path, run, out_dir, top_k)
                for run in runs
            ]
            results = []
            for done, future in enumerate(futures, start=1):
                results.append(future.result())
                logger.info("Sweep progress", extra={"done": done, "runs": len(runs)})

    results.sort(key=lambda result: (result.run.value_index, result.run.seed))
    if out_dir is not None:
        write_sweep_csv(results, Path(out_dir) / "sweep.csv")

    failed = sum(1 for result in results if not result.ok)
    logger.info("Sweep finished", extra={"runs": len(results), "failed": failed})
    return results


def write_sweep_csv(results: Sequence[SweepResult], path: Union[str, Path]) -> Path:
    """
    Raises:
        ReportWriteError: If the file cannot be written
    """
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(SWEEP_HEADER)
            for result in results:
                writer.writerow(result.row())
    except OSError as exc:
        raise ReportWriteError("Cannot write sweep table", str(path), cause=exc) from exc
    return Path(path)
