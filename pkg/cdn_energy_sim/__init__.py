"""Deterministic discrete-event simulator of CDN content delivery energy."""

__version__ = "0.1.0"

from .engine import run  # noqa: E402
from .errors import CdnEnergySimError  # noqa: E402
from .report import SimulationReport, write_report  # noqa: E402
from .scenario import Scenario, load_scenario, parse_scenario  # noqa: E402

__all__ = [
    "__version__",
    "CdnEnergySimError",
    "Scenario",
    "SimulationReport",
    "load_scenario",
    "parse_scenario",
    "run",
    "write_report",
]
