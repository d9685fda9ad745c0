"""Energy models and the watt-hour ledger.

Transport and storage energy follow the macroscopic IPTV download model:

    E = 4 * B/3600 * (3 P_ES/C_ES + P_G/C_G + 2 P_PE/C_PE + (H+1) P_C/C_C
                      + H P_WDM/C_WDM + P_SR/C_SR) + 2 * B*R/D * P_SD/S_SD

with B in bits, capacities in bit/s (storage in bits), powers in watts, D in
downloads per hour, giving watt-hours. The constants 4, 3, 2, 2 are part of the
model and are not configurable.

Wireless terminals use the affine 802.11 power model

    P = rho_id + rho_tx*tau_tx + rho_rx*tau_rx + gamma_xg*lambda_g + gamma_xr*lambda_r

and decoding uses an affine stand-in, ``alpha + beta * bits`` joules, behind
:class:`DecodeModel` so a codec complexity model can replace it.
"""

from dataclasses import dataclass, fields
from enum import Enum
from typing import TYPE_CHECKING, Dict, Iterable, List, Mapping, Tuple

from .errors import (
    EnergyModelError,
    NegativeEnergyError,
    RateExceedsPhyError,
    ScenarioValidationError,
    ValidationIssue,
)

if TYPE_CHECKING:
    from .scenario import AirtimeUsage, EquipmentProfile, WirelessDeviceProfile

SECONDS_PER_HOUR = 3600.0
JOULES_PER_WH = 3600.0
LEDGER_TOLERANCE = 1e-9


class EnergyClass(str, Enum):
    """Ledger classes, in reporting order."""

    SWITCHING = "switching"
    GATEWAY = "gateway"
    PROVIDER_EDGE = "provider_edge"
    CORE = "core"
    WDM = "wdm"
    SERVER = "server"
    STORAGE = "storage"
    WIRELESS_DEVICE = "wireless_device"
    DECODING = "decoding"


ENERGY_CLASSES: Tuple[EnergyClass, ...] = tuple(EnergyClass)
TRANSPORT_CLASSES: Tuple[EnergyClass, ...] = ENERGY_CLASSES[:7]


@dataclass(frozen=True)
class DecodeModel:
    """Per-playback decoding energy: fixed joules plus joules per decoded bit."""

    alpha_j: float = 0.0
    beta_j_per_bit: float = 0.0

    def __post_init__(self) -> None:
        issues = [
            ValidationIssue(name, "must be >= 0")
            for name in ("alpha_j", "beta_j_per_bit")
            if not getattr(self, name) >= 0
        ]
        if issues:
            raise ScenarioValidationError(issues)


@dataclass(frozen=True)
class TransportContext:
    size_bits: float
    hops: int
    replicas: int
    downloads_per_hr: float
    equipment: "EquipmentProfile"

    def __post_init__(self) -> None:
        if not self.size_bits >= 0:
            raise EnergyModelError("size_bits must be >= 0")
        if self.hops < 0:
            raise EnergyModelError("hops must be >= 0")
        if self.replicas < 1:
            raise EnergyModelError("replicas must be >= 1")
        if not self.downloads_per_hr > 0:
            raise EnergyModelError("downloads_per_hr must be > 0")


def transport_storage_energy(
    ctx: TransportContext,
) -> Tuple[float, Dict[EnergyClass, float]]:
    """
    Energy of delivering one content over the CDN path, in watt-hours.

    Args:
        ctx: Content size, hop count, replica count, download rate and equipment

    Returns:
        The total and its per-class breakdown; the total is the sum of the
        breakdown in class order
    """
    eq = ctx.equipment
    b_h = ctx.size_bits / SECONDS_PER_HOUR
    h = ctx.hops
    breakdown = {
        EnergyClass.SWITCHING: 4.0 * b_h * (3.0 * eq.es_power_w / eq.es_capacity_bps),
        EnergyClass.GATEWAY: 4.0 * b_h * (eq.g_power_w / eq.g_capacity_bps),
        EnergyClass.PROVIDER_EDGE: 4.0 * b_h * (2.0 * eq.pe_power_w / eq.pe_capacity_bps),
        EnergyClass.CORE: 4.0 * b_h * ((h + 1) * eq.c_power_w / eq.c_capacity_bps),
        EnergyClass.WDM: 4.0 * b_h * (h * eq.wdm_power_w / eq.wdm_capacity_bps),
        EnergyClass.SERVER: 4.0 * b_h * (eq.sr_power_w / eq.sr_capacity_bps),
        EnergyClass.STORAGE: 2.0
        * (ctx.size_bits * ctx.replicas / ctx.downloads_per_hr)
        * (eq.sd_power_w / eq.sd_capacity_bits),
    }
    total = 0.0
    for energy_class in TRANSPORT_CLASSES:
        total += breakdown[energy_class]
    return total, breakdown


def device_power(profile: "WirelessDeviceProfile", usage: "AirtimeUsage") -> float:
    """Power draw of an 802.11 device in watts for the given airtime usage."""
    return (
        profile.rho_idle_w
        + profile.rho_tx_w * usage.tau_tx
        + profile.rho_rx_w * usage.tau_rx
        + profile.gamma_xg_j * usage.lambda_g_fps
        + profile.gamma_xr_j * usage.lambda_r_fps
    )


def download_usage(profile: "WirelessDeviceProfile", bitrate_bps: float) -> "AirtimeUsage":
    """Airtime usage of a receive-only stream at ``bitrate_bps``."""
    from .scenario import AirtimeUsage

    if not bitrate_bps > 0:
        raise EnergyModelError("bitrate_bps must be > 0")
    if bitrate_bps > profile.phy_rate_bps:
        raise RateExceedsPhyError(
            f"bitrate {bitrate_bps:g} bit/s exceeds PHY rate {profile.phy_rate_bps:g} bit/s",
            bitrate_bps=bitrate_bps,
            phy_rate_bps=profile.phy_rate_bps,
        )
    return AirtimeUsage(
        tau_tx=0.0,
        tau_rx=bitrate_bps / profile.phy_rate_bps,
        lambda_g_fps=0.0,
        lambda_r_fps=bitrate_bps / profile.frame_payload_bits,
    )


def device_download_energy(
    profile: "WirelessDeviceProfile",
    size_bits: float,
    bitrate_bps: float,
    incremental: bool = False,
) -> Tuple[float, float]:
    """
    Energy a wireless terminal spends receiving one content.

    Args:
        profile: Device power coefficients
        size_bits: Content size in bits
        bitrate_bps: Streaming bitrate
        incremental: Charge only the increment above idle power

    Returns:
        (watt-hours, duration in seconds)

    Raises:
        RateExceedsPhyError: If the bitrate exceeds the PHY rate
    """
    usage = download_usage(profile, bitrate_bps)
    duration_s = size_bits / bitrate_bps
    power_w = device_power(profile, usage)
    if incremental:
        power_w -= profile.rho_idle_w
    return power_w * duration_s / SECONDS_PER_HOUR, duration_s


def decode_energy(model: DecodeModel, size_bits: float) -> float:
    """Decoding energy of one playback in watt-hours."""
    if not size_bits >= 0:
        raise EnergyModelError("size_bits must be >= 0")
    return (model.alpha_j + model.beta_j_per_bit * size_bits) / JOULES_PER_WH


@dataclass
class EnergyLedger:
    """Accumulated watt-hours per class, with a running total."""

    switching: float = 0.0
    gateway: float = 0.0
    provider_edge: float = 0.0
    core: float = 0.0
    wdm: float = 0.0
    server: float = 0.0
    storage: float = 0.0
    wireless_device: float = 0.0
    decoding: float = 0.0
    total_wh: float = 0.0
    request_count: int = 0

    def add(self, energy_class: EnergyClass, wh: float) -> None:
        """Post ``wh`` watt-hours to one class."""
        if not wh >= 0:
            raise NegativeEnergyError(
                f"Cannot post {wh!r} Wh to {energy_class.value}",
                context={"class": energy_class.value, "wh": wh},
            )
        name = energy_class.value
        setattr(self, name, getattr(self, name) + wh)
        self.total_wh += wh

    def post(self, breakdown: Mapping[EnergyClass, float]) -> None:
        for energy_class in ENERGY_CLASSES:
            if energy_class in breakdown:
                self.add(energy_class, breakdown[energy_class])

    def record_request(self) -> None:
        self.request_count += 1

    def get(self, energy_class: EnergyClass) -> float:
        return float(getattr(self, energy_class.value))

    @property
    def transport_wh(self) -> float:
        return sum(self.get(energy_class) for energy_class in TRANSPORT_CLASSES)

    def class_sum(self) -> float:
        return sum(self.get(energy_class) for energy_class in ENERGY_CLASSES)

    def is_conserved(self, tolerance: float = LEDGER_TOLERANCE) -> bool:
        """Whether the running total matches the class sum."""
        return _close(self.total_wh, self.class_sum(), tolerance)

    def merge(self, other: "EnergyLedger") -> "EnergyLedger":
        """Field-wise sum of two ledgers as a new ledger."""
        merged = EnergyLedger()
        for item in fields(self):
            setattr(merged, item.name, getattr(self, item.name) + getattr(other, item.name))
        return merged

    def to_dict(self) -> Dict[str, float]:
        data: Dict[str, float] = {cls.value + "_wh": self.get(cls) for cls in ENERGY_CLASSES}
        data["total_wh"] = self.total_wh
        data["request_count"] = self.request_count
        return data


def merge_ledgers(ledgers: Iterable[EnergyLedger]) -> EnergyLedger:
    merged = EnergyLedger()
    for ledger in ledgers:
        merged = merged.merge(ledger)
    return merged


def ledger_differences(
    a: EnergyLedger, b: EnergyLedger, tolerance: float = LEDGER_TOLERANCE
) -> List[str]:
    """Names of the fields on which two ledgers differ beyond ``tolerance``."""
    return [
        item.name
        for item in fields(a)
        if not _close(getattr(a, item.name), getattr(b, item.name), tolerance)
    ]


def _close(a: float, b: float, tolerance: float) -> bool:
    return abs(a - b) <= tolerance * max(abs(a), abs(b), 1e-300)
