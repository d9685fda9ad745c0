"""Scenario model: topology, equipment, content/user space and policies.

A scenario is loaded from a single JSON document with the top-level keys
``topology``, ``equipment``, ``content_space``, ``user_space``, ``policies``
and ``simulation``. Units are carried in field names (``*_w``, ``*_bps``,
``*_bits``, ``*_s``). Every value type is immutable once built; the loader
collects every violated constraint before raising, so one pass reports all
problems in a document.
"""

import copy
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .energy import DecodeModel
from .errors import (
    DanglingReferenceError,
    ScenarioParseError,
    ScenarioValidationError,
    TopologyError,
    ValidationIssue,
)
from .logging import get_logger
from .utils import document_digest

logger = get_logger(__name__)

HOURS_PER_DAY = 24


class Tier(str, Enum):
    ORIGIN = "origin"
    REGIONAL = "regional"
    EDGE = "edge"


class CachePolicy(str, Enum):
    LRU = "LRU"
    LFU = "LFU"


class ArrivalProcess(str, Enum):
    POISSON = "poisson"
    DETERMINISTIC = "deterministic"


class DeviceEnergyMode(str, Enum):
    FULL = "full"
    INCREMENTAL = "incremental"


class PopularityShape(str, Enum):
    CONSTANT = "constant"
    LINEAR_DECAY = "linear-decay"
    EXPONENTIAL_DECAY = "exponential-decay"


class DistributionKind(str, Enum):
    CONSTANT = "constant"
    UNIFORM = "uniform"
    LOGNORMAL = "lognormal"


def _raise_if(issues: List[ValidationIssue]) -> None:
    if issues:
        raise ScenarioValidationError(issues)


def _non_negative(issues: List[ValidationIssue], name: str, value: float) -> None:
    if not value >= 0:
        issues.append(ValidationIssue(name, "must be >= 0"))


def _positive(issues: List[ValidationIssue], name: str, value: float) -> None:
    if not value > 0:
        issues.append(ValidationIssue(name, "must be > 0"))


@dataclass(frozen=True)
class EquipmentProfile:
    """Power density (W) and capacity (bit/s) of each equipment class."""

    es_power_w: float
    es_capacity_bps: float
    g_power_w: float
    g_capacity_bps: float
    pe_power_w: float
    pe_capacity_bps: float
    c_power_w: float
    c_capacity_bps: float
    wdm_power_w: float
    wdm_capacity_bps: float
    sr_power_w: float
    sr_capacity_bps: float
    sd_power_w: float
    sd_capacity_bits: float

    def __post_init__(self) -> None:
        issues: List[ValidationIssue] = []
        for name in EQUIPMENT_FIELDS:
            value = getattr(self, name)
            if name.endswith("_w"):
                _non_negative(issues, name, value)
            else:
                _positive(issues, name, value)
        _raise_if(issues)


EQUIPMENT_FIELDS = (
    "es_power_w",
    "es_capacity_bps",
    "g_power_w",
    "g_capacity_bps",
    "pe_power_w",
    "pe_capacity_bps",
    "c_power_w",
    "c_capacity_bps",
    "wdm_power_w",
    "wdm_capacity_bps",
    "sr_power_w",
    "sr_capacity_bps",
    "sd_power_w",
    "sd_capacity_bits",
)


@dataclass(frozen=True)
class WirelessDeviceProfile:
    """Coefficients of the 802.11 device power model."""

    rho_idle_w: float
    rho_tx_w: float
    rho_rx_w: float
    gamma_xg_j: float
    gamma_xr_j: float
    phy_rate_bps: float
    frame_payload_bits: float

    def __post_init__(self) -> None:
        issues: List[ValidationIssue] = []
        for name in ("rho_idle_w", "rho_tx_w", "rho_rx_w", "gamma_xg_j", "gamma_xr_j"):
            _non_negative(issues, name, getattr(self, name))
        _positive(issues, "phy_rate_bps", self.phy_rate_bps)
        _positive(issues, "frame_payload_bits", self.frame_payload_bits)
        _raise_if(issues)


@dataclass(frozen=True)
class AirtimeUsage:
    """Airtime fractions and frame rates of a radio over some interval."""

    tau_tx: float = 0.0
    tau_rx: float = 0.0
    lambda_g_fps: float = 0.0
    lambda_r_fps: float = 0.0

    def __post_init__(self) -> None:
        issues: List[ValidationIssue] = []
        for name in ("tau_tx", "tau_rx", "lambda_g_fps", "lambda_r_fps"):
            _non_negative(issues, name, getattr(self, name))
        if self.tau_tx + self.tau_rx > 1.0:
            issues.append(ValidationIssue("tau_tx+tau_rx", "must be <= 1"))
        _raise_if(issues)


@dataclass(frozen=True)
class CdnNode:
    id: str
    tier: Tier
    parent: Optional[str] = None
    hop_contribution: int = 0
    cache_capacity_bits: float = 0.0
    cache_policy: CachePolicy = CachePolicy.LRU

    def __post_init__(self) -> None:
        issues: List[ValidationIssue] = []
        _non_negative(issues, "cache_capacity_bits", self.cache_capacity_bits)
        _non_negative(issues, "hop_contribution", self.hop_contribution)
        _raise_if(issues)


@dataclass(frozen=True)
class ClientCluster:
    id: str
    edge_node: str
    user_count: int
    request_rate_per_user_per_hr: float
    device_profile: Optional[str] = None
    diurnal_profile: Tuple[float, ...] = (1.0,) * HOURS_PER_DAY
    arrival_process: ArrivalProcess = ArrivalProcess.POISSON
    access_hop_contribution: int = 0

    def __post_init__(self) -> None:
        issues: List[ValidationIssue] = []
        if self.user_count < 1:
            issues.append(ValidationIssue("user_count", "must be >= 1"))
        _non_negative(
            issues, "request_rate_per_user_per_hr", self.request_rate_per_user_per_hr
        )
        _non_negative(issues, "access_hop_contribution", self.access_hop_contribution)
        if len(self.diurnal_profile) != HOURS_PER_DAY:
            issues.append(
                ValidationIssue("diurnal_profile", "must have 24 hourly multipliers")
            )
        elif any(not m >= 0 for m in self.diurnal_profile):
            issues.append(ValidationIssue("diurnal_profile", "multipliers must be >= 0"))
        elif not any(m > 0 for m in self.diurnal_profile):
            issues.append(ValidationIssue("diurnal_profile", "must not be all zero"))
        _raise_if(issues)


@dataclass(frozen=True)
class Topology:
    """Rooted CDN tree plus the client clusters attached to its edge nodes."""

    nodes: Tuple[CdnNode, ...]
    client_clusters: Tuple[ClientCluster, ...]

    @cached_property
    def _nodes_by_id(self) -> Dict[str, CdnNode]:
        return {node.id: node for node in self.nodes}

    @cached_property
    def _clusters_by_id(self) -> Dict[str, ClientCluster]:
        return {cluster.id: cluster for cluster in self.client_clusters}

    @property
    def origin(self) -> CdnNode:
        return next(node for node in self.nodes if node.tier is Tier.ORIGIN)

    @cached_property
    def edge_nodes(self) -> Tuple[CdnNode, ...]:
        return tuple(
            sorted(
                (node for node in self.nodes if node.tier is Tier.EDGE),
                key=lambda node: node.id,
            )
        )

    def node(self, node_id: str) -> CdnNode:
        try:
            return self._nodes_by_id[node_id]
        except KeyError:
            raise TopologyError(f"Unknown node: {node_id}") from None

    def cluster(self, cluster_id: str) -> ClientCluster:
        try:
            return self._clusters_by_id[cluster_id]
        except KeyError:
            raise TopologyError(f"Unknown client cluster: {cluster_id}") from None

    def path_to_root(self, node_id: str) -> Tuple[str, ...]:
        """Node ids from ``node_id`` up to and including the origin."""
        path = [node_id]
        node = self.node(node_id)
        while node.parent is not None:
            path.append(node.parent)
            node = self.node(node.parent)
        return tuple(path)

    def path_hops(self, ancestor: str, descendant: str) -> int:
        """Sum of hop contributions on the links from ``descendant`` up to ``ancestor``."""
        hops = 0
        for node_id in self.path_to_root(descendant):
            if node_id == ancestor:
                return hops
            hops += self.node(node_id).hop_contribution
        raise TopologyError(f"{ancestor} is not an ancestor of {descendant}")


def hop_count(topology: Topology, server: str, cluster: str) -> int:
    """
    Core-router hops between a serving node and a client cluster.

    Args:
        topology: The CDN topology
        server: Id of a node on the cluster's root path
        cluster: Id of the client cluster

    Returns:
        Sum of hop contributions from ``server`` down to the cluster's edge
        node, plus the cluster's access link contribution

    Raises:
        TopologyError: If ``server`` is not on the cluster's root path
    """
    client = topology.cluster(cluster)
    try:
        path = topology.path_hops(server, client.edge_node)
    except TopologyError:
        raise TopologyError(
            f"{server} is not on the root path of cluster {cluster}",
            context={"server": server, "cluster": cluster},
        ) from None
    return path + client.access_hop_contribution


@dataclass(frozen=True)
class DistributionSpec:
    """Parametric distribution of non-negative samples."""

    kind: DistributionKind
    value: float = 0.0
    lo: float = 0.0
    hi: float = 0.0
    mu: float = 0.0
    sigma: float = 0.0

    def __post_init__(self) -> None:
        issues: List[ValidationIssue] = []
        if self.kind is DistributionKind.CONSTANT:
            _non_negative(issues, "value", self.value)
        elif self.kind is DistributionKind.UNIFORM:
            _non_negative(issues, "lo", self.lo)
            if not self.hi >= self.lo:
                issues.append(ValidationIssue("hi", "must be >= lo"))
        else:
            _non_negative(issues, "sigma", self.sigma)
        _raise_if(issues)

    @classmethod
    def constant(cls, value: float) -> "DistributionSpec":
        return cls(DistributionKind.CONSTANT, value=value)


@dataclass(frozen=True)
class PopularityShapeConfig:
    shape: PopularityShape = PopularityShape.CONSTANT
    half_life_s: float = 0.0

    def __post_init__(self) -> None:
        if self.shape is PopularityShape.EXPONENTIAL_DECAY and not self.half_life_s > 0:
            raise ScenarioValidationError([ValidationIssue("half_life_s", "must be > 0")])


@dataclass(frozen=True)
class ContentTypeConfig:
    """A content type with its share of the catalog and its own parameters."""

    name: str
    share: float
    bitrate_bps: float
    size_bits_distribution: DistributionSpec
    decode_params: DecodeModel

    def __post_init__(self) -> None:
        issues: List[ValidationIssue] = []
        _positive(issues, "share", self.share)
        _positive(issues, "bitrate_bps", self.bitrate_bps)
        _raise_if(issues)


@dataclass(frozen=True)
class ContentSpaceConfig:
    catalog_size: int
    zipf_exponent: float
    size_bits_distribution: DistributionSpec
    bitrate_bps: float
    lifetime_distribution: DistributionSpec
    popularity_shape: PopularityShapeConfig = PopularityShapeConfig()
    replication_count: int = 1
    decode_params: DecodeModel = DecodeModel()
    content_types: Tuple[ContentTypeConfig, ...] = ()
    replenish: bool = True
    initial_cohort_fraction: float = 0.5
    publish_window_fraction: float = 0.1

    def __post_init__(self) -> None:
        issues: List[ValidationIssue] = []
        if self.catalog_size < 1:
            issues.append(ValidationIssue("catalog_size", "must be >= 1"))
        _positive(issues, "zipf_exponent", self.zipf_exponent)
        _positive(issues, "bitrate_bps", self.bitrate_bps)
        if self.replication_count < 1:
            issues.append(ValidationIssue("replication_count", "must be >= 1"))
        for name in ("initial_cohort_fraction", "publish_window_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                issues.append(ValidationIssue(name, "must be in [0, 1]"))
        _raise_if(issues)

    @property
    def types(self) -> Tuple[ContentTypeConfig, ...]:
        """Configured content types, or the single implicit ``video`` type."""
        if self.content_types:
            return self.content_types
        return (
            ContentTypeConfig(
                name="video",
                share=1.0,
                bitrate_bps=self.bitrate_bps,
                size_bits_distribution=self.size_bits_distribution,
                decode_params=self.decode_params,
            ),
        )


@dataclass(frozen=True)
class ReplicationPolicyConfig:
    enabled: bool = False
    period_s: float = 600.0
    threshold_req_per_hr: float = math.inf
    smoothing: float = 0.5
    window_s: float = 3600.0

    def __post_init__(self) -> None:
        issues: List[ValidationIssue] = []
        _positive(issues, "period_s", self.period_s)
        _positive(issues, "window_s", self.window_s)
        if not 0.0 < self.smoothing <= 1.0:
            issues.append(ValidationIssue("smoothing", "must be in (0, 1]"))
        if math.isnan(self.threshold_req_per_hr):
            issues.append(ValidationIssue("threshold_req_per_hr", "must be a number"))
        _raise_if(issues)


@dataclass(frozen=True)
class CachingPolicy:
    edge: bool = True
    regional: bool = True

    def enabled_for(self, tier: Tier) -> bool:
        if tier is Tier.EDGE:
            return self.edge
        if tier is Tier.REGIONAL:
            return self.regional
        return False


@dataclass(frozen=True)
class Policies:
    replication: ReplicationPolicyConfig = ReplicationPolicyConfig()
    caching: CachingPolicy = CachingPolicy()
    device_energy_mode: DeviceEnergyMode = DeviceEnergyMode.FULL


@dataclass(frozen=True)
class Scenario:
    """The complete, validated input of one simulation run."""

    topology: Topology
    equipment: EquipmentProfile
    content_space: ContentSpaceConfig
    horizon_s: float
    seed: int = 0
    device_profiles: Dict[str, WirelessDeviceProfile] = field(default_factory=dict)
    policies: Policies = Policies()
    report_interval_s: float = 300.0
    digest: str = ""

    def __post_init__(self) -> None:
        issues: List[ValidationIssue] = []
        _positive(issues, "horizon_s", self.horizon_s)
        _positive(issues, "report_interval_s", self.report_interval_s)
        if not 0 <= self.seed < 2**64:
            issues.append(ValidationIssue("seed", "must be a 64-bit unsigned integer"))
        _raise_if(issues)

    @property
    def replication_policy(self) -> ReplicationPolicyConfig:
        return self.policies.replication

    def device_profile_for(self, cluster: ClientCluster) -> Optional[WirelessDeviceProfile]:
        if cluster.device_profile is None:
            return None
        return self.device_profiles[cluster.device_profile]


# --- loading -----------------------------------------------------------------

_MISSING: Any = object()
# Largest integer any field accepts: the seed range.
MAX_INTEGER = 2**64 - 1
JsonObject = Dict[str, Any]


class _Section:
    """Reads one JSON object, recording issues instead of raising."""

    def __init__(self, data: Any, path: str, issues: List[ValidationIssue]) -> None:
        self.path = path
        self.issues = issues
        self.seen: set = set()
        if not isinstance(data, dict):
            self.issue(None, "must be an object")
            data = {}
        self.data: JsonObject = data

    def name(self, key: Optional[str]) -> str:
        if key is None:
            return self.path or "<document>"
        return f"{self.path}.{key}" if self.path else key

    def issue(self, key: Optional[str], message: str) -> None:
        self.issues.append(ValidationIssue(self.name(key), message))

    def _get(self, key: str, default: Any) -> Any:
        self.seen.add(key)
        if key in self.data:
            return self.data[key]
        if default is _MISSING:
            self.issue(key, "is required")
        return default

    def number(
        self,
        key: str,
        default: Any = _MISSING,
        minimum: Optional[float] = None,
        positive: bool = False,
        allow_inf: bool = False,
    ) -> float:
        value = self._get(key, default)
        if value is _MISSING:
            return 1.0
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.issue(key, "must be a number")
            return 1.0
        try:
            value = float(value)
        except OverflowError:
            self.issue(key, "must be finite")
            return 1.0
        if math.isnan(value) or (math.isinf(value) and not allow_inf):
            self.issue(key, "must be finite")
            return 1.0
        if positive and not value > 0:
            self.issue(key, "must be > 0")
            return 1.0
        if minimum is not None and value < minimum:
            self.issue(key, f"must be >= {minimum:g}")
            return 1.0
        return value

    def integer(
        self, key: str, default: Any = _MISSING, minimum: int = 0, maximum: int = MAX_INTEGER
    ) -> int:
        value = self._get(key, default)
        if value is _MISSING:
            return max(minimum, 1)
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if isinstance(value, bool) or not isinstance(value, int):
            self.issue(key, "must be an integer")
            return max(minimum, 1)
        if value < minimum:
            self.issue(key, f"must be >= {minimum}")
            return max(minimum, 1)
        if value > maximum:
            self.issue(key, f"must be <= {maximum}")
            return max(minimum, 1)
        return value

    def string(self, key: str, default: Any = _MISSING) -> str:
        value = self._get(key, default)
        if value is _MISSING:
            return ""
        if not isinstance(value, str) or not value:
            self.issue(key, "must be a non-empty string")
            return ""
        return value

    def optional_string(self, key: str) -> Optional[str]:
        value = self._get(key, None)
        if value is None:
            return None
        if not isinstance(value, str) or not value:
            self.issue(key, "must be a non-empty string or null")
            return None
        return value

    def choice(self, key: str, enum: Any, default: Any = _MISSING) -> Any:
        value = self._get(key, default)
        if value is _MISSING:
            return next(iter(enum))
        if isinstance(value, enum):
            return value
        try:
            return enum(value)
        except ValueError:
            allowed = ", ".join(member.value for member in enum)
            self.issue(key, f"must be one of: {allowed}")
            return next(iter(enum))

    def boolean(self, key: str, default: bool) -> bool:
        value = self._get(key, default)
        if not isinstance(value, bool):
            self.issue(key, "must be true or false")
            return default
        return value

    def section(self, key: str, required: bool = True) -> "_Section":
        value = self._get(key, _MISSING if required else {})
        return _Section({} if value is _MISSING else value, self.name(key), self.issues)

    def objects(self, key: str, required: bool = True) -> List["_Section"]:
        value = self._get(key, _MISSING if required else [])
        if value is _MISSING:
            return []
        if not isinstance(value, list):
            self.issue(key, "must be a list")
            return []
        return [
            _Section(item, f"{self.name(key)}.{index}", self.issues)
            for index, item in enumerate(value)
        ]

    def raw(self, key: str, default: Any = _MISSING) -> Any:
        return self._get(key, default)

    def finish(self) -> None:
        for key in sorted(set(self.data) - self.seen):
            self.issue(key, "unknown key")

    def build(self, factory: Any, **kwargs: Any) -> Any:
        """Construct a value type, folding its own checks into the issue list."""
        try:
            return factory(**kwargs)
        except ScenarioValidationError as exc:
            for issue in exc.issues:
                self.issues.append(ValidationIssue(self.name(issue.field), issue.message))
            return None


def _is_finite(value: Any) -> bool:
    try:
        return math.isfinite(value)
    except OverflowError:
        return False


def _read_distribution(parent: _Section, key: str, default: Any = _MISSING) -> Any:
    value = parent.raw(key, default)
    if value is _MISSING:
        return None
    if value is None:
        if default is _MISSING:
            parent.issue(key, "is required")
        return None
    if isinstance(value, DistributionSpec):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        section = _Section({"kind": "constant", "value": value}, parent.name(key), parent.issues)
    else:
        section = _Section(value, parent.name(key), parent.issues)
    kind = section.choice("kind", DistributionKind)
    params: Dict[str, float] = {}
    if kind is DistributionKind.CONSTANT:
        params["value"] = section.number("value", minimum=0)
    elif kind is DistributionKind.UNIFORM:
        params["lo"] = section.number("lo", minimum=0)
        params["hi"] = section.number("hi", minimum=0)
    else:
        params["mu"] = section.number("mu")
        params["sigma"] = section.number("sigma", minimum=0)
    section.finish()
    return section.build(DistributionSpec, kind=kind, **params)


def _read_decode(parent: _Section, key: str, default: DecodeModel) -> DecodeModel:
    if key not in parent.data:
        parent.seen.add(key)
        return default
    section = parent.section(key)
    alpha = section.number("alpha_j", default.alpha_j, minimum=0)
    beta = section.number("beta_j_per_bit", default.beta_j_per_bit, minimum=0)
    section.finish()
    return section.build(DecodeModel, alpha_j=alpha, beta_j_per_bit=beta) or default


def _read_topology_nodes(section: _Section) -> List[CdnNode]:
    nodes = []
    for item in section.objects("nodes"):
        tier = item.choice("tier", Tier)
        node_id = item.string("id")
        is_origin = tier is Tier.ORIGIN
        parent = item.optional_string("parent")
        hop = item.integer("hop_contribution", 0)
        capacity = item.number("cache_capacity_bits", 0.0 if is_origin else _MISSING, minimum=0)
        policy = item.choice("cache_policy", CachePolicy, CachePolicy.LRU)
        item.finish()
        node = item.build(
            CdnNode,
            id=node_id,
            tier=tier,
            parent=parent,
            hop_contribution=hop,
            cache_capacity_bits=capacity,
            cache_policy=policy,
        )
        if node is not None:
            nodes.append(node)
    return nodes


def _read_device_profiles(section: _Section) -> Dict[str, WirelessDeviceProfile]:
    profiles: Dict[str, WirelessDeviceProfile] = {}
    raw = section.raw("device_profiles", {})
    if not isinstance(raw, dict):
        section.issue("device_profiles", "must be an object")
        return profiles
    for name in sorted(raw):
        item = _Section(raw[name], section.name(f"device_profiles.{name}"), section.issues)
        kwargs = {
            key: item.number(key, minimum=0)
            for key in ("rho_idle_w", "rho_tx_w", "rho_rx_w", "gamma_xg_j", "gamma_xr_j")
        }
        kwargs["phy_rate_bps"] = item.number("phy_rate_bps", positive=True)
        kwargs["frame_payload_bits"] = item.number("frame_payload_bits", positive=True)
        item.finish()
        profile = item.build(WirelessDeviceProfile, **kwargs)
        if profile is not None:
            profiles[name] = profile
    return profiles


def _read_clusters(section: _Section) -> List[ClientCluster]:
    clusters = []
    for item in section.objects("clusters"):
        diurnal_raw = item.raw("diurnal_profile", [1.0] * HOURS_PER_DAY)
        diurnal: Tuple[float, ...] = (1.0,) * HOURS_PER_DAY
        if not isinstance(diurnal_raw, list) or any(
            isinstance(m, bool) or not isinstance(m, (int, float)) for m in diurnal_raw
        ):
            item.issue("diurnal_profile", "must be a list of 24 numbers")
        elif not all(_is_finite(m) for m in diurnal_raw):
            item.issue("diurnal_profile", "multipliers must be finite")
        else:
            diurnal = tuple(float(m) for m in diurnal_raw)
        kwargs = dict(
            id=item.string("id"),
            edge_node=item.string("edge_node"),
            user_count=item.integer("user_count", minimum=1),
            request_rate_per_user_per_hr=item.number(
                "request_rate_per_user_per_hr", minimum=0
            ),
            device_profile=item.optional_string("device_profile"),
            diurnal_profile=diurnal,
            arrival_process=item.choice(
                "arrival_process", ArrivalProcess, ArrivalProcess.POISSON
            ),
            access_hop_contribution=item.integer("access_hop_contribution", 0),
        )
        item.finish()
        cluster = item.build(ClientCluster, **kwargs)
        if cluster is not None:
            clusters.append(cluster)
    return clusters


def _read_content_space(section: _Section) -> Optional[ContentSpaceConfig]:
    size = _read_distribution(section, "size_bits_distribution")
    bitrate = section.number("bitrate_bps", positive=True)
    decode = _read_decode(section, "decode_params", DecodeModel())
    shape_raw = section.raw("popularity_shape", "constant")
    shape_section = _Section(
        {"shape": shape_raw} if isinstance(shape_raw, str) else shape_raw,
        section.name("popularity_shape"),
        section.issues,
    )
    shape = shape_section.build(
        PopularityShapeConfig,
        shape=shape_section.choice("shape", PopularityShape),
        half_life_s=shape_section.number("half_life_s", 0.0, minimum=0),
    )
    shape_section.finish()

    types = []
    for item in section.objects("content_types", required=False):
        type_size = _read_distribution(item, "size_bits_distribution", None) or size
        kwargs = dict(
            name=item.string("name"),
            share=item.number("share", positive=True),
            bitrate_bps=item.number("bitrate_bps", bitrate, positive=True),
            size_bits_distribution=type_size,
            decode_params=_read_decode(item, "decode_params", decode),
        )
        item.finish()
        content_type = item.build(ContentTypeConfig, **kwargs)
        if content_type is not None:
            types.append(content_type)

    kwargs = dict(
        catalog_size=section.integer("catalog_size", minimum=1),
        zipf_exponent=section.number("zipf_exponent", positive=True),
        size_bits_distribution=size,
        bitrate_bps=bitrate,
        lifetime_distribution=_read_distribution(section, "lifetime_distribution"),
        popularity_shape=shape or PopularityShapeConfig(),
        replication_count=section.integer("replication_count", 1, minimum=1),
        decode_params=decode,
        content_types=tuple(types),
        replenish=section.boolean("replenish", True),
        initial_cohort_fraction=section.number("initial_cohort_fraction", 0.5, minimum=0),
        publish_window_fraction=section.number("publish_window_fraction", 0.1, minimum=0),
    )
    section.finish()
    if size is None or kwargs["lifetime_distribution"] is None:
        return None
    return section.build(ContentSpaceConfig, **kwargs)


def _read_policies(section: _Section) -> Policies:
    replication = section.section("replication", required=False)
    replication_policy = replication.build(
        ReplicationPolicyConfig,
        enabled=replication.boolean("enabled", False),
        period_s=replication.number("period_s", 600.0, positive=True),
        threshold_req_per_hr=replication.number(
            "threshold_req_per_hr", math.inf, allow_inf=True
        ),
        smoothing=replication.number("smoothing", 0.5, positive=True),
        window_s=replication.number("window_s", 3600.0, positive=True),
    )
    replication.finish()

    caching = section.section("caching", required=False)
    caching_policy = CachingPolicy(
        edge=caching.boolean("edge", True), regional=caching.boolean("regional", True)
    )
    caching.finish()

    mode = section.choice("device_energy_mode", DeviceEnergyMode, DeviceEnergyMode.FULL)
    section.finish()
    return Policies(
        replication=replication_policy or ReplicationPolicyConfig(),
        caching=caching_policy,
        device_energy_mode=mode,
    )


def _check_topology(
    nodes: Sequence[CdnNode],
    clusters: Sequence[ClientCluster],
    profiles: Dict[str, WirelessDeviceProfile],
) -> Tuple[List[ValidationIssue], List[ValidationIssue]]:
    """Structural and cross-reference checks; returns (structural, dangling)."""
    issues: List[ValidationIssue] = []
    dangling: List[ValidationIssue] = []
    by_id: Dict[str, CdnNode] = {}
    for index, node in enumerate(nodes):
        if node.id in by_id:
            issues.append(ValidationIssue(f"topology.nodes.{index}.id", "duplicate node id"))
        by_id[node.id] = node

    origins = [node for node in nodes if node.tier is Tier.ORIGIN]
    if len(origins) != 1:
        issues.append(ValidationIssue("topology.nodes", "must contain exactly one origin"))
    if not any(node.tier is Tier.EDGE for node in nodes):
        issues.append(ValidationIssue("topology.nodes", "must contain at least one edge node"))

    for index, node in enumerate(nodes):
        name = f"topology.nodes.{index}.parent"
        if node.tier is Tier.ORIGIN:
            if node.parent is not None:
                issues.append(ValidationIssue(name, "origin must not have a parent"))
            continue
        if node.parent is None:
            issues.append(ValidationIssue(name, "is required for non-origin nodes"))
            continue
        parent = by_id.get(node.parent)
        if parent is None:
            dangling.append(ValidationIssue(name, f"unknown node '{node.parent}'"))
        elif parent.tier is Tier.EDGE:
            issues.append(ValidationIssue(name, "edge nodes cannot have children"))

    for index, node in enumerate(nodes):
        seen = {node.id}
        current = node
        while current.parent is not None and current.parent in by_id:
            current = by_id[current.parent]
            if current.id in seen:
                issues.append(
                    ValidationIssue(f"topology.nodes.{index}", "parent links form a cycle")
                )
                break
            seen.add(current.id)

    cluster_ids = set()
    for index, cluster in enumerate(clusters):
        prefix = f"user_space.clusters.{index}"
        if cluster.id in cluster_ids:
            issues.append(ValidationIssue(f"{prefix}.id", "duplicate cluster id"))
        cluster_ids.add(cluster.id)
        node = by_id.get(cluster.edge_node)
        if node is None:
            dangling.append(
                ValidationIssue(f"{prefix}.edge_node", f"unknown node '{cluster.edge_node}'")
            )
        elif node.tier is not Tier.EDGE:
            issues.append(ValidationIssue(f"{prefix}.edge_node", "must be an edge node"))
        if cluster.device_profile is not None and cluster.device_profile not in profiles:
            dangling.append(
                ValidationIssue(
                    f"{prefix}.device_profile",
                    f"unknown device profile '{cluster.device_profile}'",
                )
            )
    if not clusters:
        issues.append(ValidationIssue("user_space.clusters", "must not be empty"))
    return issues, dangling


def _check_phy_rates(
    content_space: ContentSpaceConfig,
    clusters: Sequence[ClientCluster],
    profiles: Dict[str, WirelessDeviceProfile],
) -> List[ValidationIssue]:
    """Every content type must stream within the PHY rate of every wireless cluster."""
    issues = []
    for index, cluster in enumerate(clusters):
        profile = profiles.get(cluster.device_profile or "")
        if profile is None:
            continue
        for content_type in content_space.types:
            if content_type.bitrate_bps > profile.phy_rate_bps:
                issues.append(
                    ValidationIssue(
                        f"user_space.clusters.{index}.device_profile",
                        f"bitrate {content_type.bitrate_bps:g} of type "
                        f"'{content_type.name}' exceeds phy_rate_bps "
                        f"{profile.phy_rate_bps:g}",
                    )
                )
    return issues


def parse_scenario(document: Any) -> Scenario:
    """
    Validate a decoded scenario document and build the Scenario.

    Args:
        document: The decoded JSON document

    Returns:
        A fully validated Scenario

    Raises:
        DanglingReferenceError: If an id reference does not resolve
        ScenarioValidationError: If any other constraint is violated
    """
    issues: List[ValidationIssue] = []
    root = _Section(document, "", issues)

    topology_section = root.section("topology")
    nodes = _read_topology_nodes(topology_section)
    topology_section.finish()

    equipment_section = root.section("equipment")
    equipment_values = {
        name: equipment_section.number(
            name, minimum=0 if name.endswith("_w") else None, positive=not name.endswith("_w")
        )
        for name in EQUIPMENT_FIELDS
    }
    equipment_section.finish()
    equipment = equipment_section.build(EquipmentProfile, **equipment_values)

    content_space = _read_content_space(root.section("content_space"))

    user_space = root.section("user_space")
    profiles = _read_device_profiles(user_space)
    clusters = _read_clusters(user_space)
    user_space.finish()

    policies = _read_policies(root.section("policies", required=False))

    simulation = root.section("simulation")
    horizon_s = simulation.number("horizon_s", positive=True)
    seed = simulation.integer("seed", 0)
    report_interval_s = simulation.number("report_interval_s", 300.0, positive=True)
    simulation.finish()
    root.finish()

    structural, dangling = _check_topology(nodes, clusters, profiles)
    issues.extend(structural)
    issues.extend(dangling)
    if content_space is not None:
        issues.extend(_check_phy_rates(content_space, clusters, profiles))
    if dangling:
        raise DanglingReferenceError(issues)
    if issues:
        raise ScenarioValidationError(issues)
    assert equipment is not None and content_space is not None

    scenario = root.build(
        Scenario,
        topology=Topology(nodes=tuple(nodes), client_clusters=tuple(clusters)),
        equipment=equipment,
        content_space=content_space,
        horizon_s=horizon_s,
        seed=seed,
        device_profiles=profiles,
        policies=policies,
        report_interval_s=report_interval_s,
        digest=document_digest(document),
    )
    _raise_if(issues)
    return scenario


def load_document(path: Union[str, Path]) -> JsonObject:
    """
    Read and decode a scenario document without validating it.

    Raises:
        OSError: If the file cannot be read
        ScenarioParseError: If the file is not UTF-8 encoded JSON
    """
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioParseError(
            f"Scenario document is not valid UTF-8: byte offset {exc.start}", cause=exc
        ) from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(
            f"Malformed scenario document: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
            cause=exc,
        ) from exc
    except RecursionError as exc:
        raise ScenarioParseError("Scenario document is nested too deeply", cause=exc) from exc
    if not isinstance(document, dict):
        raise ScenarioParseError("Scenario document must be a JSON object", line=1, column=1)
    return document


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Load and validate a scenario file.

    Args:
        path: Path to the JSON scenario document

    Returns:
        A fully validated Scenario
    """
    scenario = parse_scenario(load_document(path))
    logger.info(
        "Scenario loaded",
        extra={
            "path": str(path),
            "nodes": len(scenario.topology.nodes),
            "clusters": len(scenario.topology.client_clusters),
            "digest": scenario.digest,
        },
    )
    return scenario


def iter_clusters(scenario: Scenario) -> Iterable[ClientCluster]:
    """Client clusters in id order."""
    return sorted(scenario.topology.client_clusters, key=lambda cluster: cluster.id)


def apply_seed(document: JsonObject, seed: int) -> JsonObject:
    """Copy of ``document`` with ``simulation.seed`` replaced."""
    updated = copy.deepcopy(document)
    simulation = updated.setdefault("simulation", {})
    if isinstance(simulation, dict):
        simulation["seed"] = seed
    return updated
