"""Discrete-event core of the simulator.

Simulated time advances through a single heap of events ordered by
``(time_s, sequence_no)``. Sequence numbers are assigned at scheduling time,
so simultaneous events run in the order they were scheduled and a run is a
pure function of its scenario and seed.
"""

import heapq
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Deque, Dict, Iterable, List, Mapping, Optional, Tuple

from .cache import NodeCache
from .energy import (
    ENERGY_CLASSES,
    EnergyClass,
    EnergyLedger,
    TransportContext,
    decode_energy,
    device_download_energy,
    ledger_differences,
    merge_ledgers,
    transport_storage_energy,
)
from .errors import SimulationInvariantError
from .logging import get_logger
from .report import RunMetadata, SimulationReport, TimeseriesPoint
from .scenario import (
    ClientCluster,
    DeviceEnergyMode,
    EquipmentProfile,
    ReplicationPolicyConfig,
    Scenario,
    Tier,
    Topology,
    WirelessDeviceProfile,
    hop_count,
    iter_clusters,
)
from .workload import (
    Catalog,
    Content,
    PopularityPredictor,
    RngStreams,
    build_catalog,
    draw_request,
    next_arrival,
    successor,
)

logger = get_logger(__name__)

TRAILING_WINDOW_S = 3600.0
# Floor of the download-rate estimate D, in downloads per hour.
MIN_DOWNLOADS_PER_HR = 1.0


class EventKind(str, Enum):
    REQUEST = "request"
    PUBLISH = "publish"
    EXPIRE = "expire"
    REPLICATION_TICK = "replication_tick"
    REPORT_TICK = "report_tick"


@dataclass(frozen=True)
class Event:
    time_s: float
    sequence_no: int
    kind: EventKind
    payload: Any = None


# Report ticks close their instant: they run after every other event at the same time.
_KIND_RANK = {EventKind.REPORT_TICK: 1}


class EventQueue:
    """Time-ordered pending events; refuses to schedule into the past."""

    def __init__(self) -> None:
        self._heap: List[Tuple[float, int, int, Event]] = []
        self._next_sequence = 0
        self.now = 0.0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, time_s: float, kind: EventKind, payload: Any = None) -> Event:
        if time_s < self.now:
            raise SimulationInvariantError(
                "event-causality",
                f"{kind.value} scheduled at {time_s!r} before current time {self.now!r}",
            )
        event = Event(time_s, self._next_sequence, kind, payload)
        self._next_sequence += 1
        heapq.heappush(self._heap, (time_s, _KIND_RANK.get(kind, 0), event.sequence_no, event))
        return event

    def pop(self) -> Event:
        *_, event = heapq.heappop(self._heap)
        if event.time_s < self.now:
            raise SimulationInvariantError(
                "event-causality", f"dequeued {event.time_s!r} after {self.now!r}"
            )
        self.now = event.time_s
        return event


@dataclass(frozen=True)
class RequestOutcome:
    t_s: float
    cluster_id: str
    content_id: str
    user_id: int
    serving_node: str
    hops: int
    cache_level_hit: Tier
    size_bits: float
    bitrate_bps: float
    replicas: int
    downloads_per_hr: float
    device_profile: Optional[str]
    transport_wh: float
    device_wh: float
    decode_wh: float
    duration_s: float
    breakdown: Mapping[EnergyClass, float] = field(default_factory=dict)

    @property
    def total_wh(self) -> float:
        return self.transport_wh + self.device_wh + self.decode_wh


@dataclass(frozen=True)
class ChargeContext:
    """Everything needed to price one delivery."""

    t_s: float
    cluster: ClientCluster
    content: Content
    serving_node: str
    serving_tier: Tier
    hops: int
    downloads_per_hr: float
    replicas: int
    equipment: EquipmentProfile
    device: Optional[WirelessDeviceProfile] = None
    device_energy_mode: DeviceEnergyMode = DeviceEnergyMode.FULL
    user_id: int = 0


@dataclass(frozen=True)
class ReplicationAction:
    t_s: float
    content_id: str
    source_node: str
    target_node: str
    hops: int
    downloads_per_hr: float
    energy_wh: float
    breakdown: Mapping[EnergyClass, float] = field(default_factory=dict)


class DownloadTracker:
    """Trailing-hour download counts per content, the estimator of D."""

    def __init__(self, window_s: float = TRAILING_WINDOW_S) -> None:
        self.window_s = window_s
        self._times: Dict[str, Deque[float]] = {}

    def _trim(self, content_id: str, t: float) -> Deque[float]:
        times = self._times.setdefault(content_id, deque())
        while times and times[0] <= t - self.window_s:
            times.popleft()
        return times

    def record(self, content_id: str, t: float) -> None:
        self._trim(content_id, t).append(t)

    def count(self, content_id: str, t: float) -> int:
        return len(self._trim(content_id, t))

    def downloads_per_hr(self, content_id: str, t: float) -> float:
        rate = self.count(content_id, t) * (3600.0 / self.window_s)
        return max(rate, MIN_DOWNLOADS_PER_HR)

    def forget(self, content_id: str) -> None:
        self._times.pop(content_id, None)


def route_request(
    topology: Topology,
    caches: Mapping[str, NodeCache],
    cluster: ClientCluster,
    content_id: str,
) -> str:
    """
    Nearest node on the cluster's root path holding ``content_id``.

    The origin holds every alive content and is the fallback.
    """
    for node_id in topology.path_to_root(cluster.edge_node):
        cache = caches.get(node_id)
        if cache is not None and content_id in cache:
            return node_id
    return topology.origin.id


def charge_request(ctx: ChargeContext) -> RequestOutcome:
    """
    Price one delivery: transport and storage, wireless terminal, decoding.

    Wired clusters have no terminal energy.
    """
    content = ctx.content
    transport_wh, breakdown = transport_storage_energy(
        TransportContext(
            size_bits=content.size_bits,
            hops=ctx.hops,
            replicas=ctx.replicas,
            downloads_per_hr=ctx.downloads_per_hr,
            equipment=ctx.equipment,
        )
    )
    duration_s = content.size_bits / content.bitrate_bps
    device_wh = 0.0
    if ctx.device is not None:
        device_wh, duration_s = device_download_energy(
            ctx.device,
            content.size_bits,
            content.bitrate_bps,
            incremental=ctx.device_energy_mode is DeviceEnergyMode.INCREMENTAL,
        )
    decode_wh = decode_energy(content.decode, content.size_bits)

    charged = dict(breakdown)
    charged[EnergyClass.WIRELESS_DEVICE] = device_wh
    charged[EnergyClass.DECODING] = decode_wh
    return RequestOutcome(
        t_s=ctx.t_s,
        cluster_id=ctx.cluster.id,
        content_id=content.id,
        user_id=ctx.user_id,
        serving_node=ctx.serving_node,
        hops=ctx.hops,
        cache_level_hit=ctx.serving_tier,
        size_bits=content.size_bits,
        bitrate_bps=content.bitrate_bps,
        replicas=ctx.replicas,
        downloads_per_hr=ctx.downloads_per_hr,
        device_profile=ctx.cluster.device_profile,
        transport_wh=transport_wh,
        device_wh=device_wh,
        decode_wh=decode_wh,
        duration_s=duration_s,
        breakdown=charged,
    )


def replication_tick(
    t: float,
    predictor: PopularityPredictor,
    caches: Mapping[str, NodeCache],
    policy: ReplicationPolicyConfig,
    topology: Topology,
    contents: Iterable[Content],
    equipment: EquipmentProfile,
    replicas: int,
    downloads: DownloadTracker,
) -> List[ReplicationAction]:
    """
    Push contents predicted to become popular into edge caches with room.

    Each push is charged the transport energy from the nearest holder above
    the edge node. Pushes never evict.
    """
    actions: List[ReplicationAction] = []
    if not policy.enabled:
        return actions
    for content in sorted(contents, key=lambda c: c.id):
        if not predictor.score(content.id, t) > policy.threshold_req_per_hr:
            continue
        for edge in topology.edge_nodes:
            cache = caches.get(edge.id)
            if cache is None or content.id in cache or cache.free_bits < content.size_bits:
                continue
            source = topology.origin.id
            for node_id in topology.path_to_root(edge.id)[1:]:
                holder = caches.get(node_id)
                if holder is not None and content.id in holder:
                    source = node_id
                    break
            hops = topology.path_hops(source, edge.id)
            rate = downloads.downloads_per_hr(content.id, t)
            energy_wh, breakdown = transport_storage_energy(
                TransportContext(
                    size_bits=content.size_bits,
                    hops=hops,
                    replicas=replicas,
                    downloads_per_hr=rate,
                    equipment=equipment,
                )
            )
            cache.admit(content.id, content.size_bits, t)
            actions.append(
                ReplicationAction(
                    t_s=t,
                    content_id=content.id,
                    source_node=source,
                    target_node=edge.id,
                    hops=hops,
                    downloads_per_hr=rate,
                    energy_wh=energy_wh,
                    breakdown=breakdown,
                )
            )
    return actions


class Simulation:
    """One run of a scenario. Strictly single-threaded."""

    def __init__(self, scenario: Scenario, record_requests: bool = True) -> None:
        self.scenario = scenario
        self.record_requests = record_requests
        self.topology = scenario.topology
        self.queue = EventQueue()
        self.rng = RngStreams(scenario.seed)
        self.catalog = Catalog(build_catalog(scenario.content_space, self.rng, scenario.horizon_s))
        self.alive: Dict[str, Content] = {}
        policy = scenario.replication_policy
        self.predictor = PopularityPredictor(policy.smoothing, policy.window_s)
        self.downloads = DownloadTracker()
        self.caches = self._build_caches()
        self.clusters = {cluster.id: cluster for cluster in iter_clusters(scenario)}
        self.report = SimulationReport(
            metadata=RunMetadata(
                seed=scenario.seed,
                scenario_hash=scenario.digest,
                horizon_s=scenario.horizon_s,
                report_interval_s=scenario.report_interval_s,
            ),
            cluster_ledgers={cluster_id: EnergyLedger() for cluster_id in self.clusters},
        )

    def _build_caches(self) -> Dict[str, NodeCache]:
        caching = self.scenario.policies.caching
        caches = {}
        for node in self.topology.nodes:
            if node.tier is Tier.ORIGIN:
                continue
            capacity = node.cache_capacity_bits if caching.enabled_for(node.tier) else 0.0
            caches[node.id] = NodeCache(node.id, capacity, node.cache_policy)
        return caches

    # --- scheduling ------------------------------------------------------

    def _schedule_initial(self) -> None:
        horizon = self.scenario.horizon_s
        for content in self.catalog.contents:
            if content.publish_s <= horizon:
                self.queue.schedule(content.publish_s, EventKind.PUBLISH, content.id)
        for cluster_id, cluster in self.clusters.items():
            arrival = next_arrival(cluster, 0.0, self.rng.cluster(cluster_id))
            if arrival <= horizon:
                self.queue.schedule(arrival, EventKind.REQUEST, cluster_id)
        policy = self.scenario.replication_policy
        if policy.enabled and policy.period_s <= horizon:
            self.queue.schedule(policy.period_s, EventKind.REPLICATION_TICK, 1)
        if self.scenario.report_interval_s <= horizon:
            self.queue.schedule(self.scenario.report_interval_s, EventKind.REPORT_TICK, 1)

    def run(self) -> SimulationReport:
        logger.info(
            "Simulation started",
            extra={
                "seed": self.scenario.seed,
                "horizon_s": self.scenario.horizon_s,
                "contents": len(self.catalog),
                "clusters": len(self.clusters),
            },
        )
        self._schedule_initial()
        handlers = {
            EventKind.REQUEST: self._on_request,
            EventKind.PUBLISH: self._on_publish,
            EventKind.EXPIRE: self._on_expire,
            EventKind.REPLICATION_TICK: self._on_replication_tick,
            EventKind.REPORT_TICK: self._on_report_tick,
        }
        while self.queue:
            event = self.queue.pop()
            handlers[event.kind](event)
        self._check_conservation()
        logger.info(
            "Simulation finished",
            extra={
                "requests": self.report.request_count,
                "total_wh": self.report.ledger.total_wh,
                "hit_rate": self.report.hit_rate,
            },
        )
        return self.report

    # --- handlers --------------------------------------------------------

    def _on_publish(self, event: Event) -> None:
        content = self.catalog[event.payload]
        self.alive[content.id] = content
        if content.expires_s <= self.scenario.horizon_s:
            self.queue.schedule(content.expires_s, EventKind.EXPIRE, content.id)

    def _on_expire(self, event: Event) -> None:
        content = self.alive.pop(event.payload)
        self.catalog.retire(content.id)
        for cache in self.caches.values():
            cache.remove(content.id)
        self.predictor.forget(content.id)
        self.downloads.forget(content.id)
        space = self.scenario.content_space
        if space.replenish and content.lifetime_s > 0 and event.time_s < self.scenario.horizon_s:
            replacement = successor(content, space, self.rng, event.time_s)
            self.catalog.add(replacement)
            self.queue.schedule(event.time_s, EventKind.PUBLISH, replacement.id)

    def _on_request(self, event: Event) -> None:
        t = event.time_s
        cluster = self.clusters[event.payload]
        rng = self.rng.cluster(cluster.id)
        content, user_id = draw_request(cluster, self.catalog, t, rng)
        if content is not None:
            self._serve(cluster, content, user_id, t)
        arrival = next_arrival(cluster, t, rng)
        if arrival <= self.scenario.horizon_s:
            self.queue.schedule(arrival, EventKind.REQUEST, cluster.id)

    def _serve(self, cluster: ClientCluster, content: Content, user_id: int, t: float) -> None:
        path = self.topology.path_to_root(cluster.edge_node)
        serving = route_request(self.topology, self.caches, cluster, content.id)
        serving_tier = self.topology.node(serving).tier
        position = path.index(serving)

        stats = self.report.tier_stats
        for node_id in path[:position]:
            stats[self.topology.node(node_id).tier].misses += 1
        stats[serving_tier].hits += 1

        if serving in self.caches:
            self.caches[serving].touch(content.id, t)
        for node_id in path[:position]:
            self.caches[node_id].admit(content.id, content.size_bits, t)

        self.predictor.update(content.id, t)
        self.downloads.record(content.id, t)
        outcome = charge_request(
            ChargeContext(
                t_s=t,
                cluster=cluster,
                content=content,
                serving_node=serving,
                serving_tier=serving_tier,
                hops=hop_count(self.topology, serving, cluster.id),
                downloads_per_hr=self.downloads.downloads_per_hr(content.id, t),
                replicas=self.scenario.content_space.replication_count,
                equipment=self.scenario.equipment,
                device=self.scenario.device_profile_for(cluster),
                device_energy_mode=self.scenario.policies.device_energy_mode,
                user_id=user_id,
            )
        )
        for ledger in (
            self.report.ledger,
            self.report.cluster_ledgers[cluster.id],
            self.report.content_ledgers.setdefault(content.id, EnergyLedger()),
        ):
            ledger.post(outcome.breakdown)
            ledger.record_request()
        if self.record_requests:
            self.report.requests.append(outcome)
        logger.debug(
            "Request served",
            extra={
                "cluster_id": cluster.id,
                "content_id": content.id,
                "serving_node": serving,
                "hops": outcome.hops,
                "wh": outcome.total_wh,
            },
        )

    def _on_replication_tick(self, event: Event) -> None:
        actions = replication_tick(
            event.time_s,
            self.predictor,
            self.caches,
            self.scenario.replication_policy,
            self.topology,
            self.alive.values(),
            self.scenario.equipment,
            self.scenario.content_space.replication_count,
            self.downloads,
        )
        for action in actions:
            self.report.ledger.post(action.breakdown)
            self.report.replication_ledger.post(action.breakdown)
        self.report.replications.extend(actions)
        if actions:
            logger.debug("Replication pushes", extra={"t_s": event.time_s, "pushes": len(actions)})
        next_tick = (event.payload + 1) * self.scenario.replication_policy.period_s
        if next_tick <= self.scenario.horizon_s:
            self.queue.schedule(next_tick, EventKind.REPLICATION_TICK, event.payload + 1)

    def _on_report_tick(self, event: Event) -> None:
        ledger = self.report.ledger
        self.report.timeseries.append(
            TimeseriesPoint(
                t_s=event.time_s,
                cumulative_wh={cls: ledger.get(cls) for cls in ENERGY_CLASSES},
                total_wh=ledger.total_wh,
                hit_rate=self.report.hit_rate,
            )
        )
        next_tick = (event.payload + 1) * self.scenario.report_interval_s
        if next_tick <= self.scenario.horizon_s:
            self.queue.schedule(next_tick, EventKind.REPORT_TICK, event.payload + 1)

    # --- invariants ------------------------------------------------------

    def _check_conservation(self) -> None:
        report = self.report
        if not report.ledger.is_conserved():
            raise SimulationInvariantError(
                "ledger-conservation", "aggregate total differs from its class sum"
            )
        expected = merge_ledgers(report.cluster_ledgers.values()).merge(report.replication_ledger)
        differing = ledger_differences(report.ledger, expected)
        if differing:
            raise SimulationInvariantError(
                "ledger-conservation",
                f"aggregate differs from per-cluster + replication on {', '.join(differing)}",
            )


def run(scenario: Scenario, record_requests: bool = True) -> SimulationReport:
    """
    Simulate a scenario from t=0 to its horizon.

    Args:
        scenario: A validated scenario
        record_requests: Keep the per-request audit trail in the report

    Returns:
        The run's report; identical for identical (scenario, seed)
    """
    return Simulation(scenario, record_requests=record_requests).run()


def transport_totals(report: SimulationReport) -> float:
    """Request transport watt-hours, excluding replication pushes."""
    return sum(ledger.transport_wh for ledger in report.cluster_ledgers.values())
