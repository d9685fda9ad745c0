"""User space and content space: catalog, popularity and request arrivals.

Randomness comes from numpy's PCG64 bit generator. Each concern draws from its
own named stream (``catalog``, ``lifecycle``, ``cluster:<id>``) derived from
the scenario seed, so adding draws to one stream never shifts another.
"""

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .energy import DecodeModel
from .logging import get_logger
from .scenario import (
    ArrivalProcess,
    ClientCluster,
    ContentSpaceConfig,
    ContentTypeConfig,
    DistributionKind,
    DistributionSpec,
    PopularityShape,
)
from .utils import stream_key

logger = get_logger(__name__)

SECONDS_PER_HOUR = 3600.0
HOURS_PER_DAY = 24


class RngStreams:
    """Named, independently seeded generators derived from one 64-bit seed."""

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._streams: Dict[str, np.random.Generator] = {}

    def stream(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            sequence = np.random.SeedSequence(self.seed, spawn_key=(stream_key(name),))
            self._streams[name] = np.random.Generator(np.random.PCG64(sequence))
        return self._streams[name]

    def cluster(self, cluster_id: str) -> np.random.Generator:
        return self.stream(f"cluster:{cluster_id}")


@dataclass(frozen=True)
class PopularityProfile:
    shape: PopularityShape
    base_weight: float
    half_life_s: float = 0.0


@dataclass(frozen=True)
class Content:
    id: str
    rank: int
    content_type: str
    size_bits: float
    bitrate_bps: float
    publish_s: float
    lifetime_s: float
    popularity: PopularityProfile
    decode: DecodeModel
    generation: int = 0

    @property
    def expires_s(self) -> float:
        return self.publish_s + self.lifetime_s

    def is_alive(self, t: float) -> bool:
        return self.publish_s <= t <= self.expires_s


def zipf_weights(catalog_size: int, exponent: float) -> np.ndarray:
    """Normalised Zipf weights for ranks 1..catalog_size."""
    ranks = np.arange(1, catalog_size + 1, dtype=np.float64)
    weights = ranks ** (-exponent)
    return weights / weights.sum()


def sample_distribution(spec: DistributionSpec, rng: np.random.Generator) -> float:
    if spec.kind is DistributionKind.CONSTANT:
        return spec.value
    if spec.kind is DistributionKind.UNIFORM:
        return float(rng.uniform(spec.lo, spec.hi))
    return float(rng.lognormal(spec.mu, spec.sigma))


def _pick_type(
    types: Sequence[ContentTypeConfig], rng: np.random.Generator
) -> ContentTypeConfig:
    if len(types) == 1:
        return types[0]
    shares = np.array([t.share for t in types], dtype=np.float64)
    index = pick_content(shares, rng)
    return types[0 if index is None else index]


def _content_id(rank: int, width: int, generation: int = 0) -> str:
    base = f"content-{rank:0{width}d}"
    return base if generation == 0 else f"{base}/{generation}"


def build_catalog(
    config: ContentSpaceConfig, rng: RngStreams, horizon_s: float
) -> List[Content]:
    """
    Generate the initial content catalog.

    Rank k gets the normalised Zipf weight k^-s. A cohort of
    ``initial_cohort_fraction`` of the catalog is published at t=0; the rest is
    published uniformly over the first ``publish_window_fraction`` of the
    horizon.

    Args:
        config: Content space parameters
        rng: The run's random streams
        horizon_s: Simulated horizon

    Returns:
        Contents in rank order
    """
    catalog_rng = rng.stream("catalog")
    lifecycle_rng = rng.stream("lifecycle")
    size = config.catalog_size
    width = len(str(size))
    weights = zipf_weights(size, config.zipf_exponent)
    cohort = min(size, math.ceil(size * config.initial_cohort_fraction))
    initial = set(int(i) for i in lifecycle_rng.permutation(size)[:cohort])
    window_s = horizon_s * config.publish_window_fraction
    shape = config.popularity_shape

    contents = []
    for index in range(size):
        content_type = _pick_type(config.types, catalog_rng)
        size_bits = sample_distribution(content_type.size_bits_distribution, catalog_rng)
        publish_s = 0.0 if index in initial else float(lifecycle_rng.uniform(0.0, window_s))
        lifetime_s = sample_distribution(config.lifetime_distribution, lifecycle_rng)
        contents.append(
            Content(
                id=_content_id(index + 1, width),
                rank=index + 1,
                content_type=content_type.name,
                size_bits=size_bits,
                bitrate_bps=content_type.bitrate_bps,
                publish_s=publish_s,
                lifetime_s=lifetime_s,
                popularity=PopularityProfile(
                    shape=shape.shape,
                    base_weight=float(weights[index]),
                    half_life_s=shape.half_life_s,
                ),
                decode=content_type.decode_params,
            )
        )
    logger.debug("Catalog built", extra={"contents": size, "initial_cohort": cohort})
    return contents


def successor(
    content: Content, config: ContentSpaceConfig, rng: RngStreams, t: float
) -> Content:
    """The content replacing ``content`` at its popularity rank, published at ``t``."""
    content_type = _pick_type(config.types, rng.stream("catalog"))
    generation = content.generation + 1
    return replace(
        content,
        id=_content_id(content.rank, len(str(config.catalog_size)), generation),
        content_type=content_type.name,
        size_bits=sample_distribution(
            content_type.size_bits_distribution, rng.stream("catalog")
        ),
        bitrate_bps=content_type.bitrate_bps,
        publish_s=t,
        lifetime_s=sample_distribution(config.lifetime_distribution, rng.stream("lifecycle")),
        decode=content_type.decode_params,
        generation=generation,
    )


def popularity_at(content: Content, t: float) -> float:
    """Popularity weight of ``content`` at time ``t`` (zero outside its lifetime)."""
    if not content.is_alive(t):
        return 0.0
    profile = content.popularity
    elapsed = t - content.publish_s
    if profile.shape is PopularityShape.CONSTANT:
        return profile.base_weight
    if profile.shape is PopularityShape.LINEAR_DECAY:
        if content.lifetime_s <= 0:
            return profile.base_weight
        return max(0.0, profile.base_weight * (1.0 - elapsed / content.lifetime_s))
    return profile.base_weight * 2.0 ** (-elapsed / profile.half_life_s)


class Catalog:
    """All contents of a run with vectorised popularity evaluation."""

    _SHAPE_CODES = {
        PopularityShape.CONSTANT: 0,
        PopularityShape.LINEAR_DECAY: 1,
        PopularityShape.EXPONENTIAL_DECAY: 2,
    }

    def __init__(self, contents: Sequence[Content]) -> None:
        self.contents: List[Content] = []
        self._by_id: Dict[str, Content] = {}
        self._retired: Dict[str, bool] = {}
        for content in contents:
            self._append(content)
        self._rebuild()

    def __len__(self) -> int:
        return len(self.contents)

    def __getitem__(self, content_id: str) -> Content:
        return self._by_id[content_id]

    def _append(self, content: Content) -> None:
        self.contents.append(content)
        self._by_id[content.id] = content

    def add(self, content: Content) -> None:
        self._append(content)
        self._rebuild()

    def retire(self, content_id: str) -> None:
        """Withdraw an expired content so it is never picked again."""
        self._retired[content_id] = True
        self._rebuild()

    def _rebuild(self) -> None:
        contents = self.contents
        self._publish = np.array([c.publish_s for c in contents], dtype=np.float64)
        lifetime = np.array([c.lifetime_s for c in contents], dtype=np.float64)
        self._expires = self._publish + lifetime
        self._lifetime = np.where(lifetime > 0, lifetime, np.inf)
        self._base = np.array([c.popularity.base_weight for c in contents], dtype=np.float64)
        self._shape = np.array(
            [self._SHAPE_CODES[c.popularity.shape] for c in contents], dtype=np.int8
        )
        half_life = np.array([c.popularity.half_life_s for c in contents], dtype=np.float64)
        self._half_life = np.where(half_life > 0, half_life, np.inf)
        self._active = np.array([c.id not in self._retired for c in contents], dtype=bool)

    def weights_at(self, t: float) -> np.ndarray:
        """Vectorised :func:`popularity_at` over the whole catalog."""
        elapsed = np.maximum(t - self._publish, 0.0)
        alive = self._active & (self._publish <= t) & (t <= self._expires)
        linear = self._base * np.maximum(1.0 - elapsed / self._lifetime, 0.0)
        decayed = self._base * np.exp2(-elapsed / self._half_life)
        weights = np.where(
            self._shape == 0, self._base, np.where(self._shape == 1, linear, decayed)
        )
        return np.where(alive, weights, 0.0)

    def pick(self, t: float, rng: np.random.Generator) -> Optional[Content]:
        index = pick_content(self.weights_at(t), rng)
        return None if index is None else self.contents[index]


def _inverse_cdf(cumulative: np.ndarray, u: np.ndarray) -> np.ndarray:
    # side="right" skips zero-weight entries.
    return np.minimum(np.searchsorted(cumulative, u, side="right"), len(cumulative) - 1)


def pick_content(weights: np.ndarray, rng: np.random.Generator) -> Optional[int]:
    """
    Draw one index with probability proportional to ``weights``.

    Returns ``None`` when every weight is zero; otherwise consumes exactly one
    uniform draw.
    """
    cumulative = np.cumsum(weights, dtype=np.float64)
    if len(cumulative) == 0 or not cumulative[-1] > 0:
        return None
    u = np.array([rng.random() * cumulative[-1]])
    return int(_inverse_cdf(cumulative, u)[0])


def pick_contents(
    weights: np.ndarray, rng: np.random.Generator, count: int
) -> np.ndarray:
    """Draw ``count`` indices proportional to ``weights`` (empty if all are zero)."""
    cumulative = np.cumsum(weights, dtype=np.float64)
    if len(cumulative) == 0 or not cumulative[-1] > 0:
        return np.empty(0, dtype=np.int64)
    return _inverse_cdf(cumulative, rng.random(count) * cumulative[-1])


def hour_of_day(t: float) -> int:
    return int(t // SECONDS_PER_HOUR) % HOURS_PER_DAY


def arrival_rate(cluster: ClientCluster, t: float) -> float:
    """Instantaneous request rate of a cluster in requests per second."""
    base = cluster.user_count * cluster.request_rate_per_user_per_hr / SECONDS_PER_HOUR
    return base * cluster.diurnal_profile[hour_of_day(t)]


def next_arrival(cluster: ClientCluster, t: float, rng: np.random.Generator) -> float:
    """
    Time of the cluster's next request after ``t``.

    Poisson clusters use thinning against the peak hourly rate; deterministic
    clusters space arrivals exactly 1/rate apart. Returns ``inf`` when the
    cluster never requests anything.
    """
    base = cluster.user_count * cluster.request_rate_per_user_per_hr / SECONDS_PER_HOUR
    peak = max(cluster.diurnal_profile)
    if not base * peak > 0:
        return math.inf

    if cluster.arrival_process is ArrivalProcess.DETERMINISTIC:
        for _ in range(HOURS_PER_DAY + 1):
            multiplier = cluster.diurnal_profile[hour_of_day(t)]
            if multiplier > 0:
                return t + 1.0 / (base * multiplier)
            t = (math.floor(t / SECONDS_PER_HOUR) + 1) * SECONDS_PER_HOUR
        return math.inf

    scale = 1.0 / (base * peak)
    while True:
        t += float(rng.exponential(scale))
        if rng.random() * peak < cluster.diurnal_profile[hour_of_day(t)]:
            return t


def draw_request(
    cluster: ClientCluster, catalog: Catalog, t: float, rng: np.random.Generator
) -> Tuple[Optional[Content], int]:
    """Pick the requested content and the requesting user at an arrival."""
    content = catalog.pick(t, rng)
    user_id = int(rng.integers(cluster.user_count))
    return content, user_id


def next_request(
    cluster: ClientCluster,
    catalog: Catalog,
    t: float,
    rng: np.random.Generator,
) -> Tuple[float, Optional[str], int]:
    """
    The cluster's next request after ``t``.

    Args:
        cluster: The requesting client cluster
        catalog: The run's catalog; weights are evaluated at the arrival time
        t: Current time
        rng: The cluster's stream

    Returns:
        (arrival time, content id or ``None`` if nothing is alive, user id)
    """
    arrival = next_arrival(cluster, t, rng)
    if math.isinf(arrival):
        return arrival, None, 0
    content, user_id = draw_request(cluster, catalog, arrival, rng)
    return arrival, None if content is None else content.id, user_id


class PopularityPredictor:
    """
    Exponentially weighted request-rate estimate per content.

    Each observation adds ``3600 / tau`` to the estimate after decaying the
    previous value by ``exp(-dt / tau)``, with ``tau = window_s / smoothing``.
    For a steady stream of r requests per hour the estimate settles at r.
    """

    def __init__(self, smoothing: float = 0.5, window_s: float = SECONDS_PER_HOUR) -> None:
        if not 0.0 < smoothing <= 1.0:
            raise ValueError("smoothing must be in (0, 1]")
        if not window_s > 0:
            raise ValueError("window_s must be positive")
        self.smoothing = smoothing
        self.window_s = window_s
        self.tau_s = window_s / smoothing
        self._state: Dict[str, Tuple[float, float]] = {}

    def _decayed(self, content_id: str, t: float) -> float:
        estimate, last_t = self._state.get(content_id, (0.0, t))
        if t <= last_t:
            return estimate
        return estimate * math.exp(-(t - last_t) / self.tau_s)

    def update(self, content_id: str, t: float) -> None:
        estimate = self._decayed(content_id, t) + SECONDS_PER_HOUR / self.tau_s
        self._state[content_id] = (estimate, max(t, self._state.get(content_id, (0.0, t))[1]))

    def score(self, content_id: str, t: float) -> float:
        """Predicted requests per hour for ``content_id`` at ``t``."""
        return self._decayed(content_id, t)

    def forget(self, content_id: str) -> None:
        self._state.pop(content_id, None)
