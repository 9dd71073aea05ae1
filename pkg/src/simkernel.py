# Discrete-event simulation of single nodes, tandems and the retrial queue,
# with exact sawtooth-area accounting of the age at the monitor.

import heapq
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from scipy import integrate

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

try:
    from src.stochastic import DistributionSpec, RngStream, hypoexponential, ks_check
    from src.utils import (ConfigError, CsvEmitter, InsufficientDataError, require_positive,
                           require_stable)
except ImportError:  # Fallback for when the package is installed
    from stochastic import DistributionSpec, RngStream, hypoexponential, ks_check
    from utils import (ConfigError, CsvEmitter, InsufficientDataError, require_positive,
                       require_stable)

logger = logging.getLogger(__name__)

BATCHES = 20
MIN_WARMUP = 10_000
WARMUP_FRACTION = 0.05
OCCUPANCY_CAP = 50
PACKET_LOG_FIELDS = ["id", "generation", "arrival", "service_start", "departure", "initial_age"]

AgeFeed = Union[None, DistributionSpec, Sequence[float], np.ndarray]


# --- Node models and packet records ---

class NodeKind(str, Enum):
    FCFS_INFINITE = "fcfs"
    SINGLE_CAPACITY_BLOCKING = "blocking"
    ZERO_WAIT_ERROR_CHANNEL = "zero-wait"
    RETRIAL_ORBIT = "retrial"


@dataclass(frozen=True)
class NodeModel:
    kind: NodeKind
    mu: float
    alpha: float = 0.0
    theta: Optional[float] = None

    def __post_init__(self):
        require_positive(mu=self.mu)
        if not 0 <= self.alpha < 1:
            raise ConfigError(f"alpha must lie in [0, 1) (got {self.alpha})")
        if self.kind == NodeKind.RETRIAL_ORBIT:
            require_positive(theta=self.theta)

    @classmethod
    def fcfs(cls, mu: float) -> "NodeModel":
        return cls(NodeKind.FCFS_INFINITE, mu)

    @classmethod
    def blocking(cls, mu: float) -> "NodeModel":
        return cls(NodeKind.SINGLE_CAPACITY_BLOCKING, mu)

    @classmethod
    def zero_wait(cls, mu: float, alpha: float) -> "NodeModel":
        return cls(NodeKind.ZERO_WAIT_ERROR_CHANNEL, mu, alpha=alpha)

    @classmethod
    def retrial(cls, mu: float, theta: float) -> "NodeModel":
        return cls(NodeKind.RETRIAL_ORBIT, mu, theta=theta)


@dataclass(frozen=True)
class PacketRecord:
    id: int
    generation: float
    arrival: float
    service_start: float
    departure: float
    initial_age: float
    node_arrivals: Tuple[float, ...] = ()


@dataclass
class DeliveryTrace:
    """Delivered packets in departure order, held as parallel arrays."""
    ids: np.ndarray
    generation: np.ndarray
    arrival: np.ndarray
    service_start: np.ndarray
    departure: np.ndarray
    node_arrivals: Optional[np.ndarray] = None    # shape (nodes, packets)
    node_departures: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.departure)

    @property
    def initial_age(self) -> np.ndarray:
        return self.arrival - self.generation

    @property
    def system_time(self) -> np.ndarray:
        return self.departure - self.arrival

    def tail(self, start: int) -> "DeliveryTrace":
        def cut(a):
            if a is None:
                return None
            return a[..., start:]
        return DeliveryTrace(self.ids[start:], self.generation[start:], self.arrival[start:],
                             self.service_start[start:], self.departure[start:],
                             cut(self.node_arrivals), cut(self.node_departures))

    def records(self) -> List[PacketRecord]:
        ages = self.initial_age
        out = []
        for k in range(len(self)):
            nodes = tuple(self.node_arrivals[:, k].tolist()) if self.node_arrivals is not None else ()
            out.append(PacketRecord(int(self.ids[k]), float(self.generation[k]), float(self.arrival[k]),
                                    float(self.service_start[k]), float(self.departure[k]),
                                    float(ages[k]), nodes))
        return out

    @classmethod
    def from_records(cls, records: Sequence[PacketRecord]) -> "DeliveryTrace":
        def col(name):
            return np.array([getattr(r, name) for r in records], dtype=float)
        trace = cls(np.array([r.id for r in records], dtype=np.int64), col("generation"), col("arrival"),
                    col("service_start"), col("departure"))
        if len(trace) and np.any(np.diff(trace.departure) < 0):
            raise ConfigError("packet log must be in departure order")
        return trace


# --- Age accounting ---

@dataclass
class AgeAccumulator:
    """
    Running integral of the age at the monitor, Δ(s) = s - g_{N(s)}.

    Each delivery adds the trapezoid between consecutive deliveries:
    Y^2/2 + Y * (age just after the previous delivery).
    """
    last_generation_delivered: float = math.nan
    last_departure: float = math.nan
    accumulated_area: float = 0.0
    delivered_count: int = 0
    far_update_count: int = 0
    observation_start: float = math.nan

    def record(self, departure: float, generation: float) -> float:
        if self.delivered_count == 0:
            self.observation_start = departure
            increment = 0.0
        else:
            y = departure - self.last_departure
            increment = y * y / 2 + y * (self.last_departure - self.last_generation_delivered)
            self.accumulated_area += increment
            if generation < self.last_generation_delivered:
                self.far_update_count += 1
        self.last_departure = departure
        self.last_generation_delivered = generation
        self.delivered_count += 1
        return increment

    def extend(self, departures: np.ndarray, generations: np.ndarray) -> np.ndarray:
        """Vectorized `record` over a block of deliveries; returns the area increments."""
        d = np.asarray(departures, dtype=float)
        g = np.asarray(generations, dtype=float)
        if len(d) == 0:
            return np.empty(0)
        if self.delivered_count == 0:
            self.record(d[0], g[0])
            d_prev, g_prev, d, g = d[:-1], g[:-1], d[1:], g[1:]
        else:
            d_prev = np.concatenate(([self.last_departure], d[:-1]))
            g_prev = np.concatenate(([self.last_generation_delivered], g[:-1]))
        y = d - d_prev
        increments = y * y / 2 + y * (d_prev - g_prev)
        self.accumulated_area += float(increments.sum())
        self.far_update_count += int(np.count_nonzero(g < g_prev))
        self.delivered_count += len(d)
        if len(d):
            self.last_departure = float(d[-1])
            self.last_generation_delivered = float(g[-1])
        return increments

    @property
    def elapsed(self) -> float:
        return self.last_departure - self.observation_start

    @property
    def aaoi(self) -> float:
        return self.accumulated_area / self.elapsed if self.elapsed > 0 else math.nan

    def age_at(self, s: float) -> float:
        return s - self.last_generation_delivered


# --- Statistics ---

@dataclass
class Theorem1Terms:
    effective_rate: float
    cross_moment: float
    correlation: float
    cv_interdeparture: float
    mean_initial_age: float
    sd_initial_age: float
    mean_interdeparture: float
    second_moment_interdeparture: float
    cross_yt: float
    zero_age_part: float
    samples: int


@dataclass
class RunStatistics:
    aaoi_estimate: float
    effective_rate: float
    cross_moment: float
    correlation: float
    cv_interdeparture: float
    mean_initial_age: float
    sd_initial_age: float
    far_update_rate: float
    zero_age_estimate: float
    mean_interdeparture: float
    second_moment_interdeparture: float
    cross_yt: float
    standard_errors: Dict[str, float]
    delivered: int
    blocked: int
    far_update_count: int
    elapsed: float
    se_reliable: bool
    extras: Dict[str, Any] = field(default_factory=dict)
    log: Optional[DeliveryTrace] = field(default=None, compare=False, repr=False)

    def se(self, name: str) -> float:
        return self.standard_errors.get(name, math.nan)


def _pair(values: np.ndarray, pairing_offset: int) -> np.ndarray:
    """Values of packet n - pairing_offset for n = 1..N-1."""
    if pairing_offset == 1:
        return values[:-1]
    if pairing_offset == 0:
        return values[1:]
    raise ConfigError("pairing_offset must be 0 or 1")


def _terms_from_arrays(y: np.ndarray, age: np.ndarray, prev_t: np.ndarray) -> Theorem1Terms:
    n = len(y)
    total = float(y.sum())
    mean_y = total / n
    sd_y = float(y.std())
    sd_a = float(age.std())
    if sd_y > 0 and sd_a > 0:
        corr = float(np.mean((y - mean_y) * (age - age.mean())) / (sd_y * sd_a))
    else:
        corr = 0.0
    return Theorem1Terms(
        effective_rate=n / total,
        cross_moment=float(np.mean(y * age)),
        correlation=corr,
        cv_interdeparture=sd_y / mean_y if mean_y > 0 else math.nan,
        mean_initial_age=float(age.mean()),
        sd_initial_age=sd_a,
        mean_interdeparture=mean_y,
        second_moment_interdeparture=float(np.mean(y * y)),
        cross_yt=float(np.mean(y * prev_t)),
        zero_age_part=float(np.sum(y * y / 2 + y * prev_t) / total),
        samples=n,
    )


def _as_trace(log: Union[DeliveryTrace, Sequence[PacketRecord]]) -> DeliveryTrace:
    return log if isinstance(log, DeliveryTrace) else DeliveryTrace.from_records(log)


def estimate_theorem1_terms(log: Union[DeliveryTrace, Sequence[PacketRecord]],
                            pairing_offset: int = 1) -> Theorem1Terms:
    """
    Sample versions of the aged-updates decomposition terms.

    Y_n = d_n - d_{n-1} is paired with the initial age of packet n-1
    (pairing_offset=1). Other offsets exist only to test the index discipline.
    """
    trace = _as_trace(log)
    if len(trace) < 2:
        raise InsufficientDataError(f"need at least 2 deliveries, got {len(trace)}")
    y = np.diff(trace.departure)
    age = _pair(trace.initial_age, pairing_offset)
    prev_t = _pair(trace.system_time, pairing_offset)
    return _terms_from_arrays(y, age, prev_t)


def batch_means_se(values_per_batch: Sequence[float]) -> float:
    arr = np.asarray(values_per_batch, dtype=float)
    return float(arr.std(ddof=1) / math.sqrt(len(arr)))


def _batch_errors(y, age, prev_t, prev_age, far, batches=BATCHES) -> Dict[str, float]:
    chunks = np.array_split(np.arange(len(y)), batches)
    per: Dict[str, List[float]] = {}
    for idx in chunks:
        yb, ab, tb, pb = y[idx], age[idx], prev_t[idx], prev_age[idx]
        terms = _terms_from_arrays(yb, ab, tb)
        h = yb * yb / 2 + yb * pb
        values = {
            "aaoi_estimate": float(h.sum() / yb.sum()),
            "effective_rate": terms.effective_rate,
            "cross_moment": terms.cross_moment,
            "correlation": terms.correlation,
            "cv_interdeparture": terms.cv_interdeparture,
            "mean_initial_age": terms.mean_initial_age,
            "sd_initial_age": terms.sd_initial_age,
            "far_update_rate": float(far[idx].mean()),
            "zero_age_estimate": terms.zero_age_part,
            "mean_interdeparture": terms.mean_interdeparture,
            "second_moment_interdeparture": terms.second_moment_interdeparture,
            "cross_yt": terms.cross_yt,
        }
        for k, v in values.items():
            per.setdefault(k, []).append(v)
    return {k: batch_means_se(v) for k, v in per.items()}


def default_warmup(departures: int) -> int:
    warmup = max(MIN_WARMUP, int(WARMUP_FRACTION * departures))
    if warmup >= departures:
        warmup = int(WARMUP_FRACTION * departures)
        logger.debug(f"short run: warm-up reduced to {warmup} of {departures} departures")
    return warmup


def _resolve_counts(warmup: Optional[int], departures: int) -> int:
    if departures < 2:
        raise ConfigError(f"departures must be >= 2 (got {departures})")
    warmup = default_warmup(departures) if warmup is None else int(warmup)
    if not 0 <= warmup < departures:
        raise ConfigError(f"warmup must satisfy 0 <= warmup < departures (got {warmup}, {departures})")
    return warmup


def summarize(trace: DeliveryTrace, warmup: int, blocked: int = 0,
              extras: Optional[Dict[str, Any]] = None, keep_log: bool = False) -> RunStatistics:
    """
    Statistics over deliveries warmup..N-1, each paired with its predecessor.

    The observation window opens at the delivery preceding the first counted one
    and closes at the last delivery, so no partial areas enter.
    """
    first = max(warmup, 1)
    if len(trace) - first < 1:
        raise InsufficientDataError(f"no deliveries after warm-up ({len(trace)} delivered, warmup={warmup})")
    window = trace.tail(first - 1)

    acc = AgeAccumulator()
    increments = acc.extend(window.departure, window.generation)
    y = np.diff(window.departure)
    age = window.initial_age[:-1]
    prev_t = window.system_time[:-1]
    prev_age = window.departure[:-1] - window.generation[:-1]
    far = window.generation[1:] < window.generation[:-1]
    terms = _terms_from_arrays(y, age, prev_t)

    samples = len(y)
    reliable = samples >= 2 * BATCHES
    if reliable:
        errors = _batch_errors(y, age, prev_t, prev_age, far)
    else:
        logger.warning(f"only {samples} post-warmup deliveries; standard errors are unreliable")
        errors = {k: math.nan for k in ("aaoi_estimate", "effective_rate", "cross_moment", "correlation",
                                        "cv_interdeparture", "mean_initial_age", "sd_initial_age",
                                        "far_update_rate", "zero_age_estimate", "mean_interdeparture",
                                        "second_moment_interdeparture", "cross_yt")}

    logger.debug(f"window of {samples} deliveries, area {float(increments.sum()):.6g} over {acc.elapsed:.6g}")
    return RunStatistics(
        aaoi_estimate=acc.aaoi,
        effective_rate=samples / acc.elapsed,
        cross_moment=terms.cross_moment,
        correlation=terms.correlation,
        cv_interdeparture=terms.cv_interdeparture,
        mean_initial_age=terms.mean_initial_age,
        sd_initial_age=terms.sd_initial_age,
        far_update_rate=acc.far_update_count / samples,
        zero_age_estimate=terms.zero_age_part,
        mean_interdeparture=terms.mean_interdeparture,
        second_moment_interdeparture=terms.second_moment_interdeparture,
        cross_yt=terms.cross_yt,
        standard_errors=errors,
        delivered=samples,
        blocked=blocked,
        far_update_count=acc.far_update_count,
        elapsed=acc.elapsed,
        se_reliable=reliable,
        extras=extras or {},
        log=trace if keep_log else None,
    )


# --- Building blocks ---

class _AgeSource:
    """Initial ages for packets entering from the source, drawn in arrival order."""

    def __init__(self, feed: AgeFeed, rng: RngStream):
        self.feed = feed
        self.rng = rng
        self.position = 0
        if feed is not None and not isinstance(feed, DistributionSpec):
            self.trace = np.asarray(feed, dtype=float)
            if np.any(self.trace < 0):
                raise ConfigError("initial-age trace must be nonnegative")

    def take(self, n: int) -> np.ndarray:
        if self.feed is None:
            return np.zeros(n)
        if isinstance(self.feed, DistributionSpec):
            return np.asarray(self.feed.sample(self.rng, n), dtype=float)
        end = self.position + n
        if end > len(self.trace):
            raise InsufficientDataError(f"initial-age trace exhausted after {len(self.trace)} packets")
        out = self.trace[self.position:end]
        self.position = end
        return out


def _fcfs_pass(arrivals: np.ndarray, services: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    FCFS single server with infinite buffer: D_n = max(A_n, D_{n-1}) + S_n,
    solved in closed form as D_n = C_n + max_{k<=n}(A_k - C_{k-1}), C the service cumsum.
    """
    completed = np.cumsum(services)
    departures = completed + np.maximum.accumulate(arrivals - (completed - services))
    starts = np.maximum(departures - services, arrivals)
    return starts, departures


def _poisson_epochs(rate: float, n: int, rng: RngStream) -> np.ndarray:
    return np.cumsum(rng.exponential(rate, n))


class _Buffered:
    """Scalar draws served from pre-generated blocks (keeps event loops cheap)."""

    def __init__(self, rng: RngStream, block: int = 65536):
        self.rng = rng
        self.block = block
        self._exp: List[float] = []
        self._uni: List[float] = []

    def exp(self, rate: float) -> float:
        if not self._exp:
            self._exp = self.rng.generator.standard_exponential(self.block).tolist()[::-1]
        return self._exp.pop() / rate

    def uniform(self) -> float:
        if not self._uni:
            self._uni = self.rng.generator.random(self.block).tolist()[::-1]
        return self._uni.pop()


def _check_stable(lam: float, mu: float, allow_unstable: bool) -> None:
    if allow_unstable:
        if lam >= mu:
            logger.warning(f"exploratory run of an unstable queue (lambda={lam}, mu={mu})")
        return
    require_stable(lam, mu, "lambda < mu")


# --- Runs ---

def run_single_node(node: NodeModel, arrival_rate: float, initial_age_feed: AgeFeed = None,
                    warmup: Optional[int] = None, departures: int = 100_000,
                    rng: Optional[RngStream] = None, allow_unstable: bool = False,
                    keep_log: bool = False) -> RunStatistics:
    """Simulates one node fed by Poisson(arrival_rate) packets carrying the given initial ages."""
    rng = rng or RngStream(0)
    warmup = _resolve_counts(warmup, departures)

    if node.kind == NodeKind.ZERO_WAIT_ERROR_CHANNEL:
        logger.debug("zero-wait node: the source is driven by deliveries, arrival_rate is unused")
        return run_zero_wait(node.alpha, node.mu, warmup, departures, rng,
                             initial_age_feed=initial_age_feed, keep_log=keep_log)
    if node.kind == NodeKind.RETRIAL_ORBIT:
        return run_retrial(arrival_rate, node.theta, node.mu, warmup, departures, rng,
                           initial_age_feed=initial_age_feed, keep_log=keep_log)

    require_positive(arrival_rate=arrival_rate)
    ages = _AgeSource(initial_age_feed, rng)
    if node.kind == NodeKind.SINGLE_CAPACITY_BLOCKING:
        trace, blocked = _simulate_blocking(arrival_rate, node.mu, departures, rng, ages)
        return summarize(trace, warmup, blocked=blocked, keep_log=keep_log)

    _check_stable(arrival_rate, node.mu, allow_unstable)
    arrivals = _poisson_epochs(arrival_rate, departures, rng)
    services = rng.exponential(node.mu, departures)
    generation = arrivals - ages.take(departures)
    starts, deps = _fcfs_pass(arrivals, services)
    trace = DeliveryTrace(np.arange(departures), generation, arrivals, starts, deps)
    stats = summarize(trace, warmup, keep_log=keep_log)
    logger.info(f"single node {node.kind.value}: {stats.delivered} deliveries, AAoI {stats.aaoi_estimate:.6g}")
    return stats


def _simulate_blocking(lam: float, mu: float, departures: int, rng: RngStream,
                       ages: _AgeSource) -> Tuple[DeliveryTrace, int]:
    """M/M/1/1 without preemption: an arrival is admitted iff the server is idle."""
    chunk = max(4096, departures)
    # Blocked arrivals never reach the receiver, so only admitted packets take an initial age.
    initial = ages.take(departures).tolist()
    ids, gen, arr, dep = [], [], [], []
    busy_until = -math.inf
    now = 0.0
    blocked = 0
    next_id = 0
    while len(dep) < departures:
        times = (now + np.cumsum(rng.exponential(lam, chunk))).tolist()
        services = rng.exponential(mu, chunk).tolist()
        for t, s in zip(times, services):
            if t >= busy_until:
                busy_until = t + s
                ids.append(next_id)
                gen.append(t - initial[len(dep)])
                arr.append(t)
                dep.append(busy_until)
                if len(dep) == departures:
                    break
            else:
                blocked += 1
            next_id += 1
        now = times[-1]
    arrivals = np.array(arr)
    trace = DeliveryTrace(np.array(ids), np.array(gen), arrivals, arrivals.copy(), np.array(dep))
    return trace, blocked


def run_tandem(rates: Sequence[float], arrival_rate: float, warmup: Optional[int] = None,
               departures: int = 100_000, rng: Optional[RngStream] = None,
               keep_log: bool = False) -> RunStatistics:
    """
    A chain of FCFS M/M/1 queues; the age is measured after the last one.
    A packet's initial age at the final node is its time spent in the earlier nodes.
    """
    if not rates:
        raise ConfigError("run_tandem needs at least one service rate")
    rng = rng or RngStream(0)
    warmup = _resolve_counts(warmup, departures)
    require_positive(arrival_rate=arrival_rate)
    for i, mu in enumerate(rates):
        require_positive(**{f"rate_{i + 1}": mu})
        require_stable(arrival_rate, mu, f"lambda < mu_{i + 1}")

    generation = _poisson_epochs(arrival_rate, departures, rng)
    node_arrivals = np.empty((len(rates), departures))
    node_departures = np.empty((len(rates), departures))
    current = generation
    starts = current
    for k, mu in enumerate(rates):
        node_arrivals[k] = current
        starts, current = _fcfs_pass(current, rng.exponential(mu, departures))
        node_departures[k] = current

    trace = DeliveryTrace(np.arange(departures), generation, node_arrivals[-1], starts, current,
                          node_arrivals, node_departures)
    extras = {}
    if len(rates) > 1:
        extras["per_node"] = _per_node_cross(trace, warmup)
    stats = summarize(trace, warmup, extras=extras, keep_log=keep_log)
    logger.info(f"tandem {list(rates)}: {stats.delivered} deliveries, AAoI {stats.aaoi_estimate:.6g}")
    return stats


def _per_node_cross(trace: DeliveryTrace, warmup: int) -> List[Dict[str, float]]:
    """Cross statistics of the final inter-departure time with each earlier node's system time."""
    first = max(warmup, 1)
    window = trace.tail(first - 1)
    y = np.diff(window.departure)
    chunks = np.array_split(np.arange(len(y)), BATCHES) if len(y) >= 2 * BATCHES else []
    out = []
    for k in range(window.node_arrivals.shape[0] - 1):
        t_prev = (window.node_departures[k] - window.node_arrivals[k])[:-1]
        cross = float(np.mean(y * t_prev))
        corr = float(np.corrcoef(y, t_prev)[0, 1]) if len(y) > 1 else 0.0
        se = batch_means_se([np.mean(y[i] * t_prev[i]) for i in chunks]) if len(chunks) else math.nan
        out.append({"node": k + 1, "cross_moment": cross, "cross_moment_se": se, "correlation": corr})
    return out


def run_hetero_tandem(lam: float, gamma: float, mu: float, warmup: Optional[int] = None,
                      departures: int = 100_000, rng: Optional[RngStream] = None,
                      keep_log: bool = False) -> RunStatistics:
    """A single-capacity blocking node (rate gamma) feeding an FCFS node (rate mu)."""
    rng = rng or RngStream(0)
    warmup = _resolve_counts(warmup, departures)
    require_positive(lam=lam, gamma=gamma, mu=mu)
    rho = lam * gamma / (mu * (lam + gamma))
    require_stable(rho, 1.0, "rho = lambda*gamma/(mu*(lambda+gamma)) < 1")

    first_hop, blocked = _simulate_blocking(lam, gamma, departures, rng, _AgeSource(None, rng))
    feed = first_hop.departure
    starts, deps = _fcfs_pass(feed, rng.exponential(mu, departures))
    trace = DeliveryTrace(first_hop.ids, first_hop.generation, feed, starts, deps,
                          np.vstack([first_hop.arrival, feed]), np.vstack([feed, deps]))

    gaps = np.diff(feed[max(warmup, 1) - 1:])
    ks = ks_check(gaps, hypoexponential(lam, gamma).cdf) if len(gaps) > 1 else None
    extras = {"feed_ks_pvalue": ks.pvalue if ks else math.nan}
    stats = summarize(trace, warmup, blocked=blocked, extras=extras, keep_log=keep_log)
    logger.info(f"hetero tandem ({lam}, {gamma}, {mu}): {blocked} blocked, AAoI {stats.aaoi_estimate:.6g}")
    return stats


def run_zero_wait(alpha: float, mu: float, warmup: Optional[int] = None, departures: int = 100_000,
                  rng: Optional[RngStream] = None, initial_age_feed: AgeFeed = None,
                  keep_log: bool = False) -> RunStatistics:
    """
    Zero-wait source over an erasure channel, simulated as its equivalent aged model.

    Every transmission attempt is a packet arriving when the previous attempt ends.
    A failed attempt carries the generation time the monitor already holds, so its
    delivery leaves the age sawtooth untouched; a successful retransmission carries
    its own generation time.
    """
    if not 0 <= alpha < 1:
        raise ConfigError(f"alpha must lie in [0, 1) (got {alpha})")
    require_positive(mu=mu)
    rng = rng or RngStream(0)
    warmup = _resolve_counts(warmup, departures)
    n = departures

    services = rng.exponential(mu, n)
    deps = np.cumsum(services)
    starts = deps - services
    success = rng.uniform(n) >= alpha
    fresh = np.empty(n, dtype=bool)
    fresh[0] = True
    fresh[1:] = success[:-1]

    idx = np.arange(n)
    extra_age = np.zeros(n)
    extra_age[fresh] = _AgeSource(initial_age_feed, rng).take(int(fresh.sum()))
    origin = np.maximum.accumulate(np.where(fresh, idx, 0))
    own_generation = starts[origin] - extra_age[origin]
    last_success = np.maximum.accumulate(np.where(success, idx, -1))
    previous_success = np.concatenate(([-1], last_success[:-1]))
    monitor_generation = np.where(previous_success >= 0, own_generation[np.maximum(previous_success, 0)], 0.0)
    generation = np.where(success, own_generation, np.minimum(monitor_generation, starts))

    trace = DeliveryTrace(idx, generation, starts, starts.copy(), deps)
    counted = success[max(warmup, 1):]
    extras = {"successes": int(counted.sum()), "success_rate": float(counted.mean())}
    stats = summarize(trace, warmup, extras=extras, keep_log=keep_log)
    logger.info(f"zero-wait alpha={alpha} mu={mu}: AAoI {stats.aaoi_estimate:.6g}")
    return stats


class EventKind(int, Enum):
    # Value is the tie-break priority at equal times.
    DEPARTURE = 0
    RETRIAL = 1
    ARRIVAL = 2


class EventCalendar:
    """Future-event list ordered by (time, kind priority, packet id, insertion order)."""

    def __init__(self):
        self._heap: List[Tuple[float, int, int, int]] = []
        self._seq = 0

    def schedule(self, time: float, kind: EventKind, packet_id: int = -1) -> None:
        heapq.heappush(self._heap, (time, int(kind), packet_id, self._seq))
        self._seq += 1

    def pop(self) -> Tuple[float, EventKind, int]:
        time, kind, packet_id, _ = heapq.heappop(self._heap)
        return time, EventKind(kind), packet_id

    def __len__(self) -> int:
        return len(self._heap)


def run_retrial(lam: float, theta: float, mu: float, warmup: Optional[int] = None,
                departures: int = 100_000, rng: Optional[RngStream] = None,
                initial_age_feed: AgeFeed = None, keep_log: bool = False,
                occupancy_cap: int = OCCUPANCY_CAP) -> RunStatistics:
    """
    Single-server retrial queue: blocked primaries join an unordered orbit, which
    retries as one Poisson(theta) stream while nonempty; a retrial that finds the
    server idle admits a uniformly chosen orbiting packet.
    """
    require_positive(lam=lam, theta=theta, mu=mu)
    require_stable(lam / mu, theta / (lam + theta), "rho < pi")
    rng = rng or RngStream(0)
    warmup = _resolve_counts(warmup, departures)
    first = max(warmup, 1)
    draws = _Buffered(rng)
    ages = _AgeSource(initial_age_feed, rng)

    calendar = EventCalendar()
    generation: List[float] = []
    primary_arrival: List[float] = []
    orbit: List[int] = []
    in_service = -1
    retrial_pending = False
    delivered_ids, admitted_at, departed_at = [], [], []
    occupancy = np.zeros((2, occupancy_cap + 1))
    measuring_from = math.nan
    last_time = 0.0

    calendar.schedule(draws.exp(lam), EventKind.ARRIVAL)
    while len(departed_at) < departures:
        now, kind, pid = calendar.pop()
        if len(departed_at) >= first:
            occupancy[int(in_service >= 0), min(len(orbit), occupancy_cap)] += now - last_time
        last_time = now

        if kind == EventKind.DEPARTURE:
            delivered_ids.append(pid)
            departed_at.append(now)
            in_service = -1
            if len(departed_at) == first:
                measuring_from = now
        elif kind == EventKind.ARRIVAL:
            pid = len(generation)
            generation.append(now - float(ages.take(1)[0]))
            primary_arrival.append(now)
            calendar.schedule(now + draws.exp(lam), EventKind.ARRIVAL)
            if in_service < 0:
                in_service = pid
                admitted_at.append((pid, now))
                calendar.schedule(now + draws.exp(mu), EventKind.DEPARTURE, pid)
            else:
                orbit.append(pid)
                if not retrial_pending:
                    calendar.schedule(now + draws.exp(theta), EventKind.RETRIAL)
                    retrial_pending = True
        else:
            retrial_pending = False
            if orbit and in_service < 0:
                pick = int(draws.uniform() * len(orbit))
                orbit[pick], orbit[-1] = orbit[-1], orbit[pick]
                pid = orbit.pop()
                in_service = pid
                admitted_at.append((pid, now))
                calendar.schedule(now + draws.exp(mu), EventKind.DEPARTURE, pid)
            if orbit:
                calendar.schedule(now + draws.exp(theta), EventKind.RETRIAL)
                retrial_pending = True

    admission = dict(admitted_at)
    ids = np.array(delivered_ids)
    arrivals = np.array([admission[i] for i in delivered_ids])
    gens = np.array(generation)[ids]
    orbit_time = arrivals - np.array(primary_arrival)[ids]
    trace = DeliveryTrace(ids, gens, arrivals, arrivals.copy(), np.array(departed_at))

    observed = last_time - measuring_from
    occupancy /= observed if observed > 0 else math.nan
    window_orbit = orbit_time[first:]
    extras = {
        "occupancy": {(i, n): float(occupancy[i, n]) for i in (0, 1) for n in range(occupancy_cap + 1)},
        "busy_probability": float(occupancy[1].sum()),
        "mean_orbit_time": float(window_orbit.mean()),
        "orbit_fraction": float(np.mean(window_orbit > 0)),
        "observed_time": float(observed),
    }
    stats = summarize(trace, warmup, extras=extras, keep_log=keep_log)
    logger.info(f"retrial ({lam}, {theta}, {mu}): AAoI {stats.aaoi_estimate:.6g}, "
                f"P(busy) {extras['busy_probability']:.4f}")
    return stats


# --- Log utilities ---

def sample_age_path(trace: DeliveryTrace, times: np.ndarray) -> np.ndarray:
    """Δ(s) = s - g_{N(s)} at each time; NaN before the first delivery."""
    times = np.asarray(times, dtype=float)
    last = np.searchsorted(trace.departure, times, side="right") - 1
    ages = times - trace.generation[np.maximum(last, 0)]
    return np.where(last >= 0, ages, np.nan)


def trapezoid_area(trace: DeliveryTrace, start: float, end: float, points: int = 10_000) -> float:
    grid = np.linspace(start, end, points)
    return float(integrate.trapezoid(sample_age_path(trace, grid), grid))


def departure_process_ks(trace: DeliveryTrace, rate: float, warmup: int = 0, alpha: float = 0.01):
    """KS test of inter-departure times against Exp(rate)."""
    gaps = np.diff(trace.departure[warmup:])
    return ks_check(gaps, lambda x: -np.expm1(-rate * np.maximum(x, 0.0)), alpha=alpha)


def write_packet_log_csv(log: Union[DeliveryTrace, Sequence[PacketRecord]], stream: TextIO,
                         header: Optional[str] = None) -> int:
    """Writes one row per delivered packet; returns the number of rows."""
    records = log.records() if isinstance(log, DeliveryTrace) else list(log)
    emitter = CsvEmitter(stream, PACKET_LOG_FIELDS, header=header)
    for r in records:
        emitter.write({"id": r.id, "generation": r.generation, "arrival": r.arrival,
                       "service_start": r.service_start, "departure": r.departure,
                       "initial_age": r.initial_age})
    return emitter.rows_written
