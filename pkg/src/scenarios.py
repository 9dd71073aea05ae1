# Declarative experiments: scenario definitions, replication fan-out,
# closure checks against the analytic formulas and table reproduction

import itertools
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

try:
    from src.analytic import (AnalyticReport, BoundInterval, aaoi_mm1_fcfs, analytic_report, correction_bounds,
                              correction_term, hem1_aaoi, retrial_zero_age_exact, slowest_last,
                              tandem_chain_bounds, zw_correction_inputs)
    from src.config import DEFAULT_SEED
    from src.simkernel import (MIN_WARMUP, WARMUP_FRACTION, NodeModel, RunStatistics,
                               estimate_theorem1_terms, run_hetero_tandem, run_retrial,
                               run_single_node, run_tandem, run_zero_wait)
    from src.stochastic import Exponential, PointMass, RngStream
    from src.utils import ConfigError
except ImportError:  # Fallback for when the package is installed
    from analytic import (AnalyticReport, BoundInterval, aaoi_mm1_fcfs, analytic_report, correction_bounds,
                          correction_term, hem1_aaoi, retrial_zero_age_exact, slowest_last,
                          tandem_chain_bounds, zw_correction_inputs)
    from config import DEFAULT_SEED
    from simkernel import (MIN_WARMUP, WARMUP_FRACTION, NodeModel, RunStatistics,
                           estimate_theorem1_terms, run_hetero_tandem, run_retrial,
                           run_single_node, run_tandem, run_zero_wait)
    from stochastic import Exponential, PointMass, RngStream
    from utils import ConfigError

logger = logging.getLogger(__name__)

TABLE_REPLICATIONS = 100
DEFAULT_DEPARTURES = 100_000
REFERENCE_TOLERANCE = 0.01
HETERO_TOLERANCE = 0.015
CLOSURE_SIGMAS = 3.0
CALIBRATION_NOTE = ("departures per replication is a calibration choice, "
                    "not a published value; replication sd depends on it")


class SystemKind(str, Enum):
    MM1 = "MM1"
    ZERO_WAIT = "ZeroWait"
    TANDEM_TWO = "TandemTwo"
    TANDEM_CHAIN = "TandemChain"
    HETERO_TANDEM = "HeteroTandem"
    RETRIAL = "Retrial"
    INDEPENDENT_FEED = "IndependentFeed"


REQUIRED_PARAMETERS: Dict[SystemKind, Tuple[str, ...]] = {
    SystemKind.MM1: ("lambda", "mu"),
    SystemKind.ZERO_WAIT: ("alpha", "mu"),
    SystemKind.TANDEM_TWO: ("lambda", "gamma", "mu"),
    SystemKind.TANDEM_CHAIN: ("lambda", "rates"),
    SystemKind.HETERO_TANDEM: ("lambda", "gamma", "mu"),
    SystemKind.RETRIAL: ("lambda", "theta", "mu"),
    SystemKind.INDEPENDENT_FEED: ("lambda", "mu", "age"),
}

FEED_KINDS = ("point", "exponential")


# --- Scenario definitions ---

@dataclass
class ScenarioSpec:
    name: str
    system: SystemKind
    parameters: Dict[str, Any]
    replications: int = 1
    departures_per_rep: int = DEFAULT_DEPARTURES
    seed: int = DEFAULT_SEED
    warmup: Optional[int] = None
    ordering: Optional[List[int]] = None

    def __post_init__(self):
        if not isinstance(self.system, SystemKind):
            try:
                self.system = SystemKind(self.system)
            except ValueError:
                raise ConfigError(f"Unknown system '{self.system}'. "
                                  f"Known systems: {', '.join(s.value for s in SystemKind)}")

    def validate(self) -> "ScenarioSpec":
        missing = [k for k in REQUIRED_PARAMETERS[self.system] if k not in self.parameters]
        if missing:
            raise ConfigError(f"scenario {self.name} ({self.system.value}) needs parameters: {', '.join(missing)}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1 (got {self.replications})")
        if self.departures_per_rep < 2:
            raise ConfigError(f"departures_per_rep must be >= 2 (got {self.departures_per_rep})")
        if self.warmup is not None and self.warmup < 0:
            raise ConfigError(f"warmup must be >= 0 (got {self.warmup})")
        if self.ordering is not None:
            if self.system != SystemKind.TANDEM_CHAIN:
                raise ConfigError("ordering only applies to TandemChain scenarios")
            if sorted(self.ordering) != list(range(len(self.parameters["rates"]))):
                raise ConfigError(f"ordering {self.ordering} is not a permutation of the tandem's servers")
        if self.parameters.get("feed", "point") not in FEED_KINDS:
            raise ConfigError(f"feed must be one of {FEED_KINDS}")
        # Stability and parameter ranges are enforced by the analytic reference.
        self.reference()
        return self

    @property
    def effective_warmup(self) -> int:
        if self.warmup is not None:
            return self.warmup
        return max(MIN_WARMUP, int(WARMUP_FRACTION * self.departures_per_rep))

    def rates(self) -> List[float]:
        """Tandem service rates in queue order, with `ordering` applied."""
        if self.system == SystemKind.TANDEM_TWO:
            return [self.parameters["gamma"], self.parameters["mu"]]
        rates = [float(r) for r in self.parameters["rates"]]
        if self.ordering is not None:
            rates = [rates[i] for i in self.ordering]
        return rates

    def feed(self):
        age = float(self.parameters["age"])
        if self.parameters.get("feed", "point") == "exponential":
            return Exponential(1.0 / age)
        return PointMass(age)

    def reference(self) -> AnalyticReport:
        p = self.parameters
        if self.system == SystemKind.MM1:
            return analytic_report("mm1", p)
        if self.system == SystemKind.ZERO_WAIT:
            return analytic_report("zero-wait", p)
        if self.system == SystemKind.TANDEM_TWO:
            return analytic_report("tandem-two", p)
        if self.system == SystemKind.TANDEM_CHAIN:
            return analytic_report("tandem-chain", {"lambda": p["lambda"], "rates": self.rates()})
        if self.system == SystemKind.HETERO_TANDEM:
            return analytic_report("hetero-tandem", p)
        if self.system == SystemKind.RETRIAL:
            return analytic_report("retrial", p)
        report = analytic_report("fixed-delay", {"lambda": p["lambda"], "mu": p["mu"], "delay": float(p["age"])})
        feed = self.feed()
        report.interval = correction_bounds(feed.mean(), feed.sd(), 1.0)
        return report

    def zero_age_reference(self) -> float:
        """Zero-age AAoI of the delivered stream, the baseline of the closure check."""
        p = self.parameters
        if self.system in (SystemKind.MM1, SystemKind.INDEPENDENT_FEED):
            return aaoi_mm1_fcfs(p["lambda"], p["mu"])
        if self.system == SystemKind.ZERO_WAIT:
            return 2.0 / p["mu"]
        if self.system in (SystemKind.TANDEM_TWO, SystemKind.TANDEM_CHAIN):
            return aaoi_mm1_fcfs(p["lambda"], self.rates()[-1])
        if self.system == SystemKind.HETERO_TANDEM:
            return hem1_aaoi(p["lambda"], p["gamma"], p["mu"])
        return retrial_zero_age_exact(p["lambda"], p["theta"], p["mu"]).delta0

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["system"] = self.system.value
        out["parameters"] = dict(self.parameters)
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioSpec":
        if "system" not in data:
            raise ConfigError("scenario.system is required")
        known = {"name", "system", "parameters", "replications", "departures_per_rep", "seed", "warmup", "ordering"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown scenario keys: {', '.join(sorted(unknown))}")
        kwargs = dict(data)
        kwargs.setdefault("name", str(data["system"]))
        kwargs["parameters"] = dict(data.get("parameters", {}))
        return cls(**kwargs)


# --- Replications ---

def simulate_once(spec: ScenarioSpec, stream_id: int, keep_log: bool = False) -> RunStatistics:
    """One replication on stream (spec.seed, stream_id)."""
    rng = RngStream(spec.seed, stream_id)
    p = spec.parameters
    warmup = spec.effective_warmup
    total = warmup + spec.departures_per_rep
    system = spec.system
    if system == SystemKind.MM1:
        return run_single_node(NodeModel.fcfs(p["mu"]), p["lambda"], None, warmup, total, rng, keep_log=keep_log)
    if system == SystemKind.INDEPENDENT_FEED:
        return run_single_node(NodeModel.fcfs(p["mu"]), p["lambda"], spec.feed(), warmup, total, rng,
                               keep_log=keep_log)
    if system == SystemKind.ZERO_WAIT:
        return run_zero_wait(p["alpha"], p["mu"], warmup, total, rng, keep_log=keep_log)
    if system in (SystemKind.TANDEM_TWO, SystemKind.TANDEM_CHAIN):
        return run_tandem(spec.rates(), p["lambda"], warmup, total, rng, keep_log=keep_log)
    if system == SystemKind.HETERO_TANDEM:
        return run_hetero_tandem(p["lambda"], p["gamma"], p["mu"], warmup, total, rng, keep_log=keep_log)
    return run_retrial(p["lambda"], p["theta"], p["mu"], warmup, total, rng, keep_log=keep_log)


def _replication_job(args: Tuple[Dict[str, Any], int, bool]) -> RunStatistics:
    spec_dict, stream_id, keep_log = args
    return simulate_once(ScenarioSpec.from_dict(spec_dict), stream_id, keep_log)


def iter_replications(spec: ScenarioSpec, workers: int = 1,
                      keep_log: bool = False) -> Iterator[Tuple[int, RunStatistics]]:
    """
    Yields (stream_id, statistics) in stream order. With workers > 1 the
    replications run in a process pool; output order does not depend on
    completion order.
    """
    spec.validate()
    ids = range(spec.replications)
    if workers <= 1 or spec.replications == 1:
        for sid in ids:
            logger.debug(f"{spec.name}: replication {sid + 1}/{spec.replications}")
            yield sid, simulate_once(spec, sid, keep_log)
        return

    payload = spec.to_dict()
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_replication_job, (payload, sid, keep_log)) for sid in ids]
        for sid, future in zip(ids, futures):
            yield sid, future.result()


def run_replications(spec: ScenarioSpec, workers: int = 1, keep_log: bool = False) -> List[RunStatistics]:
    return [s for _, s in iter_replications(spec, workers, keep_log)]


# --- Results ---

@dataclass
class ClosureCheck:
    name: str
    delta0: float
    residual: float
    standard_error: float
    passed: bool


@dataclass
class ExperimentResult:
    spec: ScenarioSpec
    runs: List[RunStatistics]
    mean_aaoi: float
    sd_aaoi: float
    se_aaoi: float
    reference: AnalyticReport
    interval: Optional[BoundInterval]
    closure: ClosureCheck
    verdict: bool
    tolerance: float
    notes: List[str] = field(default_factory=list)

    def aggregate(self, name: str) -> float:
        return float(np.mean([getattr(r, name) for r in self.runs]))


def _mean_and_se(values: Sequence[float], fallback_se: float) -> Tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if len(arr) >= 2:
        return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(len(arr)))
    return float(arr.mean()), fallback_se


def closure_check(spec: ScenarioSpec, runs: Sequence[RunStatistics], pairing_offset: int = 1) -> ClosureCheck:
    """
    |AAoI - (zero-age AAoI + effective_rate * E[Y_n A_{n-k}])| against CLOSURE_SIGMAS
    standard errors, with k = pairing_offset. Offsets other than 1 need packet logs.
    """
    delta0 = spec.zero_age_reference()
    if pairing_offset == 1:
        values = [r.zero_age_estimate for r in runs]
    else:
        values = []
        for r in runs:
            if r.log is None:
                raise ConfigError("closure checks with a shifted pairing need runs with packet logs")
            window = r.log.tail(max(spec.effective_warmup, 1) - 1)
            terms = estimate_theorem1_terms(window, pairing_offset=pairing_offset)
            values.append(r.aaoi_estimate - terms.effective_rate * terms.cross_moment)
    estimate, se = _mean_and_se(values, runs[0].se("zero_age_estimate"))
    residual = estimate - delta0
    passed = bool(abs(residual) < CLOSURE_SIGMAS * se) if math.isfinite(se) else False
    log = logger.info if passed else logger.error
    log(f"closure {spec.name}: residual {residual:.4g} (se {se:.3g}, delta0 {delta0:.6g}) "
        f"{'pass' if passed else 'FAIL'}")
    return ClosureCheck(spec.name, delta0, residual, se, passed)


def _reference_check(spec: ScenarioSpec, report: AnalyticReport, mean: float, se: float) -> Tuple[bool, float, str]:
    if spec.system == SystemKind.RETRIAL:
        return True, math.nan, f"published AAoI {report.delta:.6g} reported, not asserted"
    if spec.system == SystemKind.TANDEM_CHAIN and report.delta is None:
        lo, hi = report.extras["age_lb"], report.extras["age_ub"]
        return lo <= mean <= hi, math.nan, f"checked against bound interval [{lo:.6g}, {hi:.6g}]"
    tol = HETERO_TOLERANCE if spec.system == SystemKind.HETERO_TANDEM else REFERENCE_TOLERANCE
    ok = abs(mean - report.delta) <= max(tol * report.delta, CLOSURE_SIGMAS * se)
    return ok, tol, f"reference {report.delta:.6g}"


def summarize_runs(spec: ScenarioSpec, runs: List[RunStatistics], pairing_offset: int = 1) -> ExperimentResult:
    aaoi = np.array([r.aaoi_estimate for r in runs])
    mean, se = _mean_and_se(aaoi, runs[0].se("aaoi_estimate"))
    sd = float(aaoi.std(ddof=1)) if len(aaoi) > 1 else 0.0
    report = spec.reference()
    closure = closure_check(spec, runs, pairing_offset)
    ok, tol, note = _reference_check(spec, report, mean, se)
    return ExperimentResult(spec=spec, runs=runs, mean_aaoi=mean, sd_aaoi=sd, se_aaoi=se, reference=report,
                            interval=report.interval, closure=closure, verdict=ok and closure.passed,
                            tolerance=tol, notes=[note])


def run_scenario(spec: ScenarioSpec, workers: int = 1, pairing_offset: int = 1) -> ExperimentResult:
    logger.info(f"Running scenario {spec.name}: {spec.replications} x {spec.departures_per_rep} departures")
    runs = run_replications(spec, workers, keep_log=pairing_offset != 1)
    result = summarize_runs(spec, runs, pairing_offset)
    logger.info(f"Scenario {spec.name}: AAoI {result.mean_aaoi:.6g} (sd {result.sd_aaoi:.3g}), "
                f"verdict {'pass' if result.verdict else 'FAIL'}")
    return result


def theorem1_closure_suite(scenarios: Sequence[ScenarioSpec], workers: int = 1,
                           pairing_offset: int = 1) -> List[ClosureCheck]:
    return [run_scenario(spec, workers, pairing_offset).closure for spec in scenarios]


def closure_scenarios(replications: int = 20, departures: int = DEFAULT_DEPARTURES,
                      seed: int = DEFAULT_SEED) -> List[ScenarioSpec]:
    """The worked configurations of the five aged-update systems."""
    common = dict(replications=replications, departures_per_rep=departures, seed=seed)
    return [
        ScenarioSpec("fixed-delay", SystemKind.INDEPENDENT_FEED, {"lambda": 1.0, "mu": 2.0, "age": 1.0}, **common),
        ScenarioSpec("zero-wait", SystemKind.ZERO_WAIT, {"alpha": 0.5, "mu": 1.0}, **common),
        ScenarioSpec("tandem-two", SystemKind.TANDEM_TWO, {"lambda": 1.0, "gamma": 2.0, "mu": 2.0}, **common),
        ScenarioSpec("hetero-tandem", SystemKind.HETERO_TANDEM, {"lambda": 1.0, "gamma": 1.0, "mu": 2.0}, **common),
        ScenarioSpec("retrial", SystemKind.RETRIAL, {"lambda": 1.0, "theta": 1.0, "mu": 4.0}, **common),
    ]


# --- Tandem tables ---

def default_loads(num_queues: int) -> List[float]:
    if num_queues == 3:
        return [0.1, 0.5, 0.9]
    if num_queues < 2:
        raise ConfigError("a tandem table needs at least 2 queues")
    return [float(x) for x in np.round(np.linspace(0.1, 0.9, num_queues), 12)]


def _check_loads(loads: Sequence[float]) -> None:
    if not loads or any(not 0 < x < 1 for x in loads):
        raise ConfigError(f"loads must lie in (0, 1) (got {list(loads)})")


def _check_permutation(ordering: Sequence[float], loads: Sequence[float]) -> None:
    if len(ordering) != len(loads) or not np.allclose(sorted(ordering), sorted(loads), rtol=0, atol=1e-12):
        raise ConfigError(f"ordering {list(ordering)} is not a permutation of loads {list(loads)}")


def _chain_spec(loads: Sequence[float], replications: int, departures: int, seed: int,
                warmup: Optional[int], name: str) -> ScenarioSpec:
    return ScenarioSpec(name, SystemKind.TANDEM_CHAIN, {"lambda": 1.0, "rates": [1.0 / x for x in loads]},
                        replications=replications, departures_per_rep=departures, seed=seed, warmup=warmup)


@dataclass
class TableResult:
    num_queues: int
    rows: List[Dict[str, Any]]
    metadata: Dict[str, Any]

    @property
    def fieldnames(self) -> List[str]:
        rho = [f"rho_{i + 1}" for i in range(self.num_queues)]
        return rho + ["age_av", "age_sd", "age_lb", "age_ub", "slowest_last_lb", "slowest_last_ub"]


def reproduce_tandem_table(num_queues: int, loads: Optional[Sequence[float]] = None,
                           orderings: Optional[Sequence[Sequence[float]]] = None,
                           replications: int = TABLE_REPLICATIONS, seed: int = DEFAULT_SEED,
                           departures_per_rep: int = DEFAULT_DEPARTURES, warmup: Optional[int] = None,
                           workers: int = 1) -> TableResult:
    """
    Simulated AAoI of a tandem of M/M/1 queues with lambda = 1 and service
    rates 1/rho_i, one row per server ordering. Bound columns treat the last
    queue of each ordering as the final one; the slowest-last columns give the
    interval for the same servers with the slowest one moved to the end.
    """
    loads = list(loads) if loads is not None else default_loads(num_queues)
    if len(loads) != num_queues:
        raise ConfigError(f"expected {num_queues} loads, got {len(loads)}")
    _check_loads(loads)
    orderings = [list(o) for o in orderings] if orderings else [sorted(loads)]
    for ordering in orderings:
        _check_permutation(ordering, loads)

    best = slowest_last([1.0 / x for x in loads])
    best_bounds = tandem_chain_bounds(1.0, best[:-1], best[-1]).interval
    rows = []
    for idx, ordering in enumerate(orderings):
        rates = [1.0 / x for x in ordering]
        bounds = tandem_chain_bounds(1.0, rates[:-1], rates[-1]).interval
        spec = _chain_spec(ordering, replications, departures_per_rep, seed + idx, warmup,
                           f"tandem-{num_queues}-{idx}")
        aaoi = np.array([r.aaoi_estimate for r in run_replications(spec, workers)])
        row = {f"rho_{i + 1}": x for i, x in enumerate(ordering)}
        row.update(age_av=float(aaoi.mean()), age_sd=float(aaoi.std(ddof=1)) if len(aaoi) > 1 else 0.0,
                   age_lb=bounds.lower, age_ub=bounds.upper,
                   slowest_last_lb=best_bounds.lower, slowest_last_ub=best_bounds.upper)
        logger.info(f"tandem table {num_queues}: ordering {ordering} -> age_av {row['age_av']:.4g}")
        rows.append(row)

    metadata = {"lambda": 1.0, "replications": replications, "departures_per_rep": departures_per_rep,
                "seed": seed, "calibration": CALIBRATION_NOTE}
    return TableResult(num_queues, rows, metadata)


@dataclass
class OrderingComparison:
    means: List[float]
    max_pairwise_gap: float
    pooled_se: float
    anova_pvalue: float
    within_three_se: bool


def compare_tandem_systems(load_sets: Sequence[Sequence[float]], replications: int = 30,
                           seed: int = DEFAULT_SEED, departures_per_rep: int = DEFAULT_DEPARTURES,
                           warmup: Optional[int] = None, workers: int = 1) -> OrderingComparison:
    """
    One-way comparison of per-system replication means. pooled_se is the
    standard error of a difference of two means under the pooled variance.
    """
    groups = []
    for idx, loads in enumerate(load_sets):
        _check_loads(loads)
        spec = _chain_spec(loads, replications, departures_per_rep, seed + idx, warmup, f"ordering-{idx}")
        groups.append(np.array([r.aaoi_estimate for r in run_replications(spec, workers)]))

    means = [float(g.mean()) for g in groups]
    gap = max(means) - min(means)
    if len(groups) < 2 or replications < 2:
        return OrderingComparison(means, gap, math.nan, math.nan, True)
    pooled_var = float(np.mean([g.var(ddof=1) for g in groups]))
    pooled_se = math.sqrt(2 * pooled_var / replications)
    pvalue = float(stats.f_oneway(*groups).pvalue)
    within = gap < CLOSURE_SIGMAS * pooled_se
    logger.info(f"ordering comparison: gap {gap:.4g}, pooled se {pooled_se:.3g}, ANOVA p {pvalue:.3g}")
    return OrderingComparison(means, gap, pooled_se, pvalue, within)


def ordering_invariance_test(loads: Sequence[float], num_orderings: Optional[int] = None,
                             replications: int = 30, seed: int = DEFAULT_SEED,
                             departures_per_rep: int = DEFAULT_DEPARTURES, warmup: Optional[int] = None,
                             orderings: Optional[Sequence[Sequence[float]]] = None,
                             workers: int = 1) -> OrderingComparison:
    """Compares server orderings of one tandem; the result is reported, never asserted."""
    _check_loads(loads)
    if orderings is None:
        orderings = [list(p) for p in dict.fromkeys(itertools.permutations(loads))]
    orderings = [list(o) for o in orderings]
    for ordering in orderings:
        _check_permutation(ordering, loads)
    if num_orderings is not None:
        orderings = orderings[:num_orderings]
    return compare_tandem_systems(orderings, replications, seed, departures_per_rep, warmup, workers)


# --- Analytic sweeps ---

def bounds_sweep_zero_wait(mu: float, alpha_grid: Sequence[float]) -> List[Dict[str, float]]:
    """Correction term and its bound interval for the zero-wait source across error probabilities."""
    rows = []
    for alpha in alpha_grid:
        inputs = zw_correction_inputs(alpha, mu)
        interval = correction_bounds(inputs.mean_initial_age, inputs.sd_initial_age, inputs.cv_interdeparture)
        rows.append({"alpha": float(alpha), "correction": correction_term(inputs), "lb": interval.lower,
                     "ub": interval.upper, "clamped_lb": interval.clamped_lower})
    return rows
