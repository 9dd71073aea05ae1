# Closed-form AAoI evaluators, correction-term bounds and steady-state results.
# Pure functions over rates; every stability precondition is checked with slack.

import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from scipy import optimize

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

try:
    from src.stochastic import DistributionSpec, Erlang, Exponential, Mixture, PointMass
    from src.utils import (ConfigError, DegenerateParameterError,
                           InconsistentInputsError, require_positive, require_stable)
except ImportError:  # Fallback for when the package is installed
    from stochastic import DistributionSpec, Erlang, Exponential, Mixture, PointMass
    from utils import (ConfigError, DegenerateParameterError,
                       InconsistentInputsError, require_positive, require_stable)

logger = logging.getLogger(__name__)

SIGMA_AGREEMENT = 1e-10


# --- Decomposition building blocks ---

@dataclass(frozen=True)
class CorrectionInputs:
    mean_initial_age: float
    sd_initial_age: float
    cv_interdeparture: float
    correlation: float
    effective_rate: float

    def __post_init__(self):
        if self.mean_initial_age < 0:
            raise InconsistentInputsError(f"mean_initial_age must be >= 0 (got {self.mean_initial_age})")
        if self.sd_initial_age < 0 or self.cv_interdeparture < 0:
            raise InconsistentInputsError("sd_initial_age and cv_interdeparture must be >= 0")
        if abs(self.correlation) > 1 + 1e-12:
            raise InconsistentInputsError(f"|correlation| must be <= 1 (got {self.correlation})")
        if self.effective_rate <= 0:
            raise InconsistentInputsError(f"effective_rate must be > 0 (got {self.effective_rate})")


@dataclass(frozen=True)
class BoundInterval:
    lower: float
    upper: float
    width: float
    clamped_lower: float

    def clamped(self) -> "BoundInterval":
        lower = max(0.0, self.lower)
        return BoundInterval(lower=lower, upper=self.upper, width=self.upper - lower, clamped_lower=lower)

    def contains(self, value: float, tol: float = 1e-12) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def shifted(self, offset: float) -> "BoundInterval":
        return _interval(self.lower + offset, self.upper + offset)


def _interval(lower: float, upper: float) -> BoundInterval:
    return BoundInterval(lower=lower, upper=upper, width=upper - lower, clamped_lower=max(0.0, lower))


def aaoi_mm1_fcfs(lam: float, mu: float) -> float:
    require_positive(lam=lam, mu=mu)
    require_stable(lam, mu, "lambda < mu")
    return 1 / lam + 1 / mu + (lam ** 2 / mu ** 2) / (mu - lam)


def theorem1_combine(delta0: float, effective_rate: float, cross_moment: float) -> float:
    """Aged-updates AAoI: zero-age AAoI plus effective rate times E[Y_n A_{n-1}]."""
    if delta0 < 0 or effective_rate < 0 or cross_moment < 0:
        raise InconsistentInputsError("theorem1_combine inputs must be nonnegative")
    return delta0 + effective_rate * cross_moment


def correction_term(inputs: CorrectionInputs) -> float:
    value = inputs.mean_initial_age + inputs.correlation * inputs.cv_interdeparture * inputs.sd_initial_age
    if value < -1e-12:
        raise InconsistentInputsError(
            f"inputs imply a negative correction {value:.6g}; correlation {inputs.correlation:.6g} "
            f"is below the implied limit"
        )
    return max(value, 0.0)


def correction_bounds(mean_initial_age: float, sd_initial_age: float, cv_interdeparture: float) -> BoundInterval:
    if mean_initial_age < 0 or sd_initial_age < 0 or cv_interdeparture < 0:
        raise InconsistentInputsError("correction_bounds inputs must be nonnegative")
    half = cv_interdeparture * sd_initial_age
    interval = BoundInterval(
        lower=mean_initial_age - half,
        upper=mean_initial_age + half,
        width=2 * half,
        clamped_lower=max(0.0, mean_initial_age - half),
    )
    if interval.lower < 0:
        logger.debug(f"lower bound {interval.lower:.6g} is negative; trivial bound 0 applies")
    return interval


def correlation_lower_limit(cv_initial_age: float, cv_interdeparture: float) -> float:
    """Smallest correlation compatible with a nonnegative correction: -1/(kappa_A kappa_Y)."""
    if cv_initial_age <= 0 or cv_interdeparture <= 0:
        return -math.inf
    return -1.0 / (cv_initial_age * cv_interdeparture)


# --- Zero-wait forwarding over an erasure channel ---

def _check_alpha(alpha: float) -> None:
    if not 0 <= alpha < 1:
        raise ConfigError(f"alpha must lie in [0, 1) (got {alpha})")


def zw_aaoi(alpha: float, mu: float) -> float:
    _check_alpha(alpha)
    require_positive(mu=mu)
    return 2 / (mu * (1 - alpha))


def zw_initial_age_mixture(alpha: float, mu: float) -> DistributionSpec:
    _check_alpha(alpha)
    require_positive(mu=mu)
    if alpha == 0:
        return PointMass(0.0)
    nu = mu * (1 - alpha)
    return Mixture(
        weights=((1 - alpha) ** 2, 2 * alpha * (1 - alpha), alpha ** 2),
        components=(PointMass(0.0), Exponential(nu), Erlang(2, nu)),
    )


def zw_initial_age_positive_part(alpha: float, mu: float) -> DistributionSpec:
    """Zero-wait initial-age law conditioned on a positive age (the atom at 0 removed, the rest renormalized)."""
    _check_alpha(alpha)
    require_positive(mu=mu)
    if alpha == 0:
        raise ConfigError("every initial age is 0 when alpha = 0")
    nu = mu * (1 - alpha)
    return Mixture(
        weights=(2 * (1 - alpha) / (2 - alpha), alpha / (2 - alpha)),
        components=(Exponential(nu), Erlang(2, nu)),
    )


def zw_correction_inputs(alpha: float, mu: float) -> CorrectionInputs:
    # Equivalent aged model: every attempt is a packet, Y_n = S_n ~ Exp(mu) independent of A.
    mixture = zw_initial_age_mixture(alpha, mu)
    return CorrectionInputs(
        mean_initial_age=mixture.mean(),
        sd_initial_age=mixture.sd(),
        cv_interdeparture=1.0,
        correlation=0.0,
        effective_rate=mu,
    )


# --- Tandems of M/M/1 queues ---

def tandem_cross_moment(lam: float, gamma: float, mu: float) -> float:
    """E[Y_n^(2) T_{n-1}^(1)] for two FCFS queues in tandem."""
    require_positive(lam=lam, gamma=gamma, mu=mu)
    require_stable(lam, gamma, "lambda < gamma")
    require_stable(lam, mu, "lambda < mu")
    return 1 / (gamma * lam) + (lam / gamma ** 2) / (gamma - lam) + (lam / (gamma * mu)) / (gamma + mu - lam)


def tandem_cross_moment_decomposition(lam: float, gamma: float, mu: float) -> Dict[str, float]:
    """
    The cross moment split by where packet n was when packet n-1 left queue 1.

    baseline: E[S^(2)] E[T^(1)]
    busy_first: packet n arrived while packet n-1 was still in queue 1
    idle_first: packet n arrived after packet n-1 left queue 1
    """
    require_positive(lam=lam, gamma=gamma, mu=mu)
    require_stable(lam, gamma, "lambda < gamma")
    require_stable(lam, mu, "lambda < mu")
    mean_t1 = 1 / (gamma - lam)
    p_residual_exceeds = (mu - lam) / (gamma + mu - lam)
    busy_first = (1 / gamma) * (mean_t1 + 1 / gamma) * p_residual_exceeds * (lam / gamma)
    w = gamma * (gamma + mu - lam) / ((gamma - lam) * (gamma + mu))
    p_hypo_exceeds = (mu - lam) * (gamma + mu) / (mu * (gamma + mu - lam))
    idle_first = (w / lam + (1 - w) / gamma) * (1 / gamma) * p_hypo_exceeds * ((gamma - lam) / gamma)
    baseline = (1 / mu) * mean_t1
    return {
        "baseline": baseline,
        "busy_first": busy_first,
        "idle_first": idle_first,
        "total": baseline + busy_first + idle_first,
    }


def tandem_covariance(lam: float, gamma_c: float, gamma_c1: float) -> float:
    require_positive(lam=lam, gamma_c=gamma_c, gamma_c1=gamma_c1)
    require_stable(lam, gamma_c, "lambda < gamma_C")
    require_stable(lam, gamma_c1, "lambda < gamma_C+1")
    total = gamma_c + gamma_c1
    return (1 / gamma_c ** 2) * total * (lam - gamma_c1) / (gamma_c1 * (total - lam))


def aaoi_tandem_two(lam: float, gamma: float, mu: float) -> float:
    require_positive(lam=lam, gamma=gamma, mu=mu)
    require_stable(lam, gamma, "lambda < gamma")
    require_stable(lam, mu, "lambda < mu")
    return (1 / lam + 1 / mu + (lam ** 2 / mu ** 2) / (mu - lam)
            + 1 / gamma + (lam ** 2 / gamma ** 2) / (gamma - lam)
            + (lam ** 2 / (gamma * mu)) / (gamma + mu - lam))


def tandem_two_correction_inputs(lam: float, gamma: float, mu: float) -> CorrectionInputs:
    mean_t1 = 1 / (gamma - lam)
    cov = tandem_covariance(lam, gamma, mu)
    # Burke: final-queue departures are Poisson(lam), so sd(Y) = 1/lam.
    return CorrectionInputs(
        mean_initial_age=mean_t1,
        sd_initial_age=mean_t1,
        cv_interdeparture=1.0,
        correlation=cov * lam / mean_t1,
        effective_rate=lam,
    )


@dataclass(frozen=True)
class TandemChainBounds:
    delta0: float
    mean_age: float
    sd_age: float
    interval: BoundInterval
    practical_upper: float


def tandem_chain_bounds(lam: float, prior_rates: Sequence[float], mu_last: float) -> TandemChainBounds:
    require_positive(lam=lam, mu_last=mu_last)
    for i, rate in enumerate(prior_rates):
        require_positive(**{f"rate_{i + 1}": rate})
        require_stable(lam, rate, f"lambda < gamma_{i + 1}")
    delta0 = aaoi_mm1_fcfs(lam, mu_last)
    mean_age = sum(1 / (g - lam) for g in prior_rates)
    sd_age = math.sqrt(sum(1 / (g - lam) ** 2 for g in prior_rates))
    interval = correction_bounds(mean_age, sd_age, 1.0).shifted(delta0)
    return TandemChainBounds(
        delta0=delta0,
        mean_age=mean_age,
        sd_age=sd_age,
        interval=interval,
        practical_upper=delta0 + mean_age,
    )


def slowest_last(rates: Sequence[float]) -> List[float]:
    """Reorders service rates so the slowest server is the final queue."""
    ordered = list(rates)
    slowest = min(range(len(ordered)), key=lambda i: ordered[i])
    ordered.append(ordered.pop(slowest))
    return ordered


def tandem_homogeneous_bounds(lam: float, mu: float, num_prior: int) -> BoundInterval:
    if num_prior < 0:
        raise ConfigError("num_prior must be >= 0")
    return tandem_chain_bounds(lam, [mu] * num_prior, mu).interval


def tandem_heuristic_estimate(interval: BoundInterval) -> float:
    """Rule-of-thumb point estimate leaning toward the lower bound."""
    return 0.55 * interval.lower + 0.45 * interval.upper


# --- HE/M/1 queue (hypoexponential inter-arrivals) ---

def _hem1_load(lam: float, gamma: float, mu: float) -> float:
    require_positive(lam=lam, gamma=gamma, mu=mu)
    rho = lam * gamma / (mu * (lam + gamma))
    require_stable(rho, 1.0, "rho = lambda*gamma/(mu*(lambda+gamma)) < 1")
    return rho


def _hem1_fixed_point(lam: float, gamma: float, mu: float) -> Callable[[float], float]:
    def f(sigma: float) -> float:
        s = mu - mu * sigma
        return sigma - (lam / (lam + s)) * (gamma / (gamma + s))
    return f


def hem1_sigma_bisect(lam: float, gamma: float, mu: float) -> float:
    """Root in (0,1) of sigma = X~(mu - mu*sigma) by bisection; sigma = 1 is the trivial root."""
    _hem1_load(lam, gamma, mu)
    f = _hem1_fixed_point(lam, gamma, mu)
    peak = optimize.minimize_scalar(lambda s: -f(s), bounds=(0.0, 1.0), method="bounded",
                                    options={"xatol": 1e-12}).x
    if f(peak) <= 0:
        raise ArithmeticError(f"could not bracket the HE/M/1 root (f(peak)={f(peak):.3g})")
    return optimize.bisect(f, 0.0, peak, xtol=1e-15, rtol=1e-15, maxiter=500)


def hem1_fixed_point_residual(lam: float, gamma: float, mu: float, sigma: Optional[float] = None) -> float:
    sigma = hem1_sigma(lam, gamma, mu) if sigma is None else sigma
    return abs(_hem1_fixed_point(lam, gamma, mu)(sigma))


def hem1_sigma(lam: float, gamma: float, mu: float) -> float:
    _hem1_load(lam, gamma, mu)
    b = lam + gamma + mu
    # Smaller root of mu*s^2 - b*s + lam*gamma/mu = 0, written without the b - sqrt(...) cancellation.
    sigma = 2 * lam * gamma / (mu * (b + math.sqrt(b * b - 4 * lam * gamma)))
    check = hem1_sigma_bisect(lam, gamma, mu)
    if abs(sigma - check) > SIGMA_AGREEMENT:
        logger.error(f"sigma closed form {sigma!r} disagrees with bisection {check!r}")
        raise ArithmeticError(f"HE/M/1 sigma mismatch: closed form {sigma:.15g} vs bisection {check:.15g}")
    return sigma


def hem1_aaoi(lam: float, gamma: float, mu: float) -> float:
    rho = _hem1_load(lam, gamma, mu)
    sigma = hem1_sigma(lam, gamma, mu)
    return 1 / lam + 1 / gamma + 1 / mu + sigma * rho / (mu - mu * sigma) - (1 - sigma ** 2) / (lam + gamma)


def hem1_system_time(lam: float, gamma: float, mu: float) -> DistributionSpec:
    return Exponential(mu - mu * hem1_sigma(lam, gamma, mu))


def hem1_arrival_queue_pmf(lam: float, gamma: float, mu: float, n: int) -> float:
    """Probability an arrival finds n packets in the system."""
    if n < 0:
        return 0.0
    sigma = hem1_sigma(lam, gamma, mu)
    return (1 - sigma) * sigma ** n


def hem1_interdeparture_second_moment(lam: float, gamma: float, mu: float) -> float:
    sigma = hem1_sigma(lam, gamma, mu)
    return 2 * (1 / gamma ** 2 + 1 / lam ** 2 + (1 + sigma) / (lam * gamma))


@dataclass(frozen=True)
class Hem1Moments:
    sigma: float
    w: float
    mean_y: float
    second_moment_y: float
    cross_yt: float
    pdf_y: Callable[[float], float]
    residual_pdf: Callable[[float], float]


def hem1_moments(lam: float, gamma: float, mu: float) -> Hem1Moments:
    _hem1_load(lam, gamma, mu)
    if len({lam, gamma, mu}) < 3:
        raise DegenerateParameterError(
            f"hem1_moments needs pairwise distinct rates (got lambda={lam}, gamma={gamma}, mu={mu})"
        )
    sigma = hem1_sigma(lam, gamma, mu)
    eta = mu - mu * sigma
    w = gamma * (gamma + eta) / ((gamma - lam) * (lam + gamma + eta))

    mean_y = 1 / lam + 1 / gamma
    second_x = 2 * (1 / lam ** 2 + 1 / gamma ** 2 + 1 / (lam * gamma))
    second_y = second_x + 2 * sigma / (lam * gamma)
    # E[(X - T)^+ T] = P(X > T) E[X^R T | X > T], with the residual law weighted by w.
    cross_yt = 1 / (mu * eta) + (1 - sigma) * (w / (lam * (lam + eta)) + (1 - w) / (gamma * (gamma + eta)))

    a2 = (1 - sigma) * w * mu / (mu - lam)
    a3 = (1 - sigma) * (1 - w) * mu / (mu - gamma)
    a1 = 1 - a2 - a3

    def pdf_y(t: float) -> float:
        if t < 0:
            return 0.0
        v = a1 * mu * math.exp(-mu * t) + a2 * lam * math.exp(-lam * t) + a3 * gamma * math.exp(-gamma * t)
        return 0.0 if abs(v) < 1e-14 else v

    def residual_pdf(t: float) -> float:
        if t < 0:
            return 0.0
        v = w * lam * math.exp(-lam * t) + (1 - w) * gamma * math.exp(-gamma * t)
        return 0.0 if abs(v) < 1e-14 else v

    return Hem1Moments(sigma=sigma, w=w, mean_y=mean_y, second_moment_y=second_y,
                       cross_yt=cross_yt, pdf_y=pdf_y, residual_pdf=residual_pdf)


def tandem_hetero_aaoi(lam: float, gamma: float, mu: float) -> float:
    return hem1_aaoi(lam, gamma, mu) + 1 / gamma


# --- Retrial queue with a single retrial stream ---

def aaoi_mm11_nonpreemptive(total_rate: float, mu: float) -> float:
    require_positive(total_rate=total_rate, mu=mu)
    return 1 / total_rate + 1 / mu + total_rate / (mu * (total_rate + mu))


@dataclass(frozen=True)
class RetrialSteadyState:
    rho: float
    pi: float
    p00: float
    geometric_ratio: float

    def p(self, busy: int, n: int) -> float:
        if n < 0:
            return 0.0
        x = self.geometric_ratio
        if busy:
            return (1 - x) * self.rho * x ** n
        if n == 0:
            return self.p00
        return (1 - x) * (1 - self.pi) * x ** n

    def busy_probability(self) -> float:
        return self.rho

    def occupancy_table(self, n_max: int) -> Dict[Tuple[int, int], float]:
        return {(i, n): self.p(i, n) for i in (0, 1) for n in range(n_max + 1)}

    def total_probability(self, tail: float = 1e-12) -> float:
        """Truncated sum over states until both geometric tails drop below `tail`."""
        total, n = 0.0, 0
        while True:
            total += self.p(0, n) + self.p(1, n)
            if n > 0 and self.p(1, n) < tail and self.p(0, n) < tail:
                return total
            n += 1


def _retrial_params(lam: float, theta: float, mu: float) -> Tuple[float, float]:
    require_positive(lam=lam, theta=theta, mu=mu)
    rho = lam / mu
    pi = theta / (lam + theta)
    require_stable(rho, pi, "rho < pi")
    return rho, pi


def retrial_steady_state(lam: float, theta: float, mu: float) -> RetrialSteadyState:
    rho, pi = _retrial_params(lam, theta, mu)
    ratio = rho / pi
    return RetrialSteadyState(rho=rho, pi=pi, p00=1 - ratio, geometric_ratio=ratio)


def retrial_balance_residuals(lam: float, theta: float, mu: float, n_max: int = 50) -> float:
    """Largest absolute residual of the global balance equations at the closed-form solution."""
    ss = retrial_steady_state(lam, theta, mu)
    p = ss.p
    worst = abs(lam * p(0, 0) - mu * p(1, 0))
    worst = max(worst, abs((lam + mu) * p(1, 0) - lam * p(0, 0) - theta * p(0, 1)))
    for n in range(1, n_max + 1):
        worst = max(worst, abs((lam + theta) * p(0, n) - mu * p(1, n)))
        worst = max(worst, abs((lam + mu) * p(1, n) - lam * p(0, n) - theta * p(0, n + 1) - lam * p(1, n - 1)))
    return worst


def retrial_pgf(lam: float, theta: float, mu: float, z: float) -> Tuple[float, float]:
    """Partial generating functions (P_0(z), P_1(z)) of the orbit size, idle and busy server."""
    ss = retrial_steady_state(lam, theta, mu)
    x = ss.geometric_ratio
    if abs(x * z) >= 1:
        raise ConfigError(f"|z| must be below pi/rho = {1 / x:.6g}")
    p0 = (1 - x) * (1 + (1 - ss.pi) * x * z / (1 - x * z))
    p1 = (1 - x) * ss.rho / (1 - x * z)
    return p0, p1


@dataclass(frozen=True)
class OrbitMetrics:
    l_orbit: float
    w_orbit: float
    mean_initial_age: float
    join_probability: float


def retrial_orbit_metrics(lam: float, theta: float, mu: float) -> OrbitMetrics:
    rho, pi = _retrial_params(lam, theta, mu)
    l_orbit = rho * (1 + rho - pi) / (pi - rho)
    w_orbit = (1 + rho - pi) / (mu * (pi - rho))
    return OrbitMetrics(
        l_orbit=l_orbit,
        w_orbit=w_orbit,
        mean_initial_age=pi * w_orbit,
        # PASTA: a primary arrival sees a busy server with probability rho.
        join_probability=rho,
    )


def retrial_aaoi(lam: float, theta: float, mu: float) -> float:
    rho, pi = _retrial_params(lam, theta, mu)
    k = 1 + rho - pi
    return (1 / mu) * (k / rho + rho / k + pi * k / (pi - rho))


@dataclass(frozen=True)
class RetrialZeroAge:
    mean_y: float
    second_moment_y: float
    cross_yt: float
    delta0: float


def retrial_zero_age_exact(lam: float, theta: float, mu: float) -> RetrialZeroAge:
    """
    Zero-age AAoI of the admitted stream of the retrial queue.

    After a departure the server idles Exp(lam) if the orbit is empty and
    Exp(lam + theta) otherwise; T_n is the Exp(mu) service of the admitted packet.
    """
    ss = retrial_steady_state(lam, theta, mu)
    q_empty = 1 - ss.geometric_ratio
    # Probability a service starts with an empty orbit.
    p_start_empty = q_empty * (lam + mu) / mu
    fast = lam + theta
    mean_idle = q_empty / lam + (1 - q_empty) / fast
    second_idle = 2 * q_empty / lam ** 2 + 2 * (1 - q_empty) / fast ** 2
    mean_y = mean_idle + 1 / mu
    second_y = second_idle + 2 * mean_idle / mu + 2 / mu ** 2
    cross_idle_service = (1 / mu) / fast + (1 / lam - 1 / fast) * p_start_empty * mu / (mu + lam) ** 2
    cross_yt = cross_idle_service + 1 / mu ** 2
    return RetrialZeroAge(
        mean_y=mean_y,
        second_moment_y=second_y,
        cross_yt=cross_yt,
        delta0=(second_y / 2 + cross_yt) / mean_y,
    )


# --- Report dispatch ---

@dataclass
class AnalyticReport:
    model: str
    params: Dict[str, Any]
    delta0: Optional[float]
    correction: Optional[float]
    delta: Optional[float]
    interval: Optional[BoundInterval] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    def as_rows(self) -> List[Dict[str, Any]]:
        rows = [{"quantity": "delta0", "value": self.delta0},
                {"quantity": "correction", "value": self.correction},
                {"quantity": "delta", "value": self.delta}]
        if self.interval is not None:
            rows += [{"quantity": "correction_lb", "value": self.interval.lower},
                     {"quantity": "correction_ub", "value": self.interval.upper},
                     {"quantity": "correction_lb_clamped", "value": self.interval.clamped_lower}]
        rows += [{"quantity": k, "value": v} for k, v in self.extras.items()]
        return [r for r in rows if r["value"] is not None]


def _report_mm1(p):
    d = aaoi_mm1_fcfs(p["lambda"], p["mu"])
    return AnalyticReport("mm1", dict(p), d, 0.0, d)


def _report_fixed_delay(p):
    d0 = aaoi_mm1_fcfs(p["lambda"], p["mu"])
    delay = p.get("delay", 1.0)
    if delay < 0:
        raise ConfigError("delay must be >= 0")
    return AnalyticReport("fixed-delay", dict(p), d0, delay, d0 + delay,
                          interval=correction_bounds(delay, 0.0, 1.0))


def _report_zero_wait(p):
    inputs = zw_correction_inputs(p["alpha"], p["mu"])
    d0 = 2 / p["mu"]
    return AnalyticReport(
        "zero-wait", dict(p), d0, correction_term(inputs), zw_aaoi(p["alpha"], p["mu"]),
        interval=correction_bounds(inputs.mean_initial_age, inputs.sd_initial_age, 1.0),
        extras={"mean_initial_age": inputs.mean_initial_age, "sd_initial_age": inputs.sd_initial_age},
    )


def _report_tandem_two(p):
    lam, gamma, mu = p["lambda"], p["gamma"], p["mu"]
    inputs = tandem_two_correction_inputs(lam, gamma, mu)
    cross = tandem_cross_moment(lam, gamma, mu)
    return AnalyticReport(
        "tandem-two", dict(p), aaoi_mm1_fcfs(lam, mu), lam * cross, aaoi_tandem_two(lam, gamma, mu),
        interval=correction_bounds(inputs.mean_initial_age, inputs.sd_initial_age, 1.0),
        extras={"cross_moment": cross, "covariance": tandem_covariance(lam, gamma, mu),
                "correlation": inputs.correlation},
    )


def _report_tandem_chain(p):
    rates = list(p["rates"])
    if not rates:
        raise ConfigError("tandem-chain needs at least one rate")
    bounds = tandem_chain_bounds(p["lambda"], rates[:-1], rates[-1])
    best = tandem_chain_bounds(p["lambda"], *_split_last(slowest_last(rates)))
    exact = aaoi_tandem_two(p["lambda"], rates[0], rates[1]) if len(rates) == 2 else None
    return AnalyticReport(
        "tandem-chain", dict(p), bounds.delta0, exact - bounds.delta0 if exact is not None else None, exact,
        interval=bounds.interval.shifted(-bounds.delta0),
        extras={"age_lb": bounds.interval.lower, "age_ub": bounds.interval.upper,
                "practical_ub": bounds.practical_upper,
                "heuristic": tandem_heuristic_estimate(bounds.interval),
                "slowest_last_lb": best.interval.lower, "slowest_last_ub": best.interval.upper},
    )


def _split_last(rates: List[float]) -> Tuple[List[float], float]:
    return rates[:-1], rates[-1]


def _report_hetero_tandem(p):
    lam, gamma, mu = p["lambda"], p["gamma"], p["mu"]
    d0 = hem1_aaoi(lam, gamma, mu)
    mean_y = 1 / lam + 1 / gamma
    cv_y = math.sqrt(hem1_interdeparture_second_moment(lam, gamma, mu) / mean_y ** 2 - 1)
    return AnalyticReport(
        "hetero-tandem", dict(p), d0, 1 / gamma, tandem_hetero_aaoi(lam, gamma, mu),
        interval=correction_bounds(1 / gamma, 1 / gamma, cv_y),
        extras={"sigma": hem1_sigma(lam, gamma, mu), "cv_interdeparture": cv_y},
    )


def _report_hem1(p):
    d = hem1_aaoi(p["lambda"], p["gamma"], p["mu"])
    return AnalyticReport("hem1", dict(p), d, 0.0, d,
                          extras={"sigma": hem1_sigma(p["lambda"], p["gamma"], p["mu"])})


def _report_mm11(p):
    d = aaoi_mm11_nonpreemptive(p["lambda"], p["mu"])
    return AnalyticReport("mm11", dict(p), d, 0.0, d)


def _report_retrial(p):
    lam, theta, mu = p["lambda"], p["theta"], p["mu"]
    orbit = retrial_orbit_metrics(lam, theta, mu)
    ss = retrial_steady_state(lam, theta, mu)
    return AnalyticReport(
        "retrial", dict(p), aaoi_mm11_nonpreemptive(lam + theta, mu), orbit.mean_initial_age,
        retrial_aaoi(lam, theta, mu),
        extras={"p00": ss.p00, "busy_probability": ss.busy_probability(), "l_orbit": orbit.l_orbit,
                "w_orbit": orbit.w_orbit,
                "delta0_exact": retrial_zero_age_exact(lam, theta, mu).delta0},
    )


MODELS: Dict[str, Tuple[Tuple[str, ...], Callable[[Mapping[str, Any]], AnalyticReport]]] = {
    "mm1": (("lambda", "mu"), _report_mm1),
    "fixed-delay": (("lambda", "mu", "delay"), _report_fixed_delay),
    "zero-wait": (("alpha", "mu"), _report_zero_wait),
    "tandem-two": (("lambda", "gamma", "mu"), _report_tandem_two),
    "tandem-chain": (("lambda", "rates"), _report_tandem_chain),
    "hetero-tandem": (("lambda", "gamma", "mu"), _report_hetero_tandem),
    "hem1": (("lambda", "gamma", "mu"), _report_hem1),
    "mm11": (("lambda", "mu"), _report_mm11),
    "retrial": (("lambda", "theta", "mu"), _report_retrial),
}


class UnknownModelError(ConfigError):
    pass


def analytic_report(model: str, params: Mapping[str, Any]) -> AnalyticReport:
    if model not in MODELS:
        raise UnknownModelError(f"Unknown model '{model}'. Known models: {', '.join(MODELS)}")
    required, build = MODELS[model]
    missing = [k for k in required if params.get(k) is None and not (model == "fixed-delay" and k == "delay")]
    if missing:
        raise ConfigError(f"model {model} needs parameters: {', '.join(missing)}")
    report = build(params)
    logger.debug(f"analytic {model} {dict(params)} -> delta={report.delta}")
    return report

