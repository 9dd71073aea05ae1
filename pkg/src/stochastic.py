# Random-variate generation, exact distribution objects and conditional laws
# of exponential / hypoexponential races, each paired with a Monte Carlo hook.

import logging
import math
import os
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy import integrate, linalg, stats

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

try:
    from src.utils import DegenerateParameterError, InvalidDistributionError
except ImportError:  # Fallback for when the package is installed
    from utils import DegenerateParameterError, InvalidDistributionError

logger = logging.getLogger(__name__)

PDF_CLAMP = 1e-14
MIXTURE_WEIGHT_TOL = 1e-12

ArrayLike = Union[float, np.ndarray]
Density = Callable[[ArrayLike], ArrayLike]


def _clamp(values: ArrayLike) -> ArrayLike:
    """Zeroes values with |v| < 1e-14 left behind by signed-weight cancellation."""
    arr = np.asarray(values, dtype=float)
    out = np.where(np.abs(arr) < PDF_CLAMP, 0.0, arr)
    return float(out) if out.ndim == 0 else out


# --- Random streams ---

class RngStream:
    """
    One reproducible random stream per (seed, stream_id).

    Streams are derived with numpy's SeedSequence spawn keys, so distinct
    stream ids give independent PCG64 generators without shared state.
    A stream is single-owner mutable state: never share one between runs.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise ValueError("seed and stream_id must be nonnegative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def exponential(self, rate: float, size=None):
        return self.generator.exponential(1.0 / rate, size)

    def uniform(self, size=None):
        return self.generator.random(size)

    def integers(self, high: int, size=None):
        return self.generator.integers(0, high, size)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


# --- Distribution objects ---

class DistributionSpec(ABC):
    """Closed description of a nonnegative law with exact moments and LST."""

    @abstractmethod
    def mean(self) -> float:
        ...

    @abstractmethod
    def second_moment(self) -> float:
        ...

    def variance(self) -> float:
        return max(self.second_moment() - self.mean() ** 2, 0.0)

    def sd(self) -> float:
        return math.sqrt(self.variance())

    @abstractmethod
    def lst(self, s: float) -> float:
        """E[exp(-s Y)]."""

    @abstractmethod
    def sample(self, rng: RngStream, size: Optional[int] = None) -> ArrayLike:
        ...

    @abstractmethod
    def cdf(self, x: ArrayLike) -> ArrayLike:
        ...

    def pdf(self, x: ArrayLike) -> ArrayLike:
        raise NotImplementedError(f"{type(self).__name__} has no density")


@dataclass(frozen=True)
class PointMass(DistributionSpec):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise InvalidDistributionError(f"PointMass value must be >= 0 (got {self.value})")

    def mean(self) -> float:
        return float(self.value)

    def second_moment(self) -> float:
        return float(self.value) ** 2

    def variance(self) -> float:
        return 0.0

    def lst(self, s: float) -> float:
        return math.exp(-s * self.value)

    def sample(self, rng: RngStream, size: Optional[int] = None) -> ArrayLike:
        # Degenerate: consumes no randomness.
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))

    def cdf(self, x: ArrayLike) -> ArrayLike:
        out = (np.asarray(x, dtype=float) >= self.value).astype(float)
        return float(out) if out.ndim == 0 else out

    def pdf(self, x: ArrayLike) -> ArrayLike:
        # Atom only; contributes no absolutely continuous part.
        out = np.zeros_like(np.asarray(x, dtype=float))
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Exponential(DistributionSpec):
    rate: float

    def __post_init__(self):
        if not math.isfinite(self.rate) or self.rate <= 0:
            raise InvalidDistributionError(f"Exponential rate must be > 0 (got {self.rate})")

    def mean(self) -> float:
        return 1.0 / self.rate

    def second_moment(self) -> float:
        return 2.0 / self.rate ** 2

    def variance(self) -> float:
        return 1.0 / self.rate ** 2

    def lst(self, s: float) -> float:
        return self.rate / (self.rate + s)

    def sample(self, rng: RngStream, size: Optional[int] = None) -> ArrayLike:
        return rng.exponential(self.rate, size)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        out = np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)
        return float(out) if out.ndim == 0 else out

    def pdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Erlang(DistributionSpec):
    shape: int
    rate: float

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise InvalidDistributionError(f"Erlang shape must be a positive integer (got {self.shape})")
        if not math.isfinite(self.rate) or self.rate <= 0:
            raise InvalidDistributionError(f"Erlang rate must be > 0 (got {self.rate})")

    def mean(self) -> float:
        return self.shape / self.rate

    def second_moment(self) -> float:
        return self.shape * (self.shape + 1) / self.rate ** 2

    def variance(self) -> float:
        return self.shape / self.rate ** 2

    def lst(self, s: float) -> float:
        return (self.rate / (self.rate + s)) ** self.shape

    def sample(self, rng: RngStream, size: Optional[int] = None) -> ArrayLike:
        return rng.generator.gamma(self.shape, 1.0 / self.rate, size)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        return stats.gamma.cdf(x, a=self.shape, scale=1.0 / self.rate)

    def pdf(self, x: ArrayLike) -> ArrayLike:
        return stats.gamma.pdf(x, a=self.shape, scale=1.0 / self.rate)


@dataclass(frozen=True)
class Hypoexponential(DistributionSpec):
    """
    Sum of independent exponential stages, in the rate order given.
    Constructing one with a single rate, or with every stage at the same rate,
    returns the canonical Exponential or Erlang law instead.
    """
    rates: Tuple[float, ...]

    def __new__(cls, rates=()):
        stages = tuple(rates)
        if stages and len(set(stages)) == 1:
            rate = float(stages[0])
            if math.isfinite(rate) and rate > 0:
                return Exponential(rate) if len(stages) == 1 else Erlang(len(stages), rate)
        return super().__new__(cls)

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if not self.rates:
            raise InvalidDistributionError("Hypoexponential needs at least one rate")
        if any(not math.isfinite(r) or r <= 0 for r in self.rates):
            raise InvalidDistributionError(f"Hypoexponential rates must be > 0 (got {self.rates})")

    @property
    def distinct(self) -> bool:
        return len(set(self.rates)) == len(self.rates)

    def mean(self) -> float:
        return sum(1.0 / r for r in self.rates)

    def variance(self) -> float:
        return sum(1.0 / r ** 2 for r in self.rates)

    def second_moment(self) -> float:
        return self.variance() + self.mean() ** 2

    def lst(self, s: float) -> float:
        return math.prod(r / (r + s) for r in self.rates)

    def sample(self, rng: RngStream, size: Optional[int] = None) -> ArrayLike:
        # Exact: sum of independent stage times.
        total = rng.exponential(self.rates[0], size)
        for r in self.rates[1:]:
            total = total + rng.exponential(r, size)
        return total

    def _stage_coefficients(self) -> np.ndarray:
        rates = np.array(self.rates)
        coeffs = np.empty(len(rates))
        for i, ri in enumerate(rates):
            others = np.delete(rates, i)
            coeffs[i] = np.prod(others / (others - ri))
        return coeffs

    def _phase_type_survival(self, x: np.ndarray) -> np.ndarray:
        k = len(self.rates)
        generator = np.diag(-np.array(self.rates))
        generator[np.arange(k - 1), np.arange(1, k)] = self.rates[:-1]
        start = np.zeros(k)
        start[0] = 1.0
        return np.array([start @ linalg.expm(generator * xi) @ np.ones(k) for xi in x.ravel()]).reshape(x.shape)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        if self.distinct:
            coeffs = self._stage_coefficients()
            survival = sum(c * np.exp(-r * xp) for c, r in zip(coeffs, self.rates))
        else:
            survival = self._phase_type_survival(xp)
        out = np.where(x > 0, np.clip(1.0 - survival, 0.0, 1.0), 0.0)
        return float(out) if out.ndim == 0 else out

    def pdf(self, x: ArrayLike) -> ArrayLike:
        if not self.distinct:
            raise DegenerateParameterError("pdf needs pairwise distinct rates")
        x = np.asarray(x, dtype=float)
        xp = np.maximum(x, 0.0)
        coeffs = self._stage_coefficients()
        dens = sum(c * r * np.exp(-r * xp) for c, r in zip(coeffs, self.rates))
        return _clamp(np.where(x >= 0, dens, 0.0))


@dataclass(frozen=True)
class Mixture(DistributionSpec):
    weights: Tuple[float, ...]
    components: Tuple[DistributionSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.weights) != len(self.components) or not self.weights:
            raise InvalidDistributionError("Mixture needs one weight per component")
        if any(w < 0 for w in self.weights):
            raise InvalidDistributionError(f"Mixture weights must be nonnegative (got {self.weights})")
        if abs(sum(self.weights) - 1.0) > MIXTURE_WEIGHT_TOL:
            raise InvalidDistributionError(f"Mixture weights must sum to 1 (got {sum(self.weights)!r})")

    def mean(self) -> float:
        return sum(w * c.mean() for w, c in zip(self.weights, self.components))

    def second_moment(self) -> float:
        return sum(w * c.second_moment() for w, c in zip(self.weights, self.components))

    def lst(self, s: float) -> float:
        if s == 0:
            return 1.0
        return sum(w * c.lst(s) for w, c in zip(self.weights, self.components))

    def sample(self, rng: RngStream, size: Optional[int] = None) -> ArrayLike:
        if size is None:
            idx = rng.generator.choice(len(self.weights), p=self.weights)
            return float(self.components[idx].sample(rng))
        idx = rng.generator.choice(len(self.weights), size=size, p=self.weights)
        out = np.empty(size)
        for k, component in enumerate(self.components):
            mask = idx == k
            count = int(mask.sum())
            if count:
                out[mask] = component.sample(rng, count)
        return out

    def cdf(self, x: ArrayLike) -> ArrayLike:
        return sum(w * np.asarray(c.cdf(x)) for w, c in zip(self.weights, self.components))

    def pdf(self, x: ArrayLike) -> ArrayLike:
        # Atoms (PointMass components) carry no density.
        return _clamp(sum(w * np.asarray(c.pdf(x)) for w, c in zip(self.weights, self.components)))


def hypoexponential(*rates: float) -> DistributionSpec:
    """Builds a hypoexponential law, canonicalized to Erlang when all stages coincide."""
    if len(rates) == 1 and isinstance(rates[0], (list, tuple)):
        rates = tuple(rates[0])
    return Hypoexponential(tuple(rates))


def canonicalize(dist: DistributionSpec) -> DistributionSpec:
    if isinstance(dist, Hypoexponential):
        return Hypoexponential(dist.rates)
    return dist


# --- Operations ---

def sample(dist: DistributionSpec, rng: RngStream, size: Optional[int] = None) -> ArrayLike:
    return dist.sample(rng, size)


def lst(dist: DistributionSpec, s: float) -> float:
    if s < 0:
        raise ValueError(f"LST argument must be >= 0 (got {s})")
    if s == 0:
        return 1.0
    return dist.lst(s)


def prob_exceeds_exp(lam: float, y: DistributionSpec) -> float:
    """P(X > Y) for X ~ Exp(lam) independent of Y, which is the LST of Y at lam."""
    if lam <= 0:
        raise ValueError(f"lambda must be > 0 (got {lam})")
    return lst(y, lam)


@dataclass(frozen=True)
class RaceConditionals:
    """Laws of two exponentials X1 ~ Exp(l1), X2 ~ Exp(l2) given X1 wins (X2 > X1)."""
    p_win: float
    loser_given_win: DistributionSpec
    gap_given_win: DistributionSpec
    winner_value_given_win: DistributionSpec


def exp_race_conditionals(lambda1: float, lambda2: float) -> RaceConditionals:
    if lambda1 <= 0 or lambda2 <= 0:
        raise InvalidDistributionError("race rates must be > 0")
    total = lambda1 + lambda2
    return RaceConditionals(
        p_win=lambda1 / total,
        # Stages listed in rate order: first the race time, then a fresh Exp(lambda2) gap.
        loser_given_win=hypoexponential(total, lambda2),
        gap_given_win=Exponential(lambda2),
        winner_value_given_win=Exponential(total),
    )


@dataclass(frozen=True)
class HypoexpRaceConditionals:
    """
    X ~ Exp(lam) against Y ~ Hypoexp(mu1, mu2) on the event Y > X, with Z = Y - X.
    `w` is a signed mixing weight and may exceed 1.
    """
    p_exceed: float
    w: float
    overshoot_pdf: Density
    x_given_pdf: Density
    joint_pdf: Callable[[ArrayLike, ArrayLike], ArrayLike]
    overshoot_cdf: Density
    x_given_cdf: Density


def hypoexp_vs_exp_conditionals(lam: float, mu1: float, mu2: float) -> HypoexpRaceConditionals:
    if lam <= 0 or mu1 <= 0 or mu2 <= 0:
        raise InvalidDistributionError("rates must be > 0")
    if mu1 == mu2:
        raise DegenerateParameterError("mu1 == mu2: the conditional laws need distinct hypoexponential rates")

    p_exceed = lam * (lam + mu1 + mu2) / ((lam + mu1) * (lam + mu2))
    w = mu2 * (lam + mu2) / ((mu2 - mu1) * (lam + mu1 + mu2))
    a1, a2 = lam + mu1, lam + mu2

    def overshoot_pdf(z):
        z = np.asarray(z, dtype=float)
        v = w * mu1 * np.exp(-mu1 * z) + (1 - w) * mu2 * np.exp(-mu2 * z)
        return _clamp(np.where(z >= 0, v, 0.0))

    def overshoot_cdf(z):
        z = np.asarray(z, dtype=float)
        v = 1.0 - w * np.exp(-mu1 * z) - (1 - w) * np.exp(-mu2 * z)
        return _clamp(np.where(z > 0, v, 0.0))

    def x_given_pdf(x):
        x = np.asarray(x, dtype=float)
        v = w * a1 * np.exp(-a1 * x) + (1 - w) * a2 * np.exp(-a2 * x)
        return _clamp(np.where(x >= 0, v, 0.0))

    def x_given_cdf(x):
        x = np.asarray(x, dtype=float)
        v = 1.0 - w * np.exp(-a1 * x) - (1 - w) * np.exp(-a2 * x)
        return _clamp(np.where(x > 0, v, 0.0))

    def joint_pdf(x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        v = (w * a1 * mu1 * np.exp(-a1 * x - mu1 * z)
             + (1 - w) * a2 * mu2 * np.exp(-a2 * x - mu2 * z))
        return _clamp(np.where((x >= 0) & (z >= 0), v, 0.0))

    return HypoexpRaceConditionals(
        p_exceed=p_exceed,
        w=w,
        overshoot_pdf=overshoot_pdf,
        x_given_pdf=x_given_pdf,
        joint_pdf=joint_pdf,
        overshoot_cdf=overshoot_cdf,
        x_given_cdf=x_given_cdf,
    )


def density_mass(pdf: Density, upper: float = np.inf) -> float:
    """Adaptive-quadrature mass of a univariate density on [0, upper]."""
    value, err = integrate.quad(lambda t: float(pdf(t)), 0.0, upper, epsabs=1e-13, epsrel=1e-12, limit=200)
    logger.debug(f"density mass {value!r} (quad error estimate {err:.2e})")
    return value


def joint_density_mass(joint: Callable[[ArrayLike, ArrayLike], ArrayLike]) -> float:
    value, _ = integrate.dblquad(lambda z, x: float(joint(x, z)), 0.0, np.inf, 0.0, np.inf,
                                 epsabs=1e-12, epsrel=1e-11)
    return value


# --- Monte Carlo oracle hooks ---

@dataclass(frozen=True)
class MonteCarloMoments:
    n: int
    mean: float
    variance: float
    se_mean: float
    se_variance: float


def monte_carlo_moments(dist: DistributionSpec, rng: RngStream, n: int = 10**6) -> MonteCarloMoments:
    draws = np.asarray(dist.sample(rng, n), dtype=float)
    mean = float(draws.mean())
    centered = draws - mean
    variance = float(np.mean(centered ** 2))
    m4 = float(np.mean(centered ** 4))
    return MonteCarloMoments(
        n=n,
        mean=mean,
        variance=variance,
        se_mean=math.sqrt(variance / n),
        se_variance=math.sqrt(max(m4 - variance ** 2, 0.0) / n),
    )


def moments_agree(dist: DistributionSpec, mc: MonteCarloMoments, z: float = 4.0) -> bool:
    """True when the analytic mean and variance sit within z standard errors of the sample."""
    mean_ok = abs(mc.mean - dist.mean()) <= z * mc.se_mean + 1e-15
    var_ok = abs(mc.variance - dist.variance()) <= z * mc.se_variance + 1e-15
    return mean_ok and var_ok


def empirical_exceedance(lam: float, y: DistributionSpec, rng: RngStream, n: int = 10**6) -> float:
    """Frequency of {Exp(lam) > Y} over n paired draws."""
    x = rng.exponential(lam, n)
    yv = np.asarray(y.sample(rng, n), dtype=float)
    return float(np.mean(x > yv))


def _conditional_draws(draw: Callable[[int], Tuple[np.ndarray, ...]], keep: Callable[..., np.ndarray],
                       n: int) -> Tuple[Tuple[np.ndarray, ...], float]:
    """Draws batches until n samples satisfy `keep`; returns the kept columns and the hit rate."""
    kept = []
    hits, trials = 0, 0
    batch = max(n, 1024)
    while hits < n:
        cols = draw(batch)
        mask = keep(*cols)
        kept.append(tuple(c[mask] for c in cols))
        hits += int(mask.sum())
        trials += batch
    columns = tuple(np.concatenate([k[i] for k in kept])[:n] for i in range(len(kept[0])))
    return columns, hits / trials


def sample_race_conditionals(lambda1: float, lambda2: float, rng: RngStream,
                             n: int = 10**5) -> Dict[str, Any]:
    """Conditional samples of X1, X2 and X2 - X1 on {X2 > X1}."""
    (x1, x2), p_hat = _conditional_draws(
        lambda m: (rng.exponential(lambda1, m), rng.exponential(lambda2, m)),
        lambda a, b: b > a,
        n,
    )
    return {"winner": x1, "loser": x2, "gap": x2 - x1, "p_win": np.float64(p_hat)}


def sample_hypoexp_race_conditionals(lam: float, mu1: float, mu2: float, rng: RngStream,
                                     n: int = 10**5) -> Dict[str, Any]:
    """Conditional samples of X and Z = Y - X on {Y > X}, Y ~ Hypoexp(mu1, mu2)."""
    y_law = Hypoexponential((mu1, mu2))
    (x, y), p_hat = _conditional_draws(
        lambda m: (rng.exponential(lam, m), y_law.sample(rng, m)),
        lambda a, b: b > a,
        n,
    )
    return {"x": x, "overshoot": y - x, "p_exceed": np.float64(p_hat)}


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float
    passed: bool


def ks_check(samples: np.ndarray, cdf: Density, alpha: float = 0.01) -> KsResult:
    """One-sample Kolmogorov-Smirnov test of `samples` against `cdf`."""
    result = stats.kstest(np.asarray(samples, dtype=float), cdf)
    passed = bool(result.pvalue >= alpha)
    if not passed:
        logger.warning(f"KS check rejected at alpha={alpha}: D={result.statistic:.4g}, p={result.pvalue:.3g}")
    return KsResult(statistic=float(result.statistic), pvalue=float(result.pvalue), passed=passed)


def stream_correlation(seed: int, stream_a: int, stream_b: int, n: int = 10**5) -> float:
    """Pearson correlation between uniforms of two streams; near zero for independent streams."""
    a = RngStream(seed, stream_a).uniform(n)
    b = RngStream(seed, stream_b).uniform(n)
    return float(np.corrcoef(a, b)[0, 1])


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)

