"""Closed-form queueing models used to check the simulation.

Two views of the system:

* finite-source (machine repair) queue with one server per person: the
  population is the source, "in service" means sick;
* Erlang loss system for the hospital alone, fed by the hospital share of
  the effective sickness rate.

Sums run in log space: ``C(1582, n) * rho**n`` spans hundreds of orders of
magnitude and a naive evaluation overflows.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "ServiceRateInterval",
    "MachineRepairResult",
    "ErlangLossResult",
    "Comparison",
    "ValidationReport",
    "DEFAULT_TOLERANCES",
    "service_rate_interval",
    "machine_repair",
    "hospital_arrival_rate",
    "erlang_loss",
    "analytic_oracle",
    "validate",
]


@dataclass(frozen=True)
class ServiceRateInterval:
    mu_low: float
    mu_high: float


@dataclass(frozen=True)
class MachineRepairResult:
    population: int
    lam: float
    mu: float
    p0: float
    log_p0: float
    L: float
    lambda_e: float
    W: float
    probabilities: np.ndarray = field(repr=False, compare=False)

    def to_dict(self):
        d = asdict(self)
        d.pop("probabilities")
        return d


@dataclass(frozen=True)
class ErlangLossResult:
    lambda_h: float
    mu1: float
    beds: int
    offered_load: float
    p0h: float
    blocking: float
    log_blocking: float
    Lh: float
    Lh_carried: float
    probabilities: np.ndarray = field(repr=False, compare=False)

    def to_dict(self):
        d = asdict(self)
        d.pop("probabilities")
        return d


def service_rate_interval(p: float, s1: float, s2: float, r_mean: float) -> ServiceRateInterval:
    """Mean healing rate when no one (high) or everyone (low) targeting the
    hospital is turned away; ``s1``/``s2`` are mean hospital/home stays."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if s1 <= 0 or s2 <= 0:
        raise ValueError("mean stays must be positive")
    if r_mean < 1:
        raise ValueError("r_mean must be >= 1")
    high = 1.0 / (p * s1 + (1 - p) * s2)
    low = 1.0 / (p * s1 * r_mean + (1 - p) * s2)
    return ServiceRateInterval(mu_low=low, mu_high=high)


def machine_repair(population: int, lam: float, mu: float) -> MachineRepairResult:
    """Finite-source queue with as many servers as sources.

    P_n = C(N, n) (lam/mu)^n P_0, evaluated with log-gamma binomials and
    log-sum-exp normalization.
    """
    if population <= 0:
        raise ValueError("population must be positive")
    if not (lam > 0 and mu > 0):
        raise ValueError("rates must be positive")
    n = np.arange(population + 1, dtype=np.float64)
    log_terms = (gammaln(population + 1) - gammaln(n + 1) - gammaln(population - n + 1)
                 + n * math.log(lam / mu))
    log_norm = logsumexp(log_terms)
    probs = np.exp(log_terms - log_norm)
    L = float(np.dot(n, probs))
    lambda_e = lam * (population - L)
    return MachineRepairResult(
        population=population,
        lam=lam,
        mu=mu,
        p0=math.exp(-log_norm),
        log_p0=float(-log_norm),
        L=L,
        lambda_e=lambda_e,
        W=L / lambda_e,
        probabilities=probs,
    )


def hospital_arrival_rate(lambda_e: float, p: float) -> float:
    if lambda_e < 0:
        raise ValueError("lambda_e must be non-negative")
    return lambda_e * p


def erlang_loss(lambda_h: float, mu1: float, beds: int) -> ErlangLossResult:
    """M/M/K/K hospital.

    ``Lh`` is lambda_h / mu1 (Little's law with every patient admitted);
    ``Lh_carried`` discounts it by the blocking probability.
    """
    if lambda_h < 0:
        raise ValueError("lambda_h must be non-negative")
    if mu1 <= 0:
        raise ValueError("mu1 must be positive")
    if beds < 0:
        raise ValueError("beds must be non-negative")
    a = lambda_h / mu1
    k = np.arange(beds + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_a = math.log(a) if a > 0 else -math.inf
        log_terms = np.where(k == 0, 0.0, k * log_a) - gammaln(k + 1)
    log_norm = logsumexp(log_terms)
    probs = np.exp(log_terms - log_norm)
    log_blocking = float(log_terms[-1] - log_norm)
    blocking = math.exp(log_blocking)
    return ErlangLossResult(
        lambda_h=lambda_h,
        mu1=mu1,
        beds=beds,
        offered_load=a,
        p0h=math.exp(-log_norm),
        blocking=blocking,
        log_blocking=log_blocking,
        Lh=a,
        Lh_carried=a * (1.0 - blocking),
        probabilities=probs,
    )


@dataclass(frozen=True)
class AnalyticResult:
    interval: ServiceRateInterval
    mu: float
    machine_repair: MachineRepairResult
    machine_repair_low: MachineRepairResult
    lambda_h: float
    erlang: ErlangLossResult

    def to_dict(self):
        return {
            "mu_low": self.interval.mu_low,
            "mu_high": self.interval.mu_high,
            "mu": self.mu,
            "machine_repair": self.machine_repair.to_dict(),
            "machine_repair_mu_low": self.machine_repair_low.to_dict(),
            "lambda_h": self.lambda_h,
            "erlang_loss": self.erlang.to_dict(),
        }


def analytic_oracle(params, mu: float | None = None, lambda_h: float | None = None) -> AnalyticResult:
    """Everything the simulation is compared against, for ``params``.

    ``mu`` defaults to the no-rejection end of the interval; ``lambda_h``
    defaults to the hospital share of that model's effective arrival rate.
    """
    interval = service_rate_interval(
        params.hospital_probability, 1 / params.mu1, 1 / params.mu2,
        params.mean_rejection_factor)
    mu = interval.mu_high if mu is None else mu
    mr = machine_repair(params.population, params.sickness_rate, mu)
    mr_low = machine_repair(params.population, params.sickness_rate, interval.mu_low)
    if lambda_h is None:
        lambda_h = hospital_arrival_rate(mr.lambda_e, params.hospital_probability)
    el = erlang_loss(lambda_h, params.mu1, params.bed_count)
    return AnalyticResult(interval, mu, mr, mr_low, lambda_h, el)


# rare-event estimate for the empty-hospital probability gets a wide band
DEFAULT_TOLERANCES = {
    "p_hospital_empty": 0.60,
    "avg_beds": 0.05,
    "avg_sick": 0.05,
    "avg_sickness_time": 0.05,
    "avg_proportion_sick": 0.05,
}


@dataclass(frozen=True)
class Comparison:
    name: str
    simulated: float
    analytic: float
    abs_deviation: float
    rel_deviation: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class ValidationReport:
    comparisons: list[Comparison]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def __getitem__(self, name) -> Comparison:
        for c in self.comparisons:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"verdict": self.verdict, "comparisons": [asdict(c) for c in self.comparisons]}


def compare(name, simulated, analytic, rel_tol) -> Comparison:
    dev = abs(simulated - analytic)
    rel = dev / abs(analytic) if analytic else (0.0 if dev == 0 else math.inf)
    return Comparison(name, float(simulated), float(analytic), dev, rel, rel_tol, rel <= rel_tol)


def validate(sim, mr: MachineRepairResult, el: ErlangLossResult,
             tolerances: dict | None = None) -> ValidationReport:
    """Compare simulated responses with the queueing models (relative tolerances)."""
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    pairs = [
        ("p_hospital_empty", sim.p_hospital_empty, el.p0h),
        ("avg_beds", sim.avg_beds, el.Lh),
        ("avg_sick", sim.avg_sick, mr.L),
        ("avg_sickness_time", sim.avg_sickness_time, mr.W),
        ("avg_proportion_sick", sim.avg_proportion_sick, mr.L / mr.population),
    ]
    return ValidationReport([compare(n, s, a, tol[n]) for n, s, a in pairs])
