"""Monte Carlo estimates of the learning probability and the acceptance decision.

Every gate that needs a learning probability uses a conservative value: the
one-sided Clopper-Pearson lower bound for simulated evidence, or the
union-bound guarantee for the analytic route.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .bounds import HaltingDesign, PrlBaseline, p_prl
from .budget import BudgetInputs, BudgetPlan, two_phase_lower_bound
from .channels import ChannelSpec
from .errors import DomainError, InsufficientSiftedSamplesError
from .learner import HypothesisClass, InputDistribution, RunRecord, run_protocol

DEFAULT_CONF = 0.95
_BISECTION_STEPS = 200


def log_binom_upper_tail(k: int, n: int, p: float) -> float:
    """``ln P[X >= k]`` for ``X ~ Binomial(n, p)``."""
    if k <= 0:
        return 0.0
    if k > n or p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return 0.0
    j = np.arange(k, n + 1)
    terms = gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1) + j * math.log(p) + (n - j) * math.log1p(-p)
    return float(logsumexp(terms))


def clopper_pearson_lower(k: int, n: int, conf: float = DEFAULT_CONF) -> float:
    """One-sided lower confidence bound on a binomial success probability.

    Largest ``p`` whose upper tail ``P[X >= k]`` is at most ``1 - conf``.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be an integer >= 1, got {n!r}")
    if int(k) != k or not (0 <= k <= n):
        raise DomainError(f"k must be an integer in [0, n], got {k!r}")
    if not (0.0 < conf < 1.0):
        raise DomainError(f"conf must lie in (0, 1), got {conf!r}")
    if k == 0:
        return 0.0
    if k == n:
        return (1.0 - conf) ** (1.0 / n)
    target = math.log1p(-conf)
    lo, hi = 0.0, k / n
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if log_binom_upper_tail(k, n, mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class MonteCarloSummary:
    """Success count over independent replicas.

    ``aborted`` replicas ran short of sifted samples; they are counted as
    failures, never dropped.
    """

    replicas: int
    successes: int
    point_estimate: float
    lower_bound: float
    conf: float
    aborted: int = 0

    @classmethod
    def from_counts(cls, successes: int, replicas: int, conf: float = DEFAULT_CONF, aborted: int = 0) -> "MonteCarloSummary":
        if not (0 <= successes <= replicas):
            raise DomainError(f"need 0 <= successes <= replicas, got {successes}/{replicas}")
        return cls(replicas, successes, successes / replicas, clopper_pearson_lower(successes, replicas, conf), conf, aborted)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Scenario:
    cls_: HypothesisClass
    dist: InputDistribution
    channel: ChannelSpec
    plan: BudgetPlan
    design: HaltingDesign


def _run_range(scenario: Scenario, seed: int, start: int, stop: int) -> list[RunRecord | None]:
    out = []
    for i in range(start, stop):
        try:
            out.append(run_protocol(scenario.cls_, scenario.dist, scenario.channel, scenario.plan, scenario.design, [seed, i]))
        except InsufficientSiftedSamplesError:
            out.append(None)
    return out


def run_replicas(scenario: Scenario, replicas: int, rng_seed: int = 0, workers: int = 1) -> list[RunRecord | None]:
    """Replica ``i`` runs on its own generator seeded with ``[rng_seed, i]``.

    Results do not depend on ``workers``. ``None`` marks a replica aborted for
    lack of sifted samples.
    """
    if replicas < 1:
        raise DomainError(f"replicas must be >= 1, got {replicas!r}")
    if workers <= 1:
        return _run_range(scenario, rng_seed, 0, replicas)
    edges = np.linspace(0, replicas, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_range, [scenario] * workers, [rng_seed] * workers, edges[:-1].tolist(), edges[1:].tolist())
        return [r for part in parts for r in part]


def estimate_pl(
    scenario: Scenario,
    replicas: int,
    conf: float = DEFAULT_CONF,
    rng_seed: int = 0,
    workers: int = 1,
) -> MonteCarloSummary:
    runs = run_replicas(scenario, replicas, rng_seed, workers)
    wins = sum(1 for r in runs if r is not None and r.success)
    aborted = sum(1 for r in runs if r is None)
    return MonteCarloSummary.from_counts(wins, replicas, conf, aborted)


class ReliabilitySource(str, enum.Enum):
    EMPIRICAL = "empirical"
    ANALYTIC = "analytic"


@dataclass(frozen=True)
class DecisionReport:
    gate_admissibility: bool
    gate_integrity: bool
    gate_reliability: bool
    gate_baseline: bool
    accepted: bool
    measured_eta: float
    evidence: MonteCarloSummary | None
    reliability_source: ReliabilitySource
    p_l: float
    p_prl: float
    m_total: int
    m_h: int
    m_h_min: int
    eta_c: float
    epsilon_star: float
    delta_star: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reliability_source"] = self.reliability_source.value
        return d


def _report(design, plan, measured_eta, p_l, source, evidence, baseline) -> DecisionReport:
    if not (0.0 <= measured_eta <= 1.0) or math.isnan(measured_eta):
        raise DomainError(f"measured_eta must lie in [0, 1], got {measured_eta!r}")
    t = design.target
    prl = p_prl(plan.m_total, baseline)
    gates = (
        measured_eta <= design.eta_c,
        design.has_integrity(),
        p_l >= 1.0 - t.delta_star,
        p_l > prl,
    )
    return DecisionReport(
        *gates,
        accepted=all(gates),
        measured_eta=measured_eta,
        evidence=evidence,
        reliability_source=source,
        p_l=p_l,
        p_prl=prl,
        m_total=plan.m_total,
        m_h=design.m_h,
        m_h_min=design.min_memory(),
        eta_c=design.eta_c,
        epsilon_star=t.epsilon_star,
        delta_star=t.delta_star,
    )


def decide(
    design: HaltingDesign,
    plan: BudgetPlan,
    measured_eta: float,
    summary: MonteCarloSummary,
    baseline: PrlBaseline,
) -> DecisionReport:
    """Four-gate verdict backed by simulated evidence (its lower confidence bound)."""
    return _report(design, plan, measured_eta, summary.lower_bound, ReliabilitySource.EMPIRICAL, summary, baseline)


def decide_analytic(
    inputs: BudgetInputs,
    plan: BudgetPlan,
    measured_eta: float,
    baseline: PrlBaseline,
) -> DecisionReport:
    """Four-gate verdict backed by the union-bound guarantee at the measured noise."""
    if measured_eta < 0.5:
        p_l = two_phase_lower_bound(inputs, measured_eta, plan.m_train, plan.m_cert)
    else:
        p_l = 0.0
    return _report(inputs.design, plan, measured_eta, p_l, ReliabilitySource.ANALYTIC, None, baseline)


class Verdict(str, enum.Enum):
    REJECT_PATH = "REJECT_PATH"
    NO_EVIDENCE = "NO_EVIDENCE"


def reject_on_no_halt(design: HaltingDesign, plan: BudgetPlan, run: RunRecord) -> Verdict:
    """A run that never halts within a sufficient budget rejects ``eta <= eta_c`` at level delta*.

    The caller is responsible for ``plan`` meeting the budget bound for ``design``.
    """
    if run.trials_used_cert > plan.m_cert:
        raise DomainError("run used more certification trials than the plan allows")
    return Verdict.NO_EVIDENCE if run.halted else Verdict.REJECT_PATH
