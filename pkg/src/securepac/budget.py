"""Two-phase sample budgets: training plus run-based certification.

The failure budget ``delta*`` is split as ``alpha * delta*`` for training and
``(1 - alpha) * delta*`` for certification. Each phase gets the smallest
integer budget meeting its share; the optimal split minimises the continuous
(un-ceiled) total and is ceiled afterwards.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .bounds import ClassCapacity, HaltingDesign, delta_min, gamma_rate, q_obs
from .errors import DegenerateInputError, DomainError, InfeasibleDesignError
from .halting import halting_prob_exact


class Surrogate(str, enum.Enum):
    """Training-phase certificate: finite-class union bound or bare exponential rate."""

    FINITE_CLASS = "FINITE_CLASS"
    EXP_RATE = "EXP_RATE"


@dataclass(frozen=True)
class BudgetInputs:
    design: HaltingDesign
    cap: ClassCapacity
    surrogate: Surrogate = Surrogate.FINITE_CLASS
    kappa: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.kappa <= 1.0):
            raise DomainError(f"kappa must lie in (0, 1], got {self.kappa!r}")
        object.__setattr__(self, "surrogate", Surrogate(self.surrogate))

    @property
    def q0(self) -> float:
        """Worst admissible single-check pass probability."""
        return q_obs(self.design.target.epsilon_star, self.design.eta_c)

    @property
    def block_pass(self) -> float:
        return math.exp(self.design.m_h * math.log(self.q0))

    @property
    def s0(self) -> float:
        """Per-block decay rate ``-ln(1 - q0^M_H)``."""
        if self.block_pass >= 1.0:
            raise DegenerateInputError("q0 = 1: every block passes and the decay rate is infinite")
        return -math.log1p(-self.block_pass)

    @property
    def gamma_star(self) -> float:
        return gamma_rate(self.design.target.epsilon_star, self.design.eta_c)

    @property
    def coef_a(self) -> float:
        """Coefficient of ``ln(1/alpha)`` in the training budget."""
        g = self.gamma_star
        if g <= 0.0:
            raise DegenerateInputError("epsilon_star = 0 gives no training rate")
        # 2 / (eps^2 (1 - 2 eta)^2) and 1 / gamma* coincide; both surrogates share it
        return 1.0 / g

    @property
    def coef_b(self) -> float:
        """Coefficient of ``ln(1/(1 - alpha))`` in the certification budget."""
        return self.design.m_h / self.s0

    def train_log_numerator(self) -> float:
        """``ln(2|H|)`` for the finite-class certificate, 0 for the exponential rate."""
        if self.surrogate is Surrogate.FINITE_CLASS:
            return math.log(2.0 * self.cap.h_size)
        return 0.0


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    margin: float


@dataclass(frozen=True)
class BudgetPlan:
    """Concrete sample allocation for one split ``alpha``.

    ``m_lb_continuous`` is the un-ceiled total at ``alpha``; at the optimal
    split it equals the closed-form optimum. Hand-fixed plans carry ``None``
    for both.
    """

    alpha: float | None
    m_train: int
    n_cert_blocks: int
    m_cert: int
    m_total: int
    kappa: float
    m_raw: int
    q0: float
    s0: float
    coef_a: float
    coef_b: float
    m_lb_continuous: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def feasibility(inputs: BudgetInputs) -> Feasibility:
    """Whether one block's pass probability under the worst admissible noise is at most delta*."""
    delta = inputs.design.target.delta_star
    return Feasibility(inputs.block_pass <= delta, delta - inputs.block_pass)


def _require_feasible(inputs: BudgetInputs) -> None:
    f = feasibility(inputs)
    if not f.feasible:
        raise InfeasibleDesignError(
            f"q0^M_H = {inputs.block_pass:.6g} exceeds delta* = {inputs.design.target.delta_star:g} "
            f"(margin {f.margin:.6g}); increase m_h to at least {inputs.design.min_memory()}"
        )


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")


def _train_continuous(inputs: BudgetInputs, alpha: float) -> float:
    delta = inputs.design.target.delta_star
    return inputs.coef_a * (inputs.train_log_numerator() - math.log(alpha * delta))


def _cert_blocks_continuous(inputs: BudgetInputs, alpha: float) -> float:
    delta = inputs.design.target.delta_star
    return -math.log((1.0 - alpha) * delta) / inputs.s0


def m_lb_continuous(inputs: BudgetInputs, alpha: float) -> float:
    """Un-ceiled total budget at split ``alpha``."""
    _check_alpha(alpha)
    return _train_continuous(inputs, alpha) + inputs.design.m_h * _cert_blocks_continuous(inputs, alpha)


def budget_at(inputs: BudgetInputs, alpha: float) -> BudgetPlan:
    _require_feasible(inputs)
    _check_alpha(alpha)
    m_train = max(0, math.ceil(_train_continuous(inputs, alpha)))
    n_blocks = max(0, math.ceil(_cert_blocks_continuous(inputs, alpha)))
    m_cert = n_blocks * inputs.design.m_h
    m_total = m_train + m_cert
    return BudgetPlan(
        alpha=alpha,
        m_train=m_train,
        n_cert_blocks=n_blocks,
        m_cert=m_cert,
        m_total=m_total,
        kappa=inputs.kappa,
        m_raw=raw_rescale(m_total, inputs.kappa),
        q0=inputs.q0,
        s0=inputs.s0,
        coef_a=inputs.coef_a,
        coef_b=inputs.coef_b,
        m_lb_continuous=m_lb_continuous(inputs, alpha),
    )


def fixed_plan(inputs: BudgetInputs, m_train: int, n_cert_blocks: int) -> BudgetPlan:
    """Plan with explicit budgets, e.g. to probe the protocol below the bound."""
    if m_train < 0 or n_cert_blocks < 0:
        raise DomainError("budgets must be non-negative")
    m_cert = n_cert_blocks * inputs.design.m_h
    return BudgetPlan(
        alpha=None,
        m_train=m_train,
        n_cert_blocks=n_cert_blocks,
        m_cert=m_cert,
        m_total=m_train + m_cert,
        kappa=inputs.kappa,
        m_raw=raw_rescale(m_train + m_cert, inputs.kappa),
        q0=inputs.q0,
        s0=inputs.s0,
        coef_a=inputs.coef_a,
        coef_b=inputs.coef_b,
        m_lb_continuous=None,
    )


def alpha_star(inputs: BudgetInputs) -> float:
    """Minimiser ``A / (A + B)`` of the continuous total."""
    _require_feasible(inputs)
    a, b = inputs.coef_a, inputs.coef_b
    return a / (a + b)


def m_lb_opt(inputs: BudgetInputs) -> float:
    """Closed-form continuous optimum of the total budget."""
    _require_feasible(inputs)
    a, b = inputs.coef_a, inputs.coef_b
    delta = inputs.design.target.delta_star
    lead = a * (inputs.train_log_numerator() - math.log(delta))
    return lead + b * math.log(1.0 / delta) + a * math.log1p(b / a) + b * math.log1p(a / b)


def budget_opt(inputs: BudgetInputs) -> BudgetPlan:
    plan = budget_at(inputs, alpha_star(inputs))
    closed = m_lb_opt(inputs)
    # ceilings add < 1 to training and < M_H to certification
    if abs(plan.m_total - closed) > inputs.design.m_h + 2:
        raise AssertionError(f"optimised total {plan.m_total} strays from closed form {closed:.3f}")
    return plan


def sweep_alpha(inputs: BudgetInputs, grid=None) -> list[BudgetPlan]:
    """Plans on an alpha grid, 0.01 .. 0.99 by default."""
    if grid is None:
        grid = np.arange(1, 100) / 100.0
    return [budget_at(inputs, float(a)) for a in grid]


def m_cert_loose(inputs: BudgetInputs, alpha: float) -> int:
    """Certification budget from ``-ln(1 - x) >= x``; never smaller than the exact-decay one."""
    _require_feasible(inputs)
    _check_alpha(alpha)
    delta = inputs.design.target.delta_star
    blocks = math.ceil(math.log(1.0 / ((1.0 - alpha) * delta)) / inputs.block_pass)
    return inputs.design.m_h * max(0, blocks)


def two_phase_lower_bound(
    inputs: BudgetInputs,
    eta_actual: float,
    m_train: int,
    m_cert: int,
    exact: bool = False,
) -> float:
    """Union-bound guarantee on the learning probability for realised noise ``eta_actual``.

    With ``exact=True`` the block bound on non-halting is replaced by the exact
    run-length recursion, which can only raise the guarantee.
    """
    if not (0.0 <= eta_actual < 0.5):
        raise DomainError(f"eta_actual must lie in [0, 1/2), got {eta_actual!r}")
    if m_train < 0 or m_cert < 0:
        raise DomainError("budgets must be non-negative")
    t = inputs.design.target
    m_h = inputs.design.m_h
    if inputs.surrogate is Surrogate.FINITE_CLASS:
        train_fail = delta_min(m_train, t.epsilon_star, eta_actual, inputs.cap, clamp=False)
    else:
        train_fail = math.exp(-gamma_rate(t.epsilon_star, eta_actual) * m_train)
    q = q_obs(t.epsilon_star, eta_actual)
    if exact:
        cert_fail = 1.0 - halting_prob_exact(q, m_h, m_cert)
    else:
        blocks = m_cert // m_h
        cert_fail = math.exp(blocks * math.log1p(-(q**m_h))) if q < 1.0 or blocks == 0 else 0.0
    return max(0.0, 1.0 - train_fail - cert_fail)


def raw_rescale(m_sifted: int, kappa: float) -> int:
    """Raw channel uses needed to expect ``m_sifted`` basis-matched samples."""
    if not (0.0 < kappa <= 1.0):
        raise DomainError(f"kappa must lie in (0, 1], got {kappa!r}")
    if m_sifted < 0:
        raise DomainError(f"m_sifted must be >= 0, got {m_sifted!r}")
    return math.ceil(m_sifted / kappa)
