"""Closed-form PAC sample bounds and run-based certification levels.

Sample counts are returned as integers via the ceiling, which keeps every
bound sufficient. Powers and exponentials are taken in the log domain since
``M_H * ln q`` easily reaches -1e3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateInputError, DomainError


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DomainError(message)


@dataclass(frozen=True)
class LearningTarget:
    """Accuracy/confidence goal: risk at most ``epsilon_star`` w.p. ``1 - delta_star``."""

    epsilon_star: float
    delta_star: float

    def __post_init__(self):
        _require(0.0 <= self.epsilon_star < 0.5, f"epsilon_star must lie in [0, 1/2), got {self.epsilon_star!r}")
        _require(0.0 < self.delta_star <= 1.0, f"delta_star must lie in (0, 1], got {self.delta_star!r}")


@dataclass(frozen=True)
class ClassCapacity:
    h_size: int

    def __post_init__(self):
        _require(int(self.h_size) == self.h_size and self.h_size >= 1, f"h_size must be a positive integer, got {self.h_size!r}")


@dataclass(frozen=True)
class HaltingDesign:
    """Learner-side commitment made before touching any data path.

    Attributes:
        target: The (epsilon*, delta*) goal.
        m_h: Run length; the learner halts after this many consecutive passes.
        eta_c: Largest label-noise rate the design must tolerate.
    """

    target: LearningTarget
    m_h: int
    eta_c: float

    def __post_init__(self):
        _require(int(self.m_h) == self.m_h and self.m_h >= 1, f"m_h must be an integer >= 1, got {self.m_h!r}")
        _require(0.0 <= self.eta_c < 0.5, f"eta_c must lie in [0, 1/2), got {self.eta_c!r}")

    def min_memory(self) -> int:
        return min_memory(self.target, self.eta_c)

    def has_integrity(self) -> bool:
        """Whether ``m_h`` meets the minimal run length for the target."""
        return self.m_h >= self.min_memory()


@dataclass(frozen=True)
class PrlBaseline:
    """Geometric success curve of primitive random learning, rate ``xi`` per sample."""

    xi: float

    def __post_init__(self):
        _require(self.xi > 0.0 and math.isfinite(self.xi), f"xi must be a positive finite rate, got {self.xi!r}")

    @classmethod
    def from_success_prob(cls, q: float) -> "PrlBaseline":
        _require(0.0 < q < 1.0, f"per-trial success must lie in (0, 1), got {q!r}")
        return cls(-math.log1p(-q))

    @classmethod
    def calibrated(cls, target: LearningTarget, eta_c: float) -> "PrlBaseline":
        """Largest rate still dominated by the exponential-rate surrogate."""
        return cls(gamma_rate(target.epsilon_star, eta_c))


def gamma_rate(epsilon: float, eta: float) -> float:
    """Exponential certification rate ``eps^2 (1 - 2 eta)^2 / 2``."""
    return 0.5 * epsilon**2 * (1.0 - 2.0 * eta) ** 2


def _ceil_count(x: float) -> int:
    return max(0, math.ceil(x))


def sample_bound_noiseless(target: LearningTarget, cap: ClassCapacity) -> int:
    """Realizable finite-class bound ``ceil(ln(|H| / delta) / eps)``."""
    if target.epsilon_star <= 0.0:
        raise DomainError("noiseless bound needs epsilon_star > 0")
    return _ceil_count(math.log(cap.h_size / target.delta_star) / target.epsilon_star)


def sample_bound_rcn(target: LearningTarget, cap: ClassCapacity, eta: float) -> int:
    """Finite-class bound under random classification noise at rate ``eta``."""
    _require(0.0 <= eta < 0.5, f"eta must lie in [0, 1/2), got {eta!r}")
    if target.epsilon_star <= 0.0:
        raise DomainError("RCN bound needs epsilon_star > 0")
    coef = 2.0 / (target.epsilon_star**2 * (1.0 - 2.0 * eta) ** 2)
    return _ceil_count(coef * math.log(2.0 * cap.h_size / target.delta_star))


def delta_min(m: int, epsilon: float, eta: float, cap: ClassCapacity, clamp: bool = True) -> float:
    """Smallest failure probability certifiable from ``m`` noisy samples.

    ``2 |H| exp(-gamma m)`` can exceed 1 for small ``m``; pass ``clamp=False``
    for the raw value.
    """
    _require(m >= 0, f"m must be >= 0, got {m!r}")
    _require(0.0 <= epsilon < 0.5, f"epsilon must lie in [0, 1/2), got {epsilon!r}")
    _require(0.0 <= eta < 0.5, f"eta must lie in [0, 1/2), got {eta!r}")
    log_val = math.log(2.0 * cap.h_size) - gamma_rate(epsilon, eta) * m
    raw = math.exp(log_val) if log_val > -745.0 else 0.0
    return min(1.0, raw) if clamp else raw


def p_bl(m: float, epsilon: float, eta: float) -> float:
    """Exponential-rate surrogate ``1 - exp(-gamma m)`` for the learning probability."""
    return -math.expm1(-gamma_rate(epsilon, eta) * m)


def p_prl(m: float, baseline: PrlBaseline) -> float:
    _require(m >= 0, f"m must be >= 0, got {m!r}")
    return -math.expm1(-baseline.xi * m)


def q_obs(epsilon: float, eta: float) -> float:
    """Probability that a hypothesis of true risk ``epsilon`` passes one noisy check."""
    _require(0.0 <= epsilon <= 0.5, f"epsilon must lie in [0, 1/2], got {epsilon!r}")
    _require(0.0 <= eta < 0.5, f"eta must lie in [0, 1/2), got {eta!r}")
    return 1.0 - eta - (1.0 - 2.0 * eta) * epsilon


def delta_cert(target: LearningTarget, eta: float, m_h: int) -> float:
    """Level of the "M_H passes in a row" test against risk >= epsilon*."""
    _require(m_h >= 1, f"m_h must be >= 1, got {m_h!r}")
    q = q_obs(target.epsilon_star, eta)
    return math.exp(m_h * math.log(q))


def min_memory(target: LearningTarget, eta_c: float) -> int:
    """Smallest run length whose certification level is at most delta*."""
    q = q_obs(target.epsilon_star, eta_c)
    if q >= 1.0:
        if target.delta_star >= 1.0:
            return 1
        raise DegenerateInputError(
            "epsilon_star = 0 and eta_c = 0 make every check pass; no finite run length certifies"
        )
    m = max(1, math.ceil(math.log(1.0 / target.delta_star) / -math.log(q)))
    # guard the ceiling against rounding in the ratio
    while delta_cert(target, eta_c, m) > target.delta_star:
        m += 1
    while m > 1 and delta_cert(target, eta_c, m - 1) <= target.delta_star:
        m -= 1
    return m
