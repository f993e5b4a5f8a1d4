"""Run-of-successes statistics for the "halt after M_H passes in a row" rule.

The exact halting probability comes from a forward recursion over the current
streak length ``k in {0, ..., M_H - 1}``: a failure sends all surviving mass to
``k = 0``, a success shifts it to ``k + 1``, and mass leaving ``k = M_H - 1``
by a success is absorbed as halted.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DomainError

# above this run length the streak-mass sum switches to math.fsum
COMPENSATED_SUM_THRESHOLD = 64
# relative downward nudge that keeps the rounded block bound a true lower bound
_BLOCK_ROUND_DOWN = 4 * 2.0**-52


def _check_q(q: float, open_interval: bool = False) -> None:
    ok = (0.0 < q < 1.0) if open_interval else (0.0 <= q <= 1.0)
    if not ok:
        rng = "(0, 1)" if open_interval else "[0, 1]"
        raise DomainError(f"q must lie in {rng}, got {q!r}")


def _check_m_h(m_h: int) -> None:
    if int(m_h) != m_h or m_h < 1:
        raise DomainError(f"m_h must be an integer >= 1, got {m_h!r}")


def run_length_mean(q: float, m_h: int) -> float:
    """Expected number of trials until ``m_h`` consecutive successes.

    The q -> 1 limit is exactly ``m_h`` but q = 1 itself is rejected along
    with q = 0, where the run never completes.
    """
    _check_q(q, open_interval=True)
    _check_m_h(m_h)
    qm = math.exp(m_h * math.log(q))
    return -math.expm1(m_h * math.log(q)) / ((1.0 - q) * qm)


def halting_prob_block(q: float, m_h: int, m_cert: int) -> float:
    """Lower bound on halting within ``m_cert`` trials from disjoint blocks.

    The result is rounded towards zero by a few ulps so that floating-point
    error cannot lift it above the exact probability.
    """
    _check_q(q)
    _check_m_h(m_h)
    if m_cert < 0:
        raise DomainError(f"m_cert must be >= 0, got {m_cert!r}")
    blocks = m_cert // m_h
    if blocks == 0:
        return 0.0
    p_block = q**m_h
    if p_block >= 1.0:
        return 1.0
    return -math.expm1(blocks * math.log1p(-p_block)) * (1.0 - _BLOCK_ROUND_DOWN)


def _mass(p: np.ndarray) -> float:
    if p.shape[0] > COMPENSATED_SUM_THRESHOLD:
        return math.fsum(p)
    return float(p.sum())


@dataclass(frozen=True)
class StreakState:
    """Distribution over the current streak after ``t`` trials.

    ``streak_probs[k]`` is the probability of being on a streak of length
    ``k`` without having halted; ``halted_mass`` is the probability of having
    halted already.
    """

    streak_probs: np.ndarray
    halted_mass: float = 0.0
    t: int = 0

    @classmethod
    def initial(cls, m_h: int) -> "StreakState":
        _check_m_h(m_h)
        p = np.zeros(m_h)
        p[0] = 1.0
        return cls(p, 0.0, 0)

    def advance(self, q: float) -> "StreakState":
        p = self.streak_probs
        nxt = np.empty_like(p)
        nxt[0] = (1.0 - q) * _mass(p)
        nxt[1:] = q * p[:-1]
        return StreakState(nxt, self.halted_mass + q * p[-1], self.t + 1)


def halting_trace(q: float, m_h: int, m_cert: int) -> np.ndarray:
    """Exact ``Q_t`` for ``t = 0 .. m_cert``; entry ``t`` is P(halted by trial t).

    Small values come from the running sum of absorbed mass; once it passes
    1/2 the complement of the surviving mass is more accurate and is used
    instead.
    """
    _check_q(q)
    _check_m_h(m_h)
    if m_cert < 0:
        raise DomainError(f"m_cert must be >= 0, got {m_cert!r}")
    p = np.zeros(m_h)
    p[0] = 1.0
    out = np.zeros(m_cert + 1)
    halted = 0.0
    fail = 1.0 - q
    for t in range(m_cert):
        absorbed = q * p[-1]
        total = _mass(p)
        # in-place shift, one vector of length m_h
        p[1:] = q * p[:-1]
        p[0] = fail * total
        halted += absorbed
        out[t + 1] = halted if halted < 0.5 else 1.0 - _mass(p)
    return out


def halting_prob_exact(q: float, m_h: int, m_cert: int) -> float:
    """Exact probability of a run of ``m_h`` successes within ``m_cert`` trials."""
    return float(halting_trace(q, m_h, m_cert)[-1])


@dataclass
class StreakTracker:
    """Live run counter for one certification attempt."""

    m_h: int
    current_run: int = 0
    trials_consumed: int = 0
    halted: bool = False

    def __post_init__(self):
        _check_m_h(self.m_h)

    def observe(self, success: bool) -> bool:
        """Record one validation outcome in place; returns ``halted``."""
        if self.halted:
            raise ContractViolation("tracker already halted; start a new one")
        self.trials_consumed += 1
        if success:
            self.current_run += 1
            if self.current_run >= self.m_h:
                self.halted = True
        else:
            self.current_run = 0
        return self.halted


def tracker_step(tracker: StreakTracker, outcome: bool) -> StreakTracker:
    """Return the tracker state after one more outcome, leaving ``tracker`` untouched."""
    nxt = copy.copy(tracker)
    nxt.observe(bool(outcome))
    return nxt
