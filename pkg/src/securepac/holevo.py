"""Binary-entropy information quantities and the Holevo admissibility threshold.

All quantities are in bits. Two variants of the gap proxy are offered:

* ``STANDARD_BB84``: ``D(eta) = 1 - 2 h(eta)``. Its root, 0.110028, is the
  familiar zero of the one-way BB84 key rate and is the default.
* ``LITERAL_EQ43``: ``D(eta) = 1 - 2 h(eta) + h(1/2 + sqrt(eta (1 - eta)))``,
  taken exactly as the formula is usually printed. It starts at ``D(0) = 2``
  and crosses zero near 0.204, so it does not reproduce the 0.11 threshold.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

BISECTION_TOL = 1e-9
BISECTION_MAX_ITER = 200


class ThresholdVariant(str, enum.Enum):
    STANDARD_BB84 = "STANDARD_BB84"
    LITERAL_EQ43 = "LITERAL_EQ43"


DEFAULT_VARIANT = ThresholdVariant.STANDARD_BB84


@dataclass(frozen=True)
class HolevoProfile:
    """Information budget of a BB84-like link at QBER ``eta``.

    Attributes:
        eta: Quantum bit-error rate in [0, 1/2).
        legit_info: Learner's mutual information, ``1 - h(eta)``.
        eve_chi: Upper bound on the eavesdropper's Holevo information.
        gap: Lower bound on the Holevo gap, ``legit_info - eve_chi``.
        admissible: Whether ``eta`` lies strictly below the variant's threshold.
    """

    eta: float
    legit_info: float
    eve_chi: float
    gap: float
    admissible: bool
    variant: ThresholdVariant = DEFAULT_VARIANT


def _check_probability(p, name: str = "p", upper_open: bool = False):
    arr = np.asarray(p, dtype=float)
    bad = ~((arr >= 0.0) & ((arr < 0.5) if upper_open else (arr <= 1.0)))
    if np.any(bad):
        bound = "[0, 1/2)" if upper_open else "[0, 1]"
        raise DomainError(f"{name} must lie in {bound}, got {p!r}")
    return arr


def binary_entropy(p):
    """Shannon entropy of a Bernoulli(p) variable in bits, with 0 log 0 = 0.

    Accepts a scalar or an array; scalars come back as ``float``.
    """
    arr = _check_probability(p)
    if arr.ndim == 0:
        x = float(arr)
        if x == 0.0 or x == 1.0:
            return 0.0
        return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)
    inner = (arr > 0.0) & (arr < 1.0)
    safe = np.where(inner, arr, 0.5)
    h = -safe * np.log2(safe) - (1.0 - safe) * np.log2(1.0 - safe)
    return np.where(inner, h, 0.0)


def _eve_chi(eta, variant: ThresholdVariant):
    h = binary_entropy(eta)
    if variant is ThresholdVariant.STANDARD_BB84:
        return h
    g = 0.5 + np.sqrt(np.asarray(eta, dtype=float) * (1.0 - np.asarray(eta, dtype=float)))
    # sqrt(eta(1-eta)) <= 1/2, so g never leaves [1/2, 1] except by rounding
    g = np.clip(g, 0.5, 1.0)
    if np.ndim(g) == 0:
        g = float(g)
    return h - binary_entropy(g)


def gap(eta, variant: ThresholdVariant = DEFAULT_VARIANT):
    """Holevo-gap proxy ``D(eta)`` for the chosen variant (scalar or array)."""
    _check_probability(eta, "eta", upper_open=True)
    return 1.0 - binary_entropy(eta) - _eve_chi(eta, ThresholdVariant(variant))


@lru_cache(maxsize=None)
def eta_c(variant: ThresholdVariant = DEFAULT_VARIANT) -> float:
    """Root of the variant's gap proxy on (0, 1/2), by bisection."""
    variant = ThresholdVariant(variant)
    lo, hi = 0.0, 0.5 - 1e-12
    # D(0) > 0 and D(1/2^-) < 0 for both variants
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if gap(mid, variant) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < BISECTION_TOL:
            break
    return 0.5 * (lo + hi)


def holevo_profile(eta: float, variant: ThresholdVariant = DEFAULT_VARIANT) -> HolevoProfile:
    variant = ThresholdVariant(variant)
    _check_probability(eta, "eta", upper_open=True)
    eta = float(eta)
    legit = 1.0 - binary_entropy(eta)
    chi = float(_eve_chi(eta, variant))
    return HolevoProfile(
        eta=eta,
        legit_info=legit,
        eve_chi=chi,
        gap=legit - chi,
        admissible=eta < eta_c(variant),
        variant=variant,
    )


def threshold_curve(variant: ThresholdVariant, grid_step: float) -> list[tuple[float, float, float, float]]:
    """Rows ``(eta, I, chi, D)`` on ``eta = 0, step, 2 step, ...`` below 1/2.

    The grid has ``floor(0.5 / grid_step)`` points.
    """
    if not (0.0 < grid_step < 0.1):
        raise DomainError(f"grid_step must lie in (0, 0.1), got {grid_step!r}")
    n = math.floor(0.5 / grid_step + 1e-9)
    while n > 0 and (n - 1) * grid_step >= 0.5:
        n -= 1
    rows = []
    for i in range(n):
        prof = holevo_profile(i * grid_step, variant)
        rows.append((prof.eta, prof.legit_info, prof.eve_chi, prof.gap))
    return rows
