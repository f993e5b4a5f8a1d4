"""Label channels: classical random classification noise and a BB84 link.

The BB84 model is per-use and fully vectorised. The sender picks a basis and
bit at random; with probability ``f`` an interceptor measures in a random
basis (a wrong basis yields a uniform bit) and resends; the link then flips
the bit with probability ``p``; the receiver measures in a random basis.
Only basis-matched uses are kept.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


class ChannelKind(str, enum.Enum):
    RCN = "RCN"
    BB84 = "BB84"


def _check_prob(name: str, v: float, upper_open: bool = False) -> None:
    ok = (0.0 <= v < 1.0) if upper_open else (0.0 <= v <= 1.0)
    if not ok or math.isnan(v):
        hi = ")" if upper_open else "]"
        raise DomainError(f"{name} must lie in [0, 1{hi}, got {v!r}")


@dataclass(frozen=True)
class ChannelSpec:
    kind: ChannelKind
    eta: float = 0.0
    intrinsic_flip: float = 0.0
    eavesdrop_fraction: float = 0.0
    kappa: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if not (0.0 <= self.eta < 0.5):
            raise DomainError(f"eta must lie in [0, 1/2), got {self.eta!r}")
        _check_prob("intrinsic_flip", self.intrinsic_flip)
        _check_prob("eavesdrop_fraction", self.eavesdrop_fraction)
        if not (0.0 < self.kappa <= 1.0):
            raise DomainError(f"kappa must lie in (0, 1], got {self.kappa!r}")

    @classmethod
    def rcn(cls, eta: float, seed: int = 0) -> "ChannelSpec":
        return cls(ChannelKind.RCN, eta=eta, kappa=1.0, seed=seed)

    @classmethod
    def bb84(cls, intrinsic_flip: float, eavesdrop_fraction: float, seed: int = 0) -> "ChannelSpec":
        return cls(ChannelKind.BB84, intrinsic_flip=intrinsic_flip, eavesdrop_fraction=eavesdrop_fraction, seed=seed)

    def expected_qber(self) -> float:
        """Mean label error rate on kept samples."""
        if self.kind is ChannelKind.RCN:
            return self.eta
        p, f = self.intrinsic_flip, self.eavesdrop_fraction
        return p + f * (1.0 - 2.0 * p) / 4.0


@dataclass(frozen=True)
class SiftedBatch:
    """Basis-matched output of ``raw_uses`` channel uses.

    ``kept_indices`` index the raw uses (and the input labels) that survived.
    """

    labels_sent: np.ndarray
    labels_received: np.ndarray
    raw_uses: int
    kept_indices: np.ndarray

    def __post_init__(self):
        if len(self.labels_sent) != len(self.labels_received):
            raise DomainError("sent and received label arrays differ in length")
        if len(self.labels_sent) > self.raw_uses:
            raise DomainError("more kept samples than raw uses")

    @property
    def sift_fraction(self) -> float:
        return len(self.labels_sent) / self.raw_uses if self.raw_uses else 0.0

    @property
    def qber_estimate(self) -> float:
        """Hamming error rate over the whole batch; NaN when nothing was kept."""
        n = len(self.labels_sent)
        if n == 0:
            return math.nan
        return np.count_nonzero(self.labels_sent != self.labels_received) / n


@dataclass(frozen=True)
class QberEstimate:
    qber: float
    holdout_size: int
    holdout_indices: np.ndarray
    released_indices: np.ndarray


def _as_bits(labels) -> np.ndarray:
    a = np.asarray(labels)
    if a.ndim != 1:
        raise DomainError("labels must be one-dimensional")
    if a.size and (a.min() < 0 or a.max() > 1):
        raise DomainError("labels must be 0/1")
    return a.astype(np.uint8, copy=False)


def rcn_corrupt(labels, eta: float, rng_seed=None) -> np.ndarray:
    """Flip each label independently with probability ``eta``.

    ``rng_seed`` is anything ``numpy.random.default_rng`` accepts, including
    an existing Generator.
    """
    if not (0.0 <= eta < 0.5):
        raise DomainError(f"eta must lie in [0, 1/2), got {eta!r}")
    y = _as_bits(labels)
    rng = np.random.default_rng(rng_seed)
    flips = rng.random(y.shape[0]) < eta
    return y ^ flips.astype(np.uint8)


def bb84_transmit(labels, spec: ChannelSpec, rng_seed=None) -> SiftedBatch:
    """Send one label per channel use and keep the basis-matched uses."""
    if spec.kind is not ChannelKind.BB84:
        raise DomainError(f"bb84_transmit needs a BB84 spec, got {spec.kind.value}")
    bits = _as_bits(labels)
    n = bits.shape[0]
    rng = np.random.default_rng(spec.seed if rng_seed is None else rng_seed)

    a_basis = rng.integers(0, 2, n, dtype=np.uint8)
    intercept = rng.random(n) < spec.eavesdrop_fraction
    e_basis = rng.integers(0, 2, n, dtype=np.uint8)
    e_guess = rng.integers(0, 2, n, dtype=np.uint8)
    flip = (rng.random(n) < spec.intrinsic_flip).astype(np.uint8)
    b_basis = rng.integers(0, 2, n, dtype=np.uint8)
    b_guess = rng.integers(0, 2, n, dtype=np.uint8)

    # state leaving the interceptor
    e_bit = np.where(e_basis == a_basis, bits, e_guess)
    s_basis = np.where(intercept, e_basis, a_basis)
    s_bit = np.where(intercept, e_bit, bits) ^ flip

    received = np.where(b_basis == s_basis, s_bit, b_guess)
    kept = np.flatnonzero(a_basis == b_basis)
    return SiftedBatch(bits[kept], received[kept].astype(np.uint8), n, kept)


def estimate_qber(batch: SiftedBatch, holdout_fraction: float = 0.1, rng_seed=None) -> QberEstimate:
    """Disclose a random subset of sifted pairs and measure their error rate.

    The disclosed pairs are spent; the rest are returned as ``released_indices``
    (positions within the batch) for downstream use.
    """
    n = len(batch.labels_sent)
    if n == 0:
        raise DomainError("cannot estimate QBER from an empty batch")
    if not (0.0 < holdout_fraction <= 1.0):
        raise DomainError(f"holdout_fraction must lie in (0, 1], got {holdout_fraction!r}")
    k = max(1, math.ceil(holdout_fraction * n))
    perm = np.random.default_rng(rng_seed).permutation(n)
    hold = np.sort(perm[:k])
    rest = np.sort(perm[k:])
    errs = np.count_nonzero(batch.labels_sent[hold] != batch.labels_received[hold])
    return QberEstimate(errs / k, k, hold, rest)
