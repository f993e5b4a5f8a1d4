"""Finite-class ERM with a run-based certification phase.

Inputs are n-bit strings encoded as integers ``0 .. 2^n - 1`` (bit ``i`` of the
integer is input bit ``i``). Hypotheses are truth tables over that domain, so
population risks are exact weighted counts.

Training and certification draw from independent child streams of the run
seed and never share samples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .bounds import HaltingDesign
from .budget import BudgetPlan, raw_rescale
from .channels import ChannelKind, ChannelSpec, bb84_transmit, rcn_corrupt
from .errors import ContractViolation, DomainError, InsufficientSiftedSamplesError
from .halting import StreakTracker

MAX_DOMAIN_BITS = 16
# raw-use headroom over the expected sift yield
BB84_HEADROOM = 1.05
CERT_CHUNK = 256


@dataclass(frozen=True)
class HypothesisClass:
    domain_bits: int
    hypotheses: np.ndarray
    concept_index: int

    def __post_init__(self):
        n = self.domain_bits
        if int(n) != n or not (1 <= n <= MAX_DOMAIN_BITS):
            raise DomainError(f"domain_bits must be an integer in [1, {MAX_DOMAIN_BITS}], got {n!r}")
        tables = np.asarray(self.hypotheses, dtype=np.uint8)
        if tables.ndim != 2 or tables.shape[0] == 0 or tables.shape[1] != 1 << n:
            raise DomainError(f"hypotheses must be a non-empty (k, {1 << n}) array of truth tables")
        if tables.max(initial=0) > 1:
            raise DomainError("truth tables must be 0/1")
        if not (0 <= self.concept_index < tables.shape[0]):
            raise DomainError(f"concept_index {self.concept_index} out of range for {tables.shape[0]} hypotheses")
        tables.setflags(write=False)
        object.__setattr__(self, "hypotheses", tables)

    @property
    def size(self) -> int:
        return self.hypotheses.shape[0]

    @property
    def concept(self) -> np.ndarray:
        return self.hypotheses[self.concept_index]

    @classmethod
    def default(cls, domain_bits: int = 4, concept_index: int = 2) -> "HypothesisClass":
        """Affine functions of weight <= 2: both constants, every literal and
        its negation, and every pairwise parity. For n = 4 that is 16 tables.

        Index order: 0, 1, x_0 .. x_{n-1}, not x_0 .. not x_{n-1}, then
        x_i xor x_j in lexicographic (i, j) order.
        """
        n = domain_bits
        x = np.arange(1 << n)
        bits = [((x >> i) & 1).astype(np.uint8) for i in range(n)]
        rows = [np.zeros(1 << n, np.uint8), np.ones(1 << n, np.uint8)]
        rows += bits
        rows += [1 - b for b in bits]
        rows += [bits[i] ^ bits[j] for i, j in itertools.combinations(range(n), 2)]
        return cls(n, np.stack(rows), concept_index)


@dataclass(frozen=True)
class InputDistribution:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise DomainError("weights must be a non-empty vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("weights must be finite and non-negative")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise DomainError(f"weights must sum to 1, got {math.fsum(w)!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, domain_bits: int) -> "InputDistribution":
        size = 1 << domain_bits
        return cls(np.full(size, 1.0 / size))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.choice(self.weights.size, size=size, p=self.weights)


@dataclass(frozen=True)
class RunRecord:
    halted: bool
    trials_used_train: int
    trials_used_cert: int
    returned_hypothesis: int
    true_risk: float
    success: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _check_dist(cls_: HypothesisClass, dist: InputDistribution) -> None:
    if dist.weights.size != cls_.hypotheses.shape[1]:
        raise DomainError(f"distribution has {dist.weights.size} points, class domain has {cls_.hypotheses.shape[1]}")


def _check_h(h: int, cls_: HypothesisClass) -> None:
    if not (0 <= h < cls_.size):
        raise IndexError(f"hypothesis index {h} out of range for {cls_.size} hypotheses")


def population_risk(h: int, cls_: HypothesisClass, dist: InputDistribution) -> float:
    """Exact weighted disagreement between hypothesis ``h`` and the concept."""
    _check_dist(cls_, dist)
    _check_h(h, cls_)
    diff = cls_.hypotheses[h] != cls_.concept
    return math.fsum(dist.weights[diff])


def provisioned_raw_uses(channel: ChannelSpec, m: int) -> int:
    """Raw uses allotted to a phase needing ``m`` usable samples."""
    if channel.kind is ChannelKind.RCN:
        return m
    return math.ceil(raw_rescale(m, channel.kappa) * BB84_HEADROOM)


def _child_rngs(rng_seed, n: int) -> list[np.random.Generator]:
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed.spawn(n)
    ss = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def labelled_sample(
    cls_: HypothesisClass,
    dist: InputDistribution,
    channel: ChannelSpec,
    m: int,
    rng: np.random.Generator,
    raw_uses: int | None = None,
    strict: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Up to ``m`` inputs with channel-delivered labels.

    On the BB84 path one input is sent per raw use and only sifted uses are
    kept. With ``strict`` a shortfall raises InsufficientSiftedSamplesError;
    otherwise whatever survived (at most ``m``) is returned.
    """
    _check_dist(cls_, dist)
    if m < 0:
        raise DomainError(f"sample count must be >= 0, got {m!r}")
    if channel.kind is ChannelKind.RCN:
        x = dist.sample(rng, m)
        return x, rcn_corrupt(cls_.concept[x], channel.eta, rng)
    n_raw = provisioned_raw_uses(channel, m) if raw_uses is None else raw_uses
    x = dist.sample(rng, n_raw)
    batch = bb84_transmit(cls_.concept[x], channel, rng)
    if strict and len(batch.kept_indices) < m:
        raise InsufficientSiftedSamplesError(f"sifting kept {len(batch.kept_indices)} of {n_raw} raw uses, phase needs {m}")
    keep = batch.kept_indices[:m]
    return x[keep], batch.labels_received[:m]


def erm_train(
    cls_: HypothesisClass,
    dist: InputDistribution,
    channel: ChannelSpec,
    m_train: int,
    rng_seed=None,
    raw_uses: int | None = None,
) -> int:
    """Index of the hypothesis with fewest mismatches on ``m_train`` noisy samples.

    Ties go to the lowest index, so ``m_train = 0`` returns 0.
    """
    rng = np.random.default_rng(rng_seed)
    x, y = labelled_sample(cls_, dist, channel, m_train, rng, raw_uses)
    if m_train == 0:
        return 0
    mistakes = np.count_nonzero(cls_.hypotheses[:, x] != y, axis=1)
    return int(np.argmin(mistakes))


def validation_outcomes(
    h: int,
    cls_: HypothesisClass,
    dist: InputDistribution,
    channel: ChannelSpec,
    n: int,
    rng_seed=None,
    raw_uses: int | None = None,
) -> np.ndarray:
    """Pass/fail of ``n`` fresh validation trials: pass iff ``h(x)`` equals the noisy label."""
    _check_h(h, cls_)
    rng = np.random.default_rng(rng_seed)
    x, y = labelled_sample(cls_, dist, channel, n, rng, raw_uses)
    return cls_.hypotheses[h][x] == y


def certify(
    h: int,
    cls_: HypothesisClass,
    dist: InputDistribution,
    channel: ChannelSpec,
    m_h: int,
    m_cert: int,
    rng_seed=None,
) -> tuple[bool, int]:
    """Validate ``h`` until ``m_h`` passes in a row or ``m_cert`` trials are spent.

    RCN trials are drawn lazily in chunks. The BB84 path transmits its whole
    provisioned raw allotment up front and only fails for lack of sifted
    samples if the run has not halted when they are used up. Returns
    ``(halted, trials)``.
    """
    if m_cert < 0:
        raise DomainError(f"m_cert must be >= 0, got {m_cert!r}")
    _check_h(h, cls_)
    tracker = StreakTracker(m_h)
    if m_cert == 0:
        return False, 0
    rng = np.random.default_rng(rng_seed)
    if channel.kind is ChannelKind.BB84:
        x, y = labelled_sample(cls_, dist, channel, m_cert, rng, strict=False)
        chunks = iter([cls_.hypotheses[h][x] == y])
    else:
        chunks = (
            validation_outcomes(h, cls_, dist, channel, min(CERT_CHUNK, m_cert - start), rng)
            for start in range(0, m_cert, CERT_CHUNK)
        )
    for outcomes in chunks:
        for ok in outcomes.tolist():
            if tracker.observe(ok):
                return True, tracker.trials_consumed
    if tracker.trials_consumed < m_cert:
        # only the BB84 path can run dry before the budget is spent
        raise InsufficientSiftedSamplesError(
            f"sifted stream ran out after {tracker.trials_consumed} of {m_cert} certification trials"
        )
    return False, tracker.trials_consumed


def run_protocol(
    cls_: HypothesisClass,
    dist: InputDistribution,
    channel: ChannelSpec,
    plan: BudgetPlan,
    design: HaltingDesign,
    rng_seed=None,
) -> RunRecord:
    """Train on ``plan.m_train`` samples, then certify within ``plan.m_cert`` trials."""
    if plan.n_cert_blocks * design.m_h != plan.m_cert:
        raise DomainError(f"plan has {plan.n_cert_blocks} blocks and m_cert {plan.m_cert}, inconsistent with m_h {design.m_h}")
    train_rng, cert_rng = _child_rngs(rng_seed, 2)
    h = erm_train(cls_, dist, channel, plan.m_train, train_rng)
    halted, trials = certify(h, cls_, dist, channel, design.m_h, plan.m_cert, cert_rng)
    risk = population_risk(h, cls_, dist)
    success = halted and risk <= design.target.epsilon_star
    rec = RunRecord(halted, plan.m_train, trials, h, risk, success)
    if rec.success != (rec.halted and rec.true_risk <= design.target.epsilon_star) or rec.trials_used_cert > plan.m_cert:
        raise ContractViolation(f"inconsistent run record {rec}")
    return rec
