"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line; the lines are repeated in the
pytest terminal summary.
"""

import json
import math
import time

import numpy as np

from securepac.bounds import ClassCapacity, HaltingDesign, LearningTarget, delta_cert, q_obs
from securepac.budget import BudgetInputs, alpha_star, budget_at, budget_opt, feasibility, m_lb_continuous, m_lb_opt
from securepac.channels import ChannelSpec, bb84_transmit, rcn_corrupt
from securepac.cli import main
from securepac.halting import StreakTracker, halting_prob_block, halting_prob_exact, halting_trace, run_length_mean
from securepac.holevo import ThresholdVariant, eta_c
from securepac.learner import HypothesisClass, InputDistribution, certify, validation_outcomes
from securepac.stats import Scenario, Verdict, clopper_pearson_lower, estimate_pl, reject_on_no_halt, run_replicas

TARGET = LearningTarget(0.1, 0.05)


def default_inputs():
    design = HaltingDesign(TARGET, 15, eta_c())
    return BudgetInputs(design, ClassCapacity(16))


def sigma(p, n):
    return math.sqrt(p * (1 - p) / n)


def enumerate_halting(q, m_h, m):
    """P(some run of m_h successes in m trials) by listing all 2^m outcome strings."""
    if m == 0:
        return 0.0
    codes = np.arange(1 << m)
    bits = (codes[:, None] >> np.arange(m)) & 1
    run = np.zeros(codes.size, dtype=int)
    hit = np.zeros(codes.size, dtype=bool)
    for j in range(m):
        run = (run + 1) * bits[:, j]
        hit |= run >= m_h
    k = bits.sum(axis=1)
    w = q**k * (1 - q) ** (m - k)
    return math.fsum(w[hit])


def test_criterion_01_threshold(criterion):
    eta_c.cache_clear()
    t0 = time.perf_counter()
    std = eta_c(ThresholdVariant.STANDARD_BB84)
    dt = time.perf_counter() - t0
    lit = eta_c(ThresholdVariant.LITERAL_EQ43)
    ok = abs(std - 0.110028) <= 1e-4 and dt < 1.0 and abs(lit - 0.204) <= 5e-3
    criterion(1, ok, f"eta_c standard={std:.6f} ({dt * 1e3:.1f} ms), literal-formula root={lit:.6f}")


def test_criterion_02_dp_vs_enumeration(criterion):
    worst = 0.0
    dp_time = 0.0
    for q in (0.2, 0.5, 0.8):
        for m_h in range(1, 6):
            for m in range(15):
                t0 = time.perf_counter()
                dp = halting_prob_exact(q, m_h, m)
                dp_time += time.perf_counter() - t0
                worst = max(worst, abs(dp - enumerate_halting(q, m_h, m)))
    criterion(2, worst <= 1e-12 and dp_time < 10.0, f"max |DP - enumeration| = {worst:.2e} over 225 cells, DP time {dp_time:.3f} s")


def test_criterion_03_dominance(criterion):
    violations = 0
    cells = 0
    for q in (0.2, 0.5, 0.8):
        for m_h in range(1, 6):
            exact = halting_trace(q, m_h, 600)
            for m in range(601):
                cells += 1
                violations += exact[m] < halting_prob_block(q, m_h, m)
    criterion(3, violations == 0, f"{violations} violations of exact >= block over {cells} cells")


def test_criterion_04_run_length(criterion):
    q, m_h, reps = 0.6, 3, 100_000
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    total = 0
    buf = rng.random(1 << 20) < q
    pos = 0
    for _ in range(reps):
        tr = StreakTracker(m_h)
        while True:
            if pos == buf.size:
                buf = rng.random(1 << 20) < q
                pos = 0
            ok = bool(buf[pos])
            pos += 1
            if tr.observe(ok):
                break
        total += tr.trials_consumed
    dt = time.perf_counter() - t0
    mean = total / reps
    want = run_length_mean(q, m_h)
    rel = abs(mean - want) / want
    criterion(4, rel <= 0.02 and dt < 30.0, f"MC mean {mean:.4f} vs closed form {want:.4f} (rel err {rel:.4f}), {dt:.1f} s")


def test_criterion_05_budget_law(criterion, capsys):
    t0 = time.perf_counter()
    code = main(["plan", "--alpha", "0.5"])
    doc = json.loads(capsys.readouterr().out)
    inputs = default_inputs()
    opt = budget_opt(inputs)
    closed = m_lb_opt(inputs)
    plan = budget_at(inputs, 0.5)
    scenario = Scenario(HypothesisClass.default(), InputDistribution.uniform(4), ChannelSpec.rcn(0.11), plan, inputs.design)
    summary = estimate_pl(scenario, 2000, 0.95, rng_seed=5)
    dt = time.perf_counter() - t0
    ok = (
        code == 0
        and doc["plan"]["m_train"] == 2353
        and doc["plan"]["m_cert"] == 1245
        and abs(opt.m_total - closed) <= inputs.design.m_h + 2
        and summary.lower_bound >= 0.95 - 0.01
        and dt < 300
    )
    criterion(
        5,
        ok,
        f"plan m_train={doc['plan']['m_train']} m_cert={doc['plan']['m_cert']}; optimised total {opt.m_total} vs "
        f"{closed:.1f}; {summary.successes}/{summary.replicas} successes, CP lower {summary.lower_bound:.4f}; {dt:.1f} s",
    )


def test_criterion_06_type_one(criterion):
    inputs = default_inputs()
    plan = budget_at(inputs, 0.5)
    n = 10_000
    t0 = time.perf_counter()
    scenario = Scenario(HypothesisClass.default(), InputDistribution.uniform(4), ChannelSpec.rcn(eta_c()), plan, inputs.design)
    runs = run_replicas(scenario, n, rng_seed=6)
    rejects = sum(reject_on_no_halt(inputs.design, plan, r) is Verdict.REJECT_PATH for r in runs)
    dt = time.perf_counter() - t0
    bound = 0.05 + 3 * sigma(0.05, n)
    rate = rejects / n
    criterion(6, rate <= bound and dt < 600, f"false rejections {rejects}/{n} = {rate:.4f} <= {bound:.4f}; {dt:.1f} s")


def test_criterion_07_bb84(criterion):
    t0 = time.perf_counter()
    n = 100_000
    worst = []
    seed = 70
    for p in (0.0, 0.02, 0.05):
        for f in (0.0, 0.4, 1.0):
            seed += 1
            labels = np.random.default_rng(seed).integers(0, 2, n, dtype=np.uint8)
            spec = ChannelSpec.bb84(p, f)
            batch = bb84_transmit(labels, spec, seed + 1000)
            s = len(batch.labels_sent)
            sift_z = abs(s / n - 0.5) / sigma(0.5, n)
            want = spec.expected_qber()
            qber_z = 0.0 if want == 0 else abs(batch.qber_estimate - want) / sigma(want, s)
            if want == 0 and batch.qber_estimate != 0:
                qber_z = math.inf
            worst.append(max(sift_z, qber_z))
    labels = np.random.default_rng(99).integers(0, 2, 2_000_000, dtype=np.uint8)
    full = bb84_transmit(labels, ChannelSpec.bb84(0.0, 1.0), 100).qber_estimate
    dt = time.perf_counter() - t0
    ok = max(worst) <= 3 and abs(full - 0.25) <= 0.002 and dt < 120
    criterion(7, ok, f"worst grid deviation {max(worst):.2f} sigma; full-intercept QBER {full:.5f}; {dt:.1f} s")


def test_criterion_08_affine(criterion):
    c = (np.arange(16) % 3 == 0).astype(np.uint8)
    h = c.copy()
    h[[1, 10]] ^= 1  # 2 of 16 equiprobable points: risk 0.125
    rng = np.random.default_rng(8)
    n = 10**6
    x = rng.integers(0, 16, n)
    y = rcn_corrupt(c[x], 0.11, rng)
    rate = float(np.mean(h[x] != y))
    want = 0.11 + 0.78 * 0.125
    z = abs(rate - want) / sigma(want, n)
    criterion(8, z <= 3, f"mismatch rate {rate:.5f} vs {want:.4f} ({z:.2f} sigma)")


def test_criterion_09_pass_rate_and_level(criterion):
    concept = (np.arange(16) % 3 == 0).astype(np.uint8)
    planted = concept.copy()
    planted[0] ^= 1
    cls_ = HypothesisClass(4, np.stack([concept, planted]), 0)
    w = np.full(16, 0.9 / 15)
    w[0] = 0.1  # planted hypothesis has risk exactly epsilon* = 0.1
    dist = InputDistribution(w)
    eta = 0.11
    n = 10**6
    rate = float(validation_outcomes(1, cls_, dist, ChannelSpec.rcn(eta), n, 9).mean())
    q = q_obs(0.1, eta)
    z = abs(rate - q) / sigma(q, n)
    m_h, reps = 15, 100_000
    halts = sum(certify(1, cls_, dist, ChannelSpec.rcn(eta), m_h, m_h, [9, i])[0] for i in range(reps))
    level = delta_cert(TARGET, eta, m_h)
    bound = level + 3 * sigma(level, reps)
    ok = z <= 3 and halts / reps <= bound
    criterion(9, ok, f"pass rate {rate:.5f} vs q_obs {q:.5f} ({z:.2f} sigma); one-block halts {halts / reps:.5f} <= {bound:.5f}")


def test_criterion_10_alpha_star(criterion):
    rng = np.random.default_rng(10)
    grid = np.arange(1, 100) / 100
    designs = []
    while len(designs) < 20:
        t = LearningTarget(rng.uniform(0.02, 0.3), rng.uniform(0.005, 0.3))
        inp = BudgetInputs(HaltingDesign(t, int(rng.integers(1, 40)), rng.uniform(0.0, 0.2)), ClassCapacity(int(rng.integers(1, 5000))))
        if feasibility(inp).feasible:
            designs.append(inp)
    worst = 0.0
    for inp in designs:
        vals = [m_lb_continuous(inp, a) for a in grid]
        worst = max(worst, abs(alpha_star(inp) - grid[int(np.argmin(vals))]))
    criterion(10, worst <= 0.01 + 1e-12, f"max |alpha* - grid argmin| = {worst:.4f} over 20 feasible designs")
