"""Command-line entry point: ``securepac <subcommand> [options]``.

Exit codes: 0 accepted/ok, 2 rejected by the gates, 3 infeasible design,
4 input error, 5 runtime error. JSON goes to stdout unless ``--output`` is
given; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .bounds import ClassCapacity, HaltingDesign, LearningTarget, PrlBaseline
from .budget import BudgetInputs, Surrogate, alpha_star, budget_at, budget_opt, feasibility, m_lb_opt, sweep_alpha
from .channels import ChannelKind, ChannelSpec, bb84_transmit, estimate_qber, rcn_corrupt
from .errors import ConfigError, DomainError, InfeasibleDesignError, SecurePacError
from .halting import halting_prob_block, halting_trace, run_length_mean
from .holevo import ThresholdVariant, eta_c, threshold_curve
from .learner import HypothesisClass, InputDistribution
from .schemas import CONFIG_SCHEMA
from .stats import MonteCarloSummary, Scenario, decide, decide_analytic, estimate_pl

EXIT_OK = 0
EXIT_REJECTED = 2
EXIT_INFEASIBLE = 3
EXIT_INPUT = 4
EXIT_RUNTIME = 5

log = logging.getLogger("securepac")


@dataclass(frozen=True)
class RunConfig:
    target: LearningTarget
    design: HaltingDesign
    capacity: ClassCapacity
    channel: ChannelSpec
    surrogate: Surrogate = Surrogate.FINITE_CLASS
    replicas: int = 200
    conf: float = 0.95
    seed: int = 0
    threshold_variant: ThresholdVariant = ThresholdVariant.STANDARD_BB84
    output_path: str | None = None
    alpha: float | None = None  # None: optimal split
    prl_xi: float | None = None  # None: calibrated to gamma*
    domain_bits: int = 4
    concept_index: int = 2
    weights: tuple | None = None
    pilot_uses: int = 20_000
    measured_eta: float | None = None
    workers: int = 1
    raw: dict = field(default_factory=dict, compare=False)

    def budget_inputs(self) -> BudgetInputs:
        return BudgetInputs(self.design, self.capacity, self.surrogate, self.channel.kappa)

    def baseline(self) -> PrlBaseline:
        if self.prl_xi is None:
            return PrlBaseline.calibrated(self.target, self.design.eta_c)
        return PrlBaseline(self.prl_xi)

    def hypothesis_class(self) -> HypothesisClass:
        return HypothesisClass.default(self.domain_bits, self.concept_index)

    def distribution(self) -> InputDistribution:
        if self.weights is None:
            return InputDistribution.uniform(self.domain_bits)
        return InputDistribution(np.array(self.weights, dtype=float))


def _field(name: str, fn, *args, **kwargs):
    """Build a component, tagging domain errors with the config field."""
    try:
        return fn(*args, **kwargs)
    except (DomainError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from None


def build_config(data: dict) -> RunConfig:
    """Validate a parsed config document and build every component from it."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(path, err.message)

    variant = ThresholdVariant(data.get("threshold_variant", "STANDARD_BB84"))
    t = data.get("target", {})
    target = _field("target", LearningTarget, t.get("epsilon_star", 0.1), t.get("delta_star", 0.05))
    d = data.get("design", {})
    ec = d.get("eta_c", "holevo")
    ec = eta_c(variant) if ec == "holevo" else ec
    design = _field("design", HaltingDesign, target, d.get("m_h", 15), ec)

    lr = data.get("learner", {})
    bits = lr.get("domain_bits", 4)
    concept = lr.get("concept_index", 2)
    cls_ = _field("learner", HypothesisClass.default, bits, concept)
    weights = lr.get("weights")
    if weights is not None:
        if len(weights) != 1 << bits:
            raise ConfigError("learner.weights", f"expected {1 << bits} weights, got {len(weights)}")
        _field("learner.weights", InputDistribution, np.array(weights, dtype=float))
        weights = tuple(weights)

    cap = _field("capacity", ClassCapacity, data.get("capacity", {}).get("h_size", cls_.size))

    ch = data.get("channel", {})
    kind = ch.get("kind", "RCN")
    if kind == "RCN":
        extra = sorted(set(ch) & {"intrinsic_flip", "eavesdrop_fraction"})
        if extra:
            raise ConfigError(f"channel.{extra[0]}", "only meaningful for BB84 channels")
        channel = _field("channel", ChannelSpec, ChannelKind.RCN, eta=ch.get("eta", 0.11), kappa=ch.get("kappa", 1.0))
    else:
        if "eta" in ch:
            raise ConfigError("channel.eta", "BB84 noise is set by intrinsic_flip and eavesdrop_fraction")
        channel = _field(
            "channel",
            ChannelSpec,
            ChannelKind.BB84,
            intrinsic_flip=ch.get("intrinsic_flip", 0.0),
            eavesdrop_fraction=ch.get("eavesdrop_fraction", 0.0),
            kappa=ch.get("kappa", 0.5),
        )

    alpha = data.get("alpha", "optimal")
    xi = data.get("prl_xi", "calibrated")
    return RunConfig(
        target=target,
        design=design,
        capacity=cap,
        channel=channel,
        surrogate=Surrogate(data.get("surrogate", "FINITE_CLASS")),
        replicas=data.get("replicas", 200),
        conf=data.get("conf", 0.95),
        seed=data.get("seed", 0),
        threshold_variant=variant,
        output_path=data.get("output"),
        alpha=None if alpha == "optimal" else alpha,
        prl_xi=None if xi == "calibrated" else xi,
        domain_bits=bits,
        concept_index=concept,
        weights=weights,
        pilot_uses=data.get("pilot_uses", 20_000),
        measured_eta=data.get("measured_eta"),
        workers=data.get("workers", 1),
        raw=data,
    )


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file, then flag overrides (non-None values only)."""
    data: dict = {}
    if path:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("--config", f"{path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    return build_config(data)


def _dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, output: str | None) -> None:
    if output:
        try:
            Path(output).write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {output}: {exc.strerror}") from None
    else:
        sys.stdout.write(text)


def _output(args, cfg: RunConfig | None = None) -> str | None:
    if args.output:
        return args.output
    return cfg.output_path if cfg is not None else None


def _overrides(args) -> dict:
    return {"seed": args.seed, "replicas": args.replicas}


def cmd_threshold(args) -> int:
    variant = ThresholdVariant(args.variant)
    rows = threshold_curve(variant, args.grid_step)
    root = eta_c(variant)
    if args.format == "csv":
        _emit(_csv(["eta", "legit_info", "eve_chi", "gap"], rows), args.output)
        print(f"eta_c = {root:.6f} ({variant.value})", file=sys.stderr if not args.output else sys.stdout)
    else:
        doc = {
            "variant": variant.value,
            "eta_c": root,
            "grid_step": args.grid_step,
            "rows": [dict(zip(("eta", "legit_info", "eve_chi", "gap"), r)) for r in rows],
        }
        _emit(_dumps(doc), args.output)
    return EXIT_OK


def plan_document(cfg: RunConfig, alpha: float | None = None, sweep: bool = False) -> tuple[dict, bool]:
    inputs = cfg.budget_inputs()
    feas = feasibility(inputs)
    doc = {
        "feasible": feas.feasible,
        "feasibility_margin": feas.margin,
        "m_h": cfg.design.m_h,
        "m_h_min": cfg.design.min_memory(),
        "eta_c": cfg.design.eta_c,
    }
    if not feas.feasible:
        doc["message"] = (
            f"q0^M_H = {inputs.block_pass:.6g} exceeds delta* = {cfg.target.delta_star:g} "
            f"by {-feas.margin:.6g}; m_h must be at least {doc['m_h_min']}"
        )
        return doc, False
    opt = budget_opt(inputs)
    chosen = opt if alpha is None else budget_at(inputs, alpha)
    doc.update(alpha_star=alpha_star(inputs), m_lb_opt=m_lb_opt(inputs), plan=chosen.to_dict(), optimal=opt.to_dict())
    if sweep:
        doc["sweep"] = [p.to_dict() for p in sweep_alpha(inputs)]
    return doc, True


def cmd_plan(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    alpha = args.alpha if args.alpha is not None else cfg.alpha
    doc, ok = plan_document(cfg, alpha, args.sweep_alpha)
    if not ok:
        sys.stderr.write(f"infeasible design: {doc['message']}\n")
    if args.format == "csv" and ok:
        rows = doc["sweep"] if args.sweep_alpha else [doc["plan"]]
        header = list(rows[0])
        _emit(_csv(header, [[r[k] for k in header] for r in rows]), _output(args, cfg))
    else:
        _emit(_dumps(doc), _output(args, cfg))
    return EXIT_OK if ok else EXIT_INFEASIBLE


def cmd_halting(args) -> int:
    trace = halting_trace(args.q, args.m_h, args.m_cert)
    doc = {
        "q": args.q,
        "m_h": args.m_h,
        "m_cert": args.m_cert,
        "exact": float(trace[-1]),
        "block": halting_prob_block(args.q, args.m_h, args.m_cert),
        "mean_run_length": run_length_mean(args.q, args.m_h) if 0.0 < args.q < 1.0 else None,
    }
    if args.trace:
        if args.format == "csv":
            _emit(_csv(["t", "halted_by_t"], [(t, v) for t, v in enumerate(trace.tolist())]), args.output)
            return EXIT_OK
        doc["trace"] = trace.tolist()
    _emit(_dumps(doc), args.output)
    return EXIT_OK


def cmd_qber(args) -> int:
    seed = 0 if args.seed is None else args.seed
    spec = ChannelSpec.bb84(args.intrinsic_flip, args.intercept_fraction, seed)
    ss = np.random.SeedSequence(seed)
    label_rng, chan_rng, hold_rng = (np.random.default_rng(s) for s in ss.spawn(3))
    labels = label_rng.integers(0, 2, args.uses, dtype=np.uint8)
    batch = bb84_transmit(labels, spec, chan_rng)
    est = estimate_qber(batch, args.holdout, hold_rng)
    doc = {
        "raw_uses": batch.raw_uses,
        "sifted": len(batch.labels_sent),
        "sift_fraction": batch.sift_fraction,
        "qber": est.qber,
        "holdout_size": est.holdout_size,
        "expected_qber": spec.expected_qber(),
        "intrinsic_flip": args.intrinsic_flip,
        "intercept_fraction": args.intercept_fraction,
        "seed": seed,
    }
    _emit(_dumps(doc), args.output)
    return EXIT_OK


def pilot_estimate(cfg: RunConfig) -> dict:
    """Noise level of the configured channel as the decision sees it.

    A configured ``measured_eta`` is used verbatim; otherwise ``pilot_uses``
    known labels are sent and the disclosed error rate is measured.
    """
    if cfg.measured_eta is not None:
        return {"uses": 0, "estimate": cfg.measured_eta, "source": "config"}
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    labels = rng.integers(0, 2, cfg.pilot_uses, dtype=np.uint8)
    if cfg.channel.kind is ChannelKind.RCN:
        est = float(np.mean(rcn_corrupt(labels, cfg.channel.eta, rng) != labels))
    else:
        batch = bb84_transmit(labels, cfg.channel, rng)
        est = estimate_qber(batch, 1.0, rng).qber
    return {"uses": cfg.pilot_uses, "estimate": est, "source": "pilot"}


def _resolved(cfg: RunConfig) -> dict:
    return {
        "target": asdict(cfg.target),
        "design": {"m_h": cfg.design.m_h, "eta_c": cfg.design.eta_c},
        "capacity": {"h_size": cfg.capacity.h_size},
        "channel": {k: (v.value if hasattr(v, "value") else v) for k, v in asdict(cfg.channel).items() if k != "seed"},
        "surrogate": cfg.surrogate.value,
        "alpha": "optimal" if cfg.alpha is None else cfg.alpha,
        "prl_xi": cfg.baseline().xi,
        "replicas": cfg.replicas,
        "conf": cfg.conf,
        "seed": cfg.seed,
        "threshold_variant": cfg.threshold_variant.value,
        "learner": {"domain_bits": cfg.domain_bits, "concept_index": cfg.concept_index, "weights": cfg.weights},
    }


def _require_plan(cfg: RunConfig):
    inputs = cfg.budget_inputs()
    return budget_opt(inputs) if cfg.alpha is None else budget_at(inputs, cfg.alpha)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, _overrides(args) | {"workers": args.workers})
    plan = _require_plan(cfg)
    pilot = pilot_estimate(cfg)
    scenario = Scenario(cfg.hypothesis_class(), cfg.distribution(), cfg.channel, plan, cfg.design)
    log.info("running %d replicas, m_total=%d", cfg.replicas, plan.m_total)
    summary = estimate_pl(scenario, cfg.replicas, cfg.conf, cfg.seed, cfg.workers)
    report = decide(cfg.design, plan, pilot["estimate"], summary, cfg.baseline())
    doc = {"config": _resolved(cfg), "plan": plan.to_dict(), "pilot": pilot, "report": report.to_dict()}
    _emit(_dumps(doc), _output(args, cfg))
    return EXIT_OK if report.accepted else EXIT_REJECTED


def cmd_decide(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    plan = _require_plan(cfg)
    eta = args.measured_eta if args.measured_eta is not None else cfg.measured_eta
    if eta is None:
        raise ConfigError("--measured-eta", "required (flag or config measured_eta)")
    if args.successes is None and args.trials is None:
        report = decide_analytic(cfg.budget_inputs(), plan, eta, cfg.baseline())
    else:
        if args.successes is None or args.trials is None:
            raise ConfigError("--successes/--trials", "give both or neither")
        summary = _field("--successes", MonteCarloSummary.from_counts, args.successes, args.trials, cfg.conf)
        report = decide(cfg.design, plan, eta, summary, cfg.baseline())
    pilot = {"uses": 0, "estimate": eta, "source": "config"}
    doc = {"config": _resolved(cfg), "plan": plan.to_dict(), "pilot": pilot, "report": report.to_dict()}
    _emit(_dumps(doc), _output(args, cfg))
    return EXIT_OK if report.accepted else EXIT_REJECTED


def _prob(s: str) -> float:
    v = float(s)
    if not (0.0 <= v <= 1.0):
        raise argparse.ArgumentTypeError(f"{s} is not in [0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--output", help="write the result here instead of stdout")
    common.add_argument("--replicas", type=int, help="Monte Carlo replicas (overrides config)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="securepac", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("threshold", parents=[common], help="noise-threshold curve and its root")
    s.add_argument("--variant", choices=[v.value for v in ThresholdVariant], default="STANDARD_BB84")
    s.add_argument("--grid-step", type=float, default=0.01)
    s.set_defaults(func=cmd_threshold)

    s = sub.add_parser("plan", parents=[common], help="sample budget for a design")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--alpha", type=float, help="fixed failure split in (0, 1)")
    g.add_argument("--sweep-alpha", action="store_true", help="also tabulate alpha = 0.01 .. 0.99")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("halting", parents=[common], help="probability of a success run within a budget")
    s.add_argument("--q", type=_prob, required=True)
    s.add_argument("--m-h", type=int, required=True)
    s.add_argument("--m-cert", type=int, required=True)
    s.add_argument("--trace", action="store_true", help="include Q_t for every t")
    s.set_defaults(func=cmd_halting)

    s = sub.add_parser("qber", parents=[common], help="simulate a BB84 link and estimate its QBER")
    s.add_argument("--uses", type=int, default=100_000)
    s.add_argument("--intercept-fraction", type=_prob, default=0.0)
    s.add_argument("--intrinsic-flip", type=_prob, default=0.0)
    s.add_argument("--holdout", type=float, default=0.1)
    s.set_defaults(func=cmd_qber)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo protocol run and gate decision")
    s.add_argument("--workers", type=int, help="worker processes (overrides config)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("decide", parents=[common], help="gate decision from given evidence")
    s.add_argument("--measured-eta", type=_prob)
    s.add_argument("--successes", type=int)
    s.add_argument("--trials", type=int)
    s.set_defaults(func=cmd_decide)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InfeasibleDesignError as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SecurePacError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
