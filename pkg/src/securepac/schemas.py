"""JSON schemas for the run configuration and every JSON document the CLI emits."""

_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_COUNT = {"type": "integer", "minimum": 0}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "securepac run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "target": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon_star": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
                "delta_star": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "design": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m_h": {"type": "integer", "minimum": 1},
                "eta_c": {"oneOf": [{"const": "holevo"}, {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5}]},
            },
        },
        "capacity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"h_size": {"type": "integer", "minimum": 1}},
        },
        "channel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["RCN", "BB84"]},
                "eta": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
                "intrinsic_flip": _PROB,
                "eavesdrop_fraction": _PROB,
                "kappa": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "learner": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "domain_bits": {"type": "integer", "minimum": 1, "maximum": 16},
                "concept_index": {"type": "integer", "minimum": 0},
                "weights": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            },
        },
        "surrogate": {"enum": ["FINITE_CLASS", "EXP_RATE"]},
        "alpha": {"oneOf": [{"const": "optimal"}, {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}]},
        "prl_xi": {"oneOf": [{"const": "calibrated"}, {"type": "number", "exclusiveMinimum": 0}]},
        "replicas": {"type": "integer", "minimum": 1},
        "conf": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "threshold_variant": {"enum": ["STANDARD_BB84", "LITERAL_EQ43"]},
        "pilot_uses": {"type": "integer", "minimum": 1},
        "measured_eta": _PROB,
        "output": {"type": "string"},
    },
}

PLAN_FIELDS = {
    "type": "object",
    "required": ["alpha", "m_train", "n_cert_blocks", "m_cert", "m_total", "kappa", "m_raw", "q0", "s0", "coef_a", "coef_b"],
    "properties": {
        "alpha": {"type": ["number", "null"]},
        "m_train": _COUNT,
        "n_cert_blocks": _COUNT,
        "m_cert": _COUNT,
        "m_total": _COUNT,
        "m_raw": _COUNT,
        "kappa": {"type": "number"},
        "q0": _PROB,
        "s0": {"type": "number", "minimum": 0},
        "coef_a": {"type": "number"},
        "coef_b": {"type": "number"},
        "m_lb_continuous": {"type": ["number", "null"]},
    },
}

PLAN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "plan output",
    "type": "object",
    "required": ["feasible", "feasibility_margin", "m_h", "m_h_min", "eta_c"],
    "properties": {
        "feasible": {"type": "boolean"},
        "feasibility_margin": {"type": "number"},
        "m_h": {"type": "integer"},
        "m_h_min": {"type": "integer"},
        "eta_c": {"type": "number"},
        "alpha_star": {"type": "number"},
        "m_lb_opt": {"type": "number"},
        "plan": PLAN_FIELDS,
        "optimal": PLAN_FIELDS,
        "sweep": {"type": "array", "items": PLAN_FIELDS},
        "message": {"type": "string"},
    },
    "if": {"properties": {"feasible": {"const": True}}},
    "then": {"required": ["alpha_star", "plan", "optimal", "m_lb_opt"]},
    "else": {"required": ["message"]},
}

THRESHOLD_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "threshold output",
    "type": "object",
    "required": ["variant", "eta_c", "grid_step", "rows"],
    "properties": {
        "variant": {"enum": ["STANDARD_BB84", "LITERAL_EQ43"]},
        "eta_c": {"type": "number"},
        "grid_step": {"type": "number"},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["eta", "legit_info", "eve_chi", "gap"],
                "properties": {k: {"type": "number"} for k in ("eta", "legit_info", "eve_chi", "gap")},
            },
        },
    },
}

HALTING_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "halting output",
    "type": "object",
    "required": ["q", "m_h", "m_cert", "exact", "block"],
    "properties": {
        "q": _PROB,
        "m_h": {"type": "integer", "minimum": 1},
        "m_cert": _COUNT,
        "exact": _PROB,
        "block": _PROB,
        "mean_run_length": {"type": ["number", "null"]},
        "trace": {"type": "array", "items": _PROB},
    },
}

QBER_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "qber output",
    "type": "object",
    "required": ["raw_uses", "sifted", "sift_fraction", "qber", "holdout_size"],
    "properties": {
        "raw_uses": _COUNT,
        "sifted": _COUNT,
        "sift_fraction": _PROB,
        "qber": _PROB,
        "holdout_size": _COUNT,
        "expected_qber": _PROB,
        "intrinsic_flip": _PROB,
        "intercept_fraction": _PROB,
        "seed": {"type": "integer"},
    },
}

SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["replicas", "successes", "point_estimate", "lower_bound", "conf", "aborted"],
    "properties": {
        "replicas": {"type": "integer", "minimum": 1},
        "successes": _COUNT,
        "point_estimate": _PROB,
        "lower_bound": _PROB,
        "conf": _PROB,
        "aborted": _COUNT,
    },
}

REPORT_FIELDS = {
    "type": "object",
    "required": [
        "gate_admissibility",
        "gate_integrity",
        "gate_reliability",
        "gate_baseline",
        "accepted",
        "measured_eta",
        "evidence",
        "reliability_source",
        "p_l",
        "p_prl",
        "m_total",
        "m_h",
        "m_h_min",
        "eta_c",
        "epsilon_star",
        "delta_star",
    ],
    "properties": {
        "gate_admissibility": {"type": "boolean"},
        "gate_integrity": {"type": "boolean"},
        "gate_reliability": {"type": "boolean"},
        "gate_baseline": {"type": "boolean"},
        "accepted": {"type": "boolean"},
        "measured_eta": _PROB,
        "evidence": {"oneOf": [{"type": "null"}, SUMMARY_SCHEMA]},
        "reliability_source": {"enum": ["empirical", "analytic"]},
        "p_l": _PROB,
        "p_prl": _PROB,
        "m_total": _COUNT,
        "m_h": {"type": "integer"},
        "m_h_min": {"type": "integer"},
        "eta_c": {"type": "number"},
        "epsilon_star": {"type": "number"},
        "delta_star": {"type": "number"},
    },
}

DECISION_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "simulate / decide output",
    "type": "object",
    "required": ["config", "plan", "report"],
    "properties": {
        "config": {"type": "object"},
        "plan": PLAN_FIELDS,
        "pilot": {
            "type": "object",
            "required": ["uses", "estimate", "source"],
            "properties": {
                "uses": _COUNT,
                "estimate": _PROB,
                "source": {"enum": ["pilot", "config"]},
            },
        },
        "report": REPORT_FIELDS,
    },
}
