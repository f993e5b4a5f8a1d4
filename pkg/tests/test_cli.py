import csv
import io
import json
import math

import jsonschema
import pytest

from securepac.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, EXIT_REJECTED, EXIT_RUNTIME, build_config, load_config, main
from securepac.errors import ConfigError
from securepac.holevo import eta_c
from securepac.schemas import CONFIG_SCHEMA, DECISION_SCHEMA, HALTING_SCHEMA, PLAN_SCHEMA, QBER_SCHEMA, THRESHOLD_SCHEMA

HAPPY = {"prl_xi": 5e-4, "channel": {"kind": "RCN", "eta": 0.05}, "replicas": 100, "seed": 1}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


class TestThreshold:
    def test_json(self, capsys):
        code, out, _ = run(capsys, "threshold", "--grid-step", "0.01")
        doc = json.loads(out)
        jsonschema.validate(doc, THRESHOLD_SCHEMA)
        assert code == EXIT_OK
        assert doc["eta_c"] == pytest.approx(0.110028, abs=1e-5)
        assert len(doc["rows"]) == 50

    def test_literal(self, capsys):
        _, out, _ = run(capsys, "threshold", "--variant", "LITERAL_EQ43")
        assert json.loads(out)["eta_c"] == pytest.approx(0.204, abs=5e-3)

    @pytest.mark.parametrize("step", [0.01, 0.03, 0.07])
    def test_csv(self, capsys, tmp_path, step):
        path = tmp_path / "curve.csv"
        code, out, _ = run(capsys, "threshold", "--grid-step", str(step), "--format", "csv", "--output", str(path))
        rows = list(csv.reader(path.open()))
        assert code == EXIT_OK
        assert rows[0] == ["eta", "legit_info", "eve_chi", "gap"]
        assert len(rows) - 1 == math.floor(0.5 / step)
        assert "0.110028" in out

    def test_bad_step(self, capsys):
        code, _, err = run(capsys, "threshold", "--grid-step", "0.2")
        assert code == EXIT_INPUT and "grid_step" in err


class TestPlan:
    def test_worked_example(self, capsys):
        code, out, _ = run(capsys, "plan", "--alpha", "0.5")
        doc = json.loads(out)
        jsonschema.validate(doc, PLAN_SCHEMA)
        assert code == EXIT_OK
        p = doc["plan"]
        assert (p["m_train"], p["m_cert"], p["n_cert_blocks"]) == (2353, 1245, 83)
        assert doc["m_h_min"] == 15
        assert doc["alpha_star"] == pytest.approx(0.4964, abs=1e-3)
        assert abs(doc["optimal"]["m_total"] - doc["m_lb_opt"]) <= 15 + 2

    def test_bb84_raw(self, capsys, tmp_path):
        cfg = write(tmp_path, {"channel": {"kind": "BB84"}, "alpha": 0.5})
        _, out, _ = run(capsys, "plan", "--config", cfg)
        assert json.loads(out)["plan"]["m_raw"] == 7196

    def test_trivial_delta(self, capsys, tmp_path):
        cfg = write(tmp_path, {"target": {"delta_star": 1.0}, "design": {"m_h": 1}})
        code, out, _ = run(capsys, "plan", "--config", cfg)
        doc = json.loads(out)
        assert code == EXIT_OK and doc["feasible"] and doc["m_h_min"] == 1

    def test_infeasible(self, capsys, tmp_path):
        cfg = write(tmp_path, {"design": {"m_h": 14}})
        code, out, err = run(capsys, "plan", "--config", cfg)
        doc = json.loads(out)
        jsonschema.validate(doc, PLAN_SCHEMA)
        assert code == EXIT_INFEASIBLE
        assert not doc["feasible"] and doc["feasibility_margin"] < 0
        assert "at least 15" in err

    def test_sweep(self, capsys):
        _, out, _ = run(capsys, "plan", "--sweep-alpha")
        doc = json.loads(out)
        jsonschema.validate(doc, PLAN_SCHEMA)
        assert len(doc["sweep"]) == 99
        assert min(p["m_total"] for p in doc["sweep"]) >= doc["optimal"]["m_total"] - 17

    def test_sweep_csv(self, capsys):
        _, out, _ = run(capsys, "plan", "--sweep-alpha", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 99 and "m_total" in rows[0]


class TestHalting:
    def test_values(self, capsys):
        _, out, _ = run(capsys, "halting", "--q", "0.5", "--m-h", "2", "--m-cert", "4")
        doc = json.loads(out)
        jsonschema.validate(doc, HALTING_SCHEMA)
        assert doc["exact"] == pytest.approx(0.5) and doc["block"] == pytest.approx(0.4375)
        assert doc["mean_run_length"] == pytest.approx(6.0)

    def test_trace(self, capsys):
        _, out, _ = run(capsys, "halting", "--q", "0.7", "--m-h", "3", "--m-cert", "20", "--trace")
        doc = json.loads(out)
        jsonschema.validate(doc, HALTING_SCHEMA)
        assert len(doc["trace"]) == 21 and doc["trace"][-1] == doc["exact"]

    def test_trace_csv(self, capsys):
        _, out, _ = run(capsys, "halting", "--q", "1", "--m-h", "3", "--m-cert", "5", "--trace", "--format", "csv")
        rows = list(csv.reader(io.StringIO(out)))
        assert rows[0] == ["t", "halted_by_t"] and len(rows) == 7

    def test_bad_q(self, capsys):
        assert run(capsys, "halting", "--q", "1.5", "--m-h", "3", "--m-cert", "5")[0] == EXIT_INPUT
        assert run(capsys, "halting", "--q", "0.5", "--m-h", "0", "--m-cert", "5")[0] == EXIT_INPUT


class TestQber:
    def test_full_intercept(self, capsys):
        code, out, _ = run(capsys, "qber", "--uses", "400000", "--intercept-fraction", "1", "--holdout", "1.0", "--seed", "2")
        doc = json.loads(out)
        jsonschema.validate(doc, QBER_SCHEMA)
        assert code == EXIT_OK
        assert doc["qber"] == pytest.approx(0.25, abs=0.004)
        assert doc["holdout_size"] == doc["sifted"]

    def test_clean(self, capsys):
        _, out, _ = run(capsys, "qber", "--uses", "1000", "--seed", "4")
        doc = json.loads(out)
        assert doc["qber"] == 0.0 and doc["raw_uses"] == 1000
        assert doc["holdout_size"] == math.ceil(0.1 * doc["sifted"])


class TestConfig:
    def test_defaults(self):
        cfg = build_config({})
        assert cfg.design.eta_c == eta_c() and cfg.design.m_h == 15
        assert cfg.capacity.h_size == 16 and cfg.channel.eta == 0.11

    @pytest.mark.parametrize(
        "doc,fld",
        [
            ({"target": {"epsilon_star": 0.7}}, "target.epsilon_star"),
            ({"design": {"m_h": 0}}, "design.m_h"),
            ({"channel": {"kind": "RCN", "eta": 0.5}}, "channel.eta"),
            ({"channel": {"kind": "QKD"}}, "channel.kind"),
            ({"channel": {"kind": "RCN", "eavesdrop_fraction": 0.3}}, "channel.eavesdrop_fraction"),
            ({"channel": {"kind": "BB84", "eta": 0.1}}, "channel.eta"),
            ({"learner": {"weights": [1.0]}}, "learner.weights"),
            ({"learner": {"concept_index": 40}}, "learner"),
            ({"learner": {"weights": [0.5] * 16}}, "learner.weights"),
            ({"replicas": 0}, "replicas"),
            ({"bogus": 1}, "<root>"),
            ({"design": {"eta_c": "optimal"}}, "design.eta_c"),
        ],
    )
    def test_field_errors(self, doc, fld):
        with pytest.raises(ConfigError) as exc:
            build_config(doc)
        assert exc.value.field == fld
        assert str(exc.value).startswith(fld + ":")

    def test_precedence(self, tmp_path):
        cfg = write(tmp_path, {"seed": 5, "replicas": 10})
        assert load_config(cfg).seed == 5
        got = load_config(cfg, {"seed": 9, "replicas": None})
        assert got.seed == 9 and got.replicas == 10

    def test_bad_json(self, capsys, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{nope")
        code, _, err = run(capsys, "plan", "--config", str(p))
        assert code == EXIT_INPUT and "--config" in err

    def test_schema_is_valid(self):
        jsonschema.Draft202012Validator.check_schema(CONFIG_SCHEMA)
        for s in (PLAN_SCHEMA, THRESHOLD_SCHEMA, HALTING_SCHEMA, QBER_SCHEMA, DECISION_SCHEMA):
            jsonschema.Draft202012Validator.check_schema(s)

    def test_numeric_eta_c(self):
        assert build_config({"design": {"eta_c": 0.11}}).design.eta_c == 0.11
        assert build_config({"threshold_variant": "LITERAL_EQ43"}).design.eta_c == pytest.approx(0.204, abs=5e-3)


class TestSimulate:
    def test_happy_path(self, capsys, tmp_path):
        cfg = write(tmp_path, HAPPY)
        code, out, _ = run(capsys, "simulate", "--config", cfg)
        doc = json.loads(out)
        jsonschema.validate(doc, DECISION_SCHEMA)
        assert code == EXIT_OK and doc["report"]["accepted"]
        assert doc["pilot"]["source"] == "pilot"

    def test_byte_identical(self, capsys, tmp_path):
        cfg = write(tmp_path, HAPPY)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(capsys, "simulate", "--config", cfg, "--output", str(a))
        run(capsys, "simulate", "--config", cfg, "--output", str(b), "--workers", "2")
        assert a.read_bytes() == b.read_bytes()

    def test_full_intercept_rejected(self, capsys, tmp_path):
        cfg = write(tmp_path, {"prl_xi": 5e-4, "channel": {"kind": "BB84", "eavesdrop_fraction": 1.0}, "replicas": 50})
        code, out, _ = run(capsys, "simulate", "--config", cfg)
        doc = json.loads(out)
        jsonschema.validate(doc, DECISION_SCHEMA)
        assert code == EXIT_REJECTED
        assert doc["pilot"]["estimate"] == pytest.approx(0.25, abs=0.02)
        assert not doc["report"]["gate_admissibility"]

    def test_default_baseline_rejects(self, capsys, tmp_path):
        # calibrated xi = gamma* leaves the geometric baseline near 1
        cfg = write(tmp_path, {"channel": {"kind": "RCN", "eta": 0.05}, "replicas": 50})
        code, out, _ = run(capsys, "simulate", "--config", cfg)
        assert code == EXIT_REJECTED and not json.loads(out)["report"]["gate_baseline"]

    def test_infeasible(self, capsys, tmp_path):
        cfg = write(tmp_path, {"design": {"m_h": 3}})
        assert run(capsys, "simulate", "--config", cfg)[0] == EXIT_INFEASIBLE

    def test_unwritable_output(self, capsys, tmp_path):
        cfg = write(tmp_path, HAPPY | {"replicas": 5})
        code, _, err = run(capsys, "simulate", "--config", cfg, "--output", str(tmp_path / "no" / "such" / "x.json"))
        assert code == EXIT_RUNTIME and "cannot write" in err


class TestDecide:
    def test_empirical(self, capsys, tmp_path):
        cfg = write(tmp_path, HAPPY)
        code, out, _ = run(capsys, "decide", "--config", cfg, "--measured-eta", "0.05", "--successes", "2000", "--trials", "2000")
        doc = json.loads(out)
        jsonschema.validate(doc, DECISION_SCHEMA)
        assert code == EXIT_OK and doc["report"]["reliability_source"] == "empirical"

    def test_admissibility(self, capsys, tmp_path):
        cfg = write(tmp_path, HAPPY)
        code, out, _ = run(capsys, "decide", "--config", cfg, "--measured-eta", "0.2", "--successes", "2000", "--trials", "2000")
        assert code == EXIT_REJECTED and not json.loads(out)["report"]["gate_admissibility"]

    def test_analytic(self, capsys, tmp_path):
        cfg = write(tmp_path, HAPPY)
        code, out, _ = run(capsys, "decide", "--config", cfg, "--measured-eta", "0.11")
        doc = json.loads(out)
        jsonschema.validate(doc, DECISION_SCHEMA)
        assert doc["report"]["reliability_source"] == "analytic" and doc["report"]["evidence"] is None
        assert code == EXIT_OK

    def test_missing_inputs(self, capsys):
        assert run(capsys, "decide")[0] == EXIT_INPUT
        assert run(capsys, "decide", "--measured-eta", "0.1", "--successes", "3")[0] == EXIT_INPUT
        assert run(capsys, "decide", "--measured-eta", "0.1", "--successes", "3", "--trials", "2")[0] == EXIT_INPUT


def test_usage_error(capsys):
    assert run(capsys, "nosuch")[0] == EXIT_INPUT
    assert run(capsys, "--version")[0] == EXIT_OK
