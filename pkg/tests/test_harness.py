"""Config validation, scenario tables, and CLI plumbing."""

import dataclasses
import json

import pytest

from parkedchain.contract_opt import InfeasibleProblem
from parkedchain.harness import (
    ConfigError,
    ExperimentConfig,
    ResultTable,
    config_digest,
    run_scenario,
    validate_config,
)
from parkedchain.harness import cli


def small_cfg(**overrides):
    # keep scenario runs cheap: tiny population, few arrivals, few slots
    base = dict(arrivals=2_000, population=20, misbehaving=4,
                collusion_seeds=5, n_types=3)
    base.update(overrides)
    return dataclasses.replace(ExperimentConfig(), **base)


class TestConfigValidation:
    def test_missing_path_yields_defaults(self):
        assert validate_config(None) == ExperimentConfig()

    def test_empty_file_yields_defaults(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text("")
        assert validate_config(str(path)) == ExperimentConfig()

    def test_all_violations_reported_together(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "s_bits": -1.0,
            "gammas": [0.3, 0.3, 0.3],
            "no_such_knob": 5,
        }))
        with pytest.raises(ConfigError) as exc:
            validate_config(str(path))
        text = "\n".join(exc.value.diagnostics)
        assert len(exc.value.diagnostics) == 3
        assert "s_bits" in text
        assert "gammas must sum to 1" in text
        assert "no_such_knob" in text

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "nope.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            validate_config(str(path))

    def test_unknown_consensus_key(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"consensus": {"nodes": 10}}))
        with pytest.raises(ConfigError, match="nodes"):
            validate_config(str(path))

    def test_overrides_applied(self, tmp_path):
        path = tmp_path / "ok.json"
        path.write_text(json.dumps({"seed": 7, "profile_hour": 13}))
        cfg = validate_config(str(path))
        assert cfg.seed == 7 and cfg.profile_hour == 13

    def test_digest_tracks_content(self):
        a = ExperimentConfig()
        b = dataclasses.replace(a, seed=1)
        assert config_digest(a) != config_digest(b)
        assert config_digest(a) == config_digest(ExperimentConfig())


class TestResultTable:
    def test_requires_provenance(self):
        with pytest.raises(ValueError):
            ResultTable(("a",), [(1,)], {})

    def test_row_width_checked(self):
        with pytest.raises(ValueError):
            ResultTable(("a", "b"), [(1,)], {"k": "v"})

    def test_csv_bytes(self, tmp_path):
        t = ResultTable(("x", "flag"), [(0.5, True), (2, False)], {"k": "v"})
        path = tmp_path / "t.csv"
        t.to_csv(str(path))
        assert path.read_bytes() == b"x,flag\n0.5,1\n2,0\n"


class TestScenarios:
    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown scenario"):
            run_scenario("parallel-parking", ExperimentConfig())

    def test_arrival_histogram_shape(self):
        table = run_scenario("arrival-histogram", small_cfg())
        assert table.columns == ("hour", "count", "fraction")
        assert len(table.rows) == 24
        assert sum(r[1] for r in table.rows) == 2_000
        assert abs(sum(r[2] for r in table.rows) - 1.0) < 1e-9
        assert table.provenance["source"] == "synthetic"

    def test_utility_vs_type_lc_dominates_in_aggregate(self):
        table = run_scenario("utility-vs-type", small_cfg())
        cols = {c: i for i, c in enumerate(table.columns)}
        totals = {}
        for row in table.rows:
            totals.setdefault(row[cols["scheme"]], 0.0)
            totals[row[cols["scheme"]]] += row[cols["u_sr_term"]]
        for scheme, total in totals.items():
            assert totals["LC"] >= total - 1e-9, scheme

    def test_utility_vs_hour_lc_pv_zero(self):
        table = run_scenario("utility-vs-hour", small_cfg(n_types=2))
        cols = {c: i for i, c in enumerate(table.columns)}
        lc_rows = [r for r in table.rows if r[cols["scheme"]] == "LC"]
        assert len(lc_rows) == 24
        assert all(abs(r[cols["u_pv"]]) < 1e-8 for r in lc_rows)

    def test_contract_feasibility_diagonal(self):
        table = run_scenario("contract-feasibility", small_cfg())
        cols = {c: i for i, c in enumerate(table.columns)}
        for row in table.rows:
            if row[cols["type"]] == row[cols["item"]]:
                assert row[cols["is_choice"]]

    def test_detection_rate_columns(self):
        cfg = small_cfg(consensus=dataclasses.replace(
            ExperimentConfig().consensus, slots=8))
        table = run_scenario("detection-rate", cfg)
        assert table.columns == ("slot", "sl_rate", "lr_rate")
        assert all(0.0 <= r[1] <= 1.0 and 0.0 <= r[2] <= 1.0
                   for r in table.rows)


class TestCli:
    def test_success_writes_table_and_provenance(self, tmp_path):
        out = tmp_path / "run"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"arrivals": 1000}))
        rc = cli.main(["arrival-histogram", "--config", str(cfg),
                       "--out", str(out)])
        assert rc == 0
        assert (out / "arrival-histogram.csv").exists()
        prov = (out / "provenance.txt").read_text()
        assert "scenario=arrival-histogram" in prov
        assert "seed=0" in prov

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"arrivals": 1000}))
        argv = ["arrival-histogram", "--config", str(cfg)]
        rc1 = cli.main(argv + ["--out", str(tmp_path / "a")])
        rc2 = cli.main(argv + ["--out", str(tmp_path / "b")])
        assert rc1 == rc2 == 0
        assert ((tmp_path / "a" / "arrival-histogram.csv").read_bytes()
                == (tmp_path / "b" / "arrival-histogram.csv").read_bytes())

    def test_seed_override_changes_output(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"arrivals": 1000}))
        cli.main(["arrival-histogram", "--config", str(cfg),
                  "--out", str(tmp_path / "a")])
        cli.main(["arrival-histogram", "--config", str(cfg), "--seed", "99",
                  "--out", str(tmp_path / "b")])
        assert ((tmp_path / "a" / "arrival-histogram.csv").read_bytes()
                != (tmp_path / "b" / "arrival-histogram.csv").read_bytes())

    def test_bad_config_exits_two(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"s_bits": -1}))
        rc = cli.main(["arrival-histogram", "--config", str(cfg)])
        assert rc == 2
        assert "config error" in capsys.readouterr().err

    def test_unknown_scenario_exits_two(self, capsys):
        rc = cli.main(["parallel-parking"])
        assert rc == 2

    def test_missing_trace_exits_two(self, tmp_path, capsys):
        rc = cli.main(["arrival-histogram", "--trace",
                       str(tmp_path / "no.csv"), "--out", str(tmp_path)])
        assert rc == 2
        assert "trace" in capsys.readouterr().err

    def test_infeasible_exits_three(self, tmp_path, capsys, monkeypatch):
        def boom(name, cfg):
            raise InfeasibleProblem("no monotone menu exists")
        monkeypatch.setattr(cli, "run_scenario", boom)
        rc = cli.main(["utility-vs-type", "--out", str(tmp_path)])
        assert rc == 3
        assert "infeasible" in capsys.readouterr().err

    def test_trace_flows_into_histogram(self, tmp_path):
        trace = tmp_path / "trace.csv"
        trace.write_text("hour,duration\n" + "9,2.5\n" * 40 + "17,1.0\n" * 10)
        out = tmp_path / "run"
        rc = cli.main(["arrival-histogram", "--trace", str(trace),
                       "--out", str(out)])
        assert rc == 0
        lines = (out / "arrival-histogram.csv").read_text().splitlines()
        by_hour = {int(l.split(",")[0]): int(l.split(",")[1])
                   for l in lines[1:]}
        assert by_hour[9] == 40 and by_hour[17] == 10
        assert "source=trace" in (out / "provenance.txt").read_text()
