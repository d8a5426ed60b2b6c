"""End-to-end command-line checks: exit codes, provenance, determinism."""

import json
from pathlib import Path

import pytest

from hevqe.cli import main
from hevqe.config import ConfigError, parse_config
from hevqe.pauli import QubitHamiltonian

DATA = Path(__file__).resolve().parent.parent / "data" / "integrals"
H2_FILE = DATA / "h2_0.735.fcidump"


def write_config(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def optimize_config(tmp_path, out, seed=3, budget=400, extra=""):
    return write_config(
        tmp_path,
        f"""
scenario: optimize
seed: {seed}
runs: 2
out: {out}
problem:
  integral_file: {H2_FILE}
ansatz:
  depth: 1
  topology: experimental_2q
  entangler_kind: ideal_zx
study:
  budget: {budget}
{extra}
""",
    )


def drop_wall_time(payload):
    return {k: v for k, v in payload.items() if k != "wall_time"}


class TestExitCodes:
    def test_success(self, tmp_path):
        cfg = optimize_config(tmp_path, tmp_path / "out")
        assert main(["optimize", "--config", cfg]) == 0

    def test_unknown_top_level_key(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "scenario: optimize\nshots: 5\n")
        assert main(["optimize", "--config", cfg]) == 2
        assert "unknown key shots" in capsys.readouterr().err

    def test_unknown_nested_key(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            f"""
scenario: optimize
problem:
  integral_file: {H2_FILE}
sampling:
  shotz: 10
""",
        )
        assert main(["optimize", "--config", cfg]) == 2
        assert "sampling.shotz" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.yaml")
        assert main(["optimize", "--config", missing]) == 2
        assert "cannot read config" in capsys.readouterr().err

    def test_scenario_command_mismatch(self, tmp_path, capsys):
        cfg = optimize_config(tmp_path, tmp_path / "out")
        assert main(["sweep", "--config", cfg]) == 2
        assert "scenario" in capsys.readouterr().err

    def test_missing_hamiltonian_file(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            f"""
scenario: optimize
out: {tmp_path / 'out'}
problem:
  hamiltonian_file: {tmp_path / 'absent.txt'}
""",
        )
        assert main(["optimize", "--config", cfg]) == 2
        assert "not found" in capsys.readouterr().err

    def test_malformed_integral_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.fcidump"
        bad.write_text("&FCI NORB=4 NELEC=2 MS2=0\nnot numbers here\n")
        cfg = write_config(
            tmp_path,
            f"""
scenario: map
out: {tmp_path / 'out'}
problem:
  integral_file: {bad}
""",
        )
        assert main(["map", "--config", cfg]) == 2
        err = capsys.readouterr().err
        assert "bad.fcidump" in err and "line" in err

    def test_runtime_failure_flushes_error_report(self, tmp_path, capsys):
        flat = tmp_path / "flat.txt"
        flat.write_text("0.5\tII\n")
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            f"""
scenario: optimize
out: {out}
runs: 2
problem:
  hamiltonian_file: {flat}
study:
  budget: 400
""",
        )
        assert main(["optimize", "--config", cfg]) == 1
        assert "flat" in capsys.readouterr().err
        payload = json.loads((out / "error.json").read_text())
        assert payload["completed_runs"] == []
        assert len(payload["provenance"]["config_sha256"]) == 64


class TestOptimizeOutputs:
    def test_summary_and_traces(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = optimize_config(tmp_path, out)
        assert main(["optimize", "--config", cfg]) == 0
        stdout = capsys.readouterr().out
        assert "chemical accuracy" in stdout
        summary = json.loads((out / "summary.json").read_text())
        assert summary["exact_reference"] == pytest.approx(-1.13730604, abs=1e-6)
        assert summary["E_f"] == min(summary["energies"])
        assert len(summary["energies"]) == 2
        for run in range(2):
            trace = json.loads((out / f"trace_run{run}.json").read_text())
            assert trace["run"] == run
            assert trace["provenance"] == summary["provenance"]
            assert trace["iterations"]

    def test_same_seed_twice_identical_modulo_wall_time(self, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        cfg = optimize_config(tmp_path, tmp_path / "unused")
        assert main(["optimize", "--config", cfg, "--out", str(out_a)]) == 0
        assert main(["optimize", "--config", cfg, "--out", str(out_b)]) == 0
        for run in range(2):
            first = json.loads((out_a / f"trace_run{run}.json").read_text())
            second = json.loads((out_b / f"trace_run{run}.json").read_text())
            assert drop_wall_time(first) == drop_wall_time(second)

    def test_seed_flag_overrides_config(self, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        cfg = optimize_config(tmp_path, tmp_path / "unused")
        assert main(["optimize", "--config", cfg, "--out", str(out_a)]) == 0
        assert (
            main(["optimize", "--config", cfg, "--out", str(out_b), "--seed", "99"])
            == 0
        )
        first = json.loads((out_a / "trace_run0.json").read_text())
        second = json.loads((out_b / "trace_run0.json").read_text())
        assert first["seed"] != second["seed"]

    def test_thread_count_does_not_change_results(self, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        cfg = optimize_config(tmp_path, tmp_path / "unused")
        assert main(["optimize", "--config", cfg, "--out", str(out_a),
                     "--threads", "1"]) == 0
        assert main(["optimize", "--config", cfg, "--out", str(out_b),
                     "--threads", "3"]) == 0
        for run in range(2):
            first = json.loads((out_a / f"trace_run{run}.json").read_text())
            second = json.loads((out_b / f"trace_run{run}.json").read_text())
            assert drop_wall_time(first) == drop_wall_time(second)


class TestMapAndGroup:
    @pytest.mark.parametrize("scheme", ["parity", "binary_tree"])
    def test_map_writes_provenance_header(self, tmp_path, scheme):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            f"""
scenario: map
out: {out}
problem:
  integral_file: {H2_FILE}
  scheme: {scheme}
""",
        )
        assert main(["map", "--config", cfg]) == 0
        text = (out / "hamiltonian.txt").read_text()
        assert f"# scheme: {scheme}" in text
        assert "# sector: m=2" in text
        assert "# terms: 4" in text
        assert "# tpb_sets: 2" in text
        hq = QubitHamiltonian.from_text(text)
        assert hq.n == 2
        assert hq.term_count == 4

    def test_map_accepts_other_scenario_configs(self, tmp_path):
        out = tmp_path / "out"
        cfg = optimize_config(tmp_path, tmp_path / "unused")
        assert main(["map", "--config", cfg, "--out", str(out)]) == 0
        assert (out / "hamiltonian.txt").exists()

    def test_group_partitions_terms_once(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            f"""
scenario: group
out: {out}
problem:
  integral_file: {DATA / 'lih_1.595.fcidump'}
  frozen_pairs: 1
""",
        )
        assert main(["group", "--config", cfg]) == 0
        text = (out / "grouping.txt").read_text()
        assert "# tpb_sets: 25" in text
        indices = [
            int(line.split()[0])
            for line in text.splitlines()
            if line.startswith("  ")
        ]
        assert sorted(indices) == list(range(99))


class TestHeisenbergCommand:
    def test_field_only_point(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path,
            f"""
scenario: heisenberg
seed: 11
runs: 2
out: {out}
problem:
  heisenberg:
    j: 0.0
    b: 1.0
ansatz:
  depth: 0
study:
  budget: 500
""",
        )
        assert main(["heisenberg", "--config", cfg]) == 0
        report = json.loads((out / "report.json").read_text())
        point = report["points"][0]
        assert point["exact_reference"] == pytest.approx(-4.0, abs=1e-12)
        assert min(point["energies"]) == pytest.approx(-4.0, abs=0.05)
        assert all("m_z" in obs for obs in point["observables"])
        lines = (out / "report.csv").read_text().splitlines()
        assert lines[0].startswith("# config_sha256:")
        assert len(lines) == 5  # two comments, header, one row per run


class TestReportCommand:
    def _make_report(self, tmp_path):
        out = tmp_path / "heis_out"
        cfg = write_config(
            tmp_path,
            f"""
scenario: heisenberg
seed: 2
runs: 2
out: {out}
problem:
  heisenberg:
    j: 0.0
    b: 1.0
ansatz:
  depth: 0
study:
  budget: 300
""",
            name="heis.yaml",
        )
        assert main(["heisenberg", "--config", cfg]) == 0
        return out / "report.json"

    def test_single_trace_one_row(self, tmp_path):
        out = tmp_path / "opt_out"
        cfg = optimize_config(tmp_path, out)
        assert main(["optimize", "--config", cfg]) == 0
        rep = tmp_path / "rep"
        assert main(
            ["report", str(out / "trace_run0.json"), "--out", str(rep)]
        ) == 0
        rows = [
            line
            for line in (rep / "report.csv").read_text().splitlines()
            if line and not line.startswith("#")
        ]
        assert len(rows) == 2  # header plus one data row
        assert (rep / "trace.png").exists()

    def test_report_renders_figure_and_percentiles(self, tmp_path):
        report_file = self._make_report(tmp_path)
        rep = tmp_path / "rep"
        assert main(["report", str(report_file), "--out", str(rep)]) == 0
        assert (rep / "report.png").exists()
        lines = (rep / "percentiles.csv").read_text().splitlines()
        assert lines[2].split(",")[0] == "scenario"
        assert len(lines) == 4

    def test_report_byte_deterministic(self, tmp_path):
        report_file = self._make_report(tmp_path)
        rep_a = tmp_path / "rep_a"
        rep_b = tmp_path / "rep_b"
        assert main(["report", str(report_file), "--out", str(rep_a)]) == 0
        assert main(["report", str(report_file), "--out", str(rep_b)]) == 0
        assert (rep_a / "report.png").read_bytes() == (rep_b / "report.png").read_bytes()
        assert (rep_a / "report.csv").read_bytes() == (rep_b / "report.csv").read_bytes()
        assert (
            (rep_a / "percentiles.csv").read_bytes()
            == (rep_b / "percentiles.csv").read_bytes()
        )

    def test_mixed_inputs_rejected(self, tmp_path, capsys):
        report_file = self._make_report(tmp_path)
        out = tmp_path / "opt_out"
        cfg = optimize_config(tmp_path, out)
        assert main(["optimize", "--config", cfg]) == 0
        assert (
            main(
                [
                    "report",
                    str(report_file),
                    str(out / "trace_run0.json"),
                    "--out",
                    str(tmp_path / "rep"),
                ]
            )
            == 2
        )
        assert "cannot mix" in capsys.readouterr().err

    def test_mixed_scenarios_rejected(self, tmp_path, capsys):
        report_file = self._make_report(tmp_path)
        altered = json.loads(report_file.read_text())
        altered["scenario"] = "dissociation"
        other = tmp_path / "other.json"
        other.write_text(json.dumps(altered))
        assert (
            main(
                [
                    "report",
                    str(report_file),
                    str(other),
                    "--out",
                    str(tmp_path / "rep"),
                ]
            )
            == 2
        )
        assert "mix scenarios" in capsys.readouterr().err

    def test_junk_input_rejected(self, tmp_path, capsys):
        junk = tmp_path / "junk.json"
        junk.write_text("{\"neither\": true}")
        assert main(["report", str(junk), "--out", str(tmp_path / "rep")]) == 2
        assert "neither" in capsys.readouterr().err


class TestConfigParsing:
    def test_deep_unknown_key(self):
        data = {"scenario": "heisenberg", "problem": {"heisenberg": {"coupling": 2}}}
        with pytest.raises(ConfigError, match="problem.heisenberg.coupling"):
            parse_config(data)

    def test_duplicate_edge_rejected(self):
        data = {
            "scenario": "heisenberg",
            "problem": {"heisenberg": {"edges": [[0, 1], [1, 0]]}},
        }
        with pytest.raises(ConfigError, match="duplicate edge"):
            parse_config(data)

    def test_thermal_time_constraint(self):
        data = {
            "scenario": "optimize",
            "problem": {"hamiltonian_file": "x"},
            "noise": {"kind": "thermal", "t1": 1e-6, "t2_star": 5e-6},
        }
        with pytest.raises(ConfigError, match="t2_star"):
            parse_config(data)

    def test_integral_files_distance_parsing(self):
        data = {
            "scenario": "sweep",
            "problem": {"integral_files": ["a/h2_0.735.fcidump", [1.0, "b.f"]]},
        }
        cfg = parse_config(data)
        assert cfg.problem.integral_files == (
            (0.735, "a/h2_0.735.fcidump"),
            (1.0, "b.f"),
        )

    def test_seed_must_fit_64_bits(self):
        data = {
            "scenario": "optimize",
            "seed": 2**64,
            "problem": {"hamiltonian_file": "x"},
        }
        with pytest.raises(ConfigError, match="64 bits"):
            parse_config(data)

    def test_two_sources_rejected(self):
        data = {
            "scenario": "optimize",
            "problem": {"hamiltonian_file": "x", "integral_file": "y"},
        }
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(data)

    def test_bool_is_not_an_integer(self):
        data = {
            "scenario": "optimize",
            "runs": True,
            "problem": {"hamiltonian_file": "x"},
        }
        with pytest.raises(ConfigError, match="expected an integer"):
            parse_config(data)

    def test_tier_budget_defaults(self):
        base = {"scenario": "optimize", "problem": {"hamiltonian_file": "x"}}
        smoke = parse_config(base)
        paper = parse_config({**base, "tier": "paper"})
        assert smoke.budget < paper.budget
        assert smoke.run_count <= paper.run_count


class TestEnvironmentOverrides:
    def test_out_env_and_flag_precedence(self, tmp_path, monkeypatch):
        env_out = tmp_path / "env_out"
        flag_out = tmp_path / "flag_out"
        monkeypatch.setenv("HEVQE_OUT", str(env_out))
        cfg = write_config(
            tmp_path,
            f"""
scenario: map
out: {tmp_path / 'config_out'}
problem:
  integral_file: {H2_FILE}
""",
        )
        assert main(["map", "--config", cfg]) == 0
        assert (env_out / "hamiltonian.txt").exists()
        assert main(["map", "--config", cfg, "--out", str(flag_out)]) == 0
        assert (flag_out / "hamiltonian.txt").exists()

    def test_bad_thread_env_rejected(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("HEVQE_THREADS", "lots")
        cfg = optimize_config(tmp_path, tmp_path / "out")
        assert main(["optimize", "--config", cfg]) == 2
        assert "HEVQE_THREADS" in capsys.readouterr().err
