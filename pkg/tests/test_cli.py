"""
End-to-end tests of the command-line runner: reports, determinism and exit codes.
"""

import csv
import json
import math

import pytest
from pydantic import ValidationError

from cli.commands import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, EXIT_OVERFLOW, build_parser, load_config, main
from cli.models import QetParams

QUICK_CONCENTRATION = ["--n1", "4", "--n2", "64", "--trials", "2000"]
QUICK_QET = ["--n-times", "300"]


def run_cli(*argv):
    return main([str(arg) for arg in argv])


def read_summary(out_dir):
    return json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))


def read_table(path):
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


def report_bytes(out_dir):
    """Every deterministic report file; run_meta.json holds wall time and is excluded."""
    return {path.name: path.read_bytes() for path in sorted(out_dir.iterdir()) if path.name != "run_meta.json"}


# ═══════════════════════════════════════════════════════════════════
# Config loading
# ═══════════════════════════════════════════════════════════════════


class TestConfigLoading:

    def test_flags_override_file(self, tmp_path):
        config_file = tmp_path / "run.json"
        config_file.write_text(json.dumps({"seed": 7, "measure": {"theta": 0.3, "n_spins": 12}}))
        args = build_parser().parse_args(["measure", "--config", str(config_file), "--n-spins", "20"])
        config = load_config(args)
        assert config.seed == 7
        assert config.measure.theta == 0.3
        assert config.measure.n_spins == 20

    def test_schmidt_dimensions_go_to_their_section(self):
        config = load_config(build_parser().parse_args(["schmidt", "--n1", "2", "--n2", "5"]))
        assert (config.schmidt.n1, config.schmidt.n2) == (2, 5)
        assert config.concentration.n1 == 4

    def test_epsilon_list_from_flag(self):
        config = load_config(build_parser().parse_args(["concentration", "--epsilons", "0.05,0.1"]))
        assert config.concentration.epsilons == [0.05, 0.1]

    def test_provenance_omits_machine_details(self):
        config = load_config(build_parser().parse_args(["measure", "--threads", "4", "--out", "x"]))
        provenance = config.provenance()
        assert "threads" not in provenance and "out" not in provenance
        assert provenance["experiment"] == "measure"


# ═══════════════════════════════════════════════════════════════════
# Experiments
# ═══════════════════════════════════════════════════════════════════


class TestExperiments:

    def test_concentration_reports(self, tmp_path):
        assert run_cli("concentration", *QUICK_CONCENTRATION, "--out", tmp_path) == EXIT_OK
        rows = read_table(tmp_path / "concentration_bounds.csv")
        assert len(rows) == 9
        assert {row["kind"] for row in rows} == {"diagonal_re", "off_diagonal_re", "off_diagonal_im"}
        summary = read_summary(tmp_path)
        assert summary["passed"] is True
        assert summary["config"]["concentration"]["trials"] == 2000
        assert (tmp_path / "concentration_mean_rho.csv").exists()
        assert (tmp_path / "run_meta.json").exists()

    def test_measure_overlap(self, tmp_path, capsys):
        assert run_cli("measure", "--theta", "0.451", "--n-spins", "50", "--out", tmp_path) == EXIT_OK
        summary = read_summary(tmp_path)
        assert summary["headline"]["branch_overlap"] == pytest.approx(0.00515, abs=2e-5)
        assert "branch_overlap" in capsys.readouterr().out
        rows = read_table(tmp_path / "measure_overlap.csv")
        assert [int(row["n_spins"]) for row in rows] == [1, 2, 5, 10, 20, 40, 50]

    def test_measure_near_right_angle(self, tmp_path):
        theta = 1.57079632
        assert run_cli("measure", "--theta", str(theta), "--n-spins", "50", "--out", tmp_path) == EXIT_OK
        rows = read_table(tmp_path / "measure_overlap.csv")
        last = rows[-1]
        assert int(last["n_spins"]) == 50
        assert float(last["log_overlap"]) == pytest.approx(50 * math.log(abs(math.cos(theta))), rel=1e-6)

    def test_measure_complex_amplitudes(self, tmp_path):
        assert run_cli("measure", "--c-plus", "0.6", "--c-minus", "0.8j", "--n-spins", "8",
                       "--out", tmp_path) == EXIT_OK
        assert read_summary(tmp_path)["headline"]["qubit_coherence"] == pytest.approx(
            0.48 * abs(math.cos(0.451)) ** 8, abs=1e-12)

    def test_schmidt(self, tmp_path):
        assert run_cli("schmidt", "--n1", "3", "--n2", "4", "--samples", "50", "--out", tmp_path) == EXIT_OK
        assert len(read_table(tmp_path / "schmidt_states.csv")) == 50
        assert read_summary(tmp_path)["passed"] is True

    def test_qet(self, tmp_path):
        assert run_cli("qet", *QUICK_QET, "--out", tmp_path) == EXIT_OK
        summary = read_summary(tmp_path)
        headline = summary["headline"]
        assert headline["dimension"] == 56
        assert sum(headline["cell_dimensions"]) == headline["shell_dimension"] == 26
        assert headline["ergodic_fraction"] >= 0.9
        assert headline["late_superposition_fraction"] >= 0.9
        assert headline["time_average_error"] <= 1e-3
        assert len(read_table(tmp_path / "qet_weights.csv")) == 300
        hard = {check["name"]: check["passed"] for check in summary["checks"] if check["hard"]}
        assert hard == {"spectrum_nondegenerate": True, "energy_conserved": True,
                        "time_average_within_window_bound": True, "time_average_matches_diagonal_ensemble": True,
                        "ergodic_fraction": True, "late_macroscopic_superposition": True}


# ═══════════════════════════════════════════════════════════════════
# Determinism
# ═══════════════════════════════════════════════════════════════════


class TestDeterminism:

    def test_same_seed_same_bytes(self, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        assert run_cli("concentration", *QUICK_CONCENTRATION, "--seed", "5", "--out", first) == EXIT_OK
        assert run_cli("concentration", *QUICK_CONCENTRATION, "--seed", "5", "--out", second) == EXIT_OK
        assert report_bytes(first) == report_bytes(second)

    def test_thread_count_does_not_change_reports(self, tmp_path):
        single, pooled = tmp_path / "single", tmp_path / "pooled"
        assert run_cli("concentration", *QUICK_CONCENTRATION, "--threads", "1", "--out", single) == EXIT_OK
        assert run_cli("concentration", *QUICK_CONCENTRATION, "--threads", "4", "--out", pooled) == EXIT_OK
        assert report_bytes(single) == report_bytes(pooled)
        meta = json.loads((pooled / "run_meta.json").read_text(encoding="utf-8"))
        assert meta["threads"] == 4

    def test_qet_thread_count(self, tmp_path):
        single, pooled = tmp_path / "single", tmp_path / "pooled"
        assert run_cli("qet", *QUICK_QET, "--threads", "1", "--out", single) == EXIT_OK
        assert run_cli("qet", *QUICK_QET, "--threads", "3", "--out", pooled) == EXIT_OK
        assert report_bytes(single) == report_bytes(pooled)

    def test_different_seeds_differ(self, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        run_cli("concentration", *QUICK_CONCENTRATION, "--seed", "1", "--out", first)
        run_cli("concentration", *QUICK_CONCENTRATION, "--seed", "2", "--out", second)
        name = "concentration_bounds.csv"
        assert (first / name).read_bytes() != (second / name).read_bytes()


# ═══════════════════════════════════════════════════════════════════
# Exit codes
# ═══════════════════════════════════════════════════════════════════


class TestExitCodes:

    def test_too_few_trials(self, tmp_path, capsys):
        assert run_cli("concentration", "--trials", "10", "--out", tmp_path) == EXIT_CONFIG
        assert "trials" in capsys.readouterr().err

    def test_unsorted_epsilons(self, tmp_path):
        assert run_cli("concentration", "--epsilons", "0.2,0.1", "--out", tmp_path) == EXIT_CONFIG

    def test_unknown_config_key(self, tmp_path):
        config_file = tmp_path / "run.json"
        config_file.write_text(json.dumps({"measure": {"spins": 3}}))
        assert run_cli("measure", "--config", config_file, "--out", tmp_path) == EXIT_CONFIG

    def test_broken_config_file(self, tmp_path):
        config_file = tmp_path / "run.json"
        config_file.write_text("{not json")
        assert run_cli("measure", "--config", config_file, "--out", tmp_path) == EXIT_CONFIG

    def test_unnormalised_qubit(self, tmp_path):
        assert run_cli("measure", "--c-plus", "1", "--c-minus", "1", "--out", tmp_path) == EXIT_CONFIG

    def test_concentration_overflow(self, tmp_path):
        assert run_cli("concentration", "--n1", "100", "--n2", "100", "--out", tmp_path) == EXIT_OVERFLOW

    def test_ball_gas_overflow(self, tmp_path):
        assert run_cli("qet", "--sites", "20", "--n-gas", "2", "--out", tmp_path) == EXIT_OVERFLOW

    def test_empty_shell_is_a_config_error(self, tmp_path):
        assert run_cli("qet", "--shell-lo", "100", "--shell-hi", "101", "--out", tmp_path) == EXIT_CONFIG

    def test_cells_must_divide_the_lattice(self, tmp_path):
        assert run_cli("qet", "--cells", "3", "--out", tmp_path) == EXIT_CONFIG
        with pytest.raises(ValidationError):
            QetParams(cells=3)
        assert QetParams(cells=2).cells == 2

    def test_exit_codes_are_distinct(self):
        assert len({EXIT_OK, EXIT_CONFIG, EXIT_OVERFLOW, EXIT_CHECK_FAILED}) == 4
