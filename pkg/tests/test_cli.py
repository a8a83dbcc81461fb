"""Tests for the batch CLI: config validation, modes, persistence, exit codes."""

import json
import math
import os

import numpy as np
import pytest

import fockforge.cli as cli
from fockforge.errors import LeakageExceeded


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return header, rows


LIGHT_OPTIMIZER = {
    "population_size": 6,
    "generations": 2,
    "elites": 2,
    "adam_pre_steps": 5,
    "adam_final_steps": 40,
}


class TestValidation:
    def test_missing_field_names_it(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "bad.json", {"mode": "optimize", "master_seed": 1})
        code = cli.run(cfg, out_dir=str(tmp_path / "out"))
        assert code == 2
        assert "physical" in capsys.readouterr().err

    def test_missing_depth_named(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, "bad.json",
            {"mode": "optimize", "master_seed": 1, "physical": {"target_n": 2}},
        )
        assert cli.run(cfg, out_dir=str(tmp_path / "out")) == 2
        assert "physical.depth" in capsys.readouterr().err

    def test_mode_mismatch(self, tmp_path, capsys):
        cfg = write_config(tmp_path, "m.json", {"mode": "noise", "master_seed": 1})
        assert cli.main(["optimize", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "mode" in capsys.readouterr().err

    def test_unreadable_config(self, tmp_path, capsys):
        assert cli.run(str(tmp_path / "nope.json")) == 2
        assert "not found" in capsys.readouterr().err

    def test_unknown_optimizer_field(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, "bad.json",
            {
                "mode": "optimize", "master_seed": 1,
                "physical": {"target_n": 2, "depth": 1},
                "optimizer": {"polulation_size": 8},
            },
        )
        assert cli.run(cfg, out_dir=str(tmp_path / "out")) == 2
        assert "polulation_size" in capsys.readouterr().err


class TestSimulationErrorExitCode:
    def test_leakage_maps_to_exit_3(self, tmp_path, capsys, monkeypatch):
        def boom(cfg, out_dir, base_dir=""):
            raise LeakageExceeded(1e-3, 1e-6)

        monkeypatch.setitem(cli._HANDLERS, "simulate", boom)
        cfg = write_config(
            tmp_path, "sim.json",
            {"mode": "simulate", "master_seed": 1, "physical": {"target_n": 2}},
        )
        assert cli.run(cfg, out_dir=str(tmp_path / "out")) == 3
        assert "LeakageExceeded" in capsys.readouterr().err


class TestWignerMode:
    def test_single_photon_grid(self, tmp_path):
        cfg = write_config(
            tmp_path, "wigner.json",
            {
                "mode": "wigner", "master_seed": 1,
                "wigner": {
                    "state": {"type": "fock", "n": 1},
                    "grid": {"min": -3.0, "max": 3.0, "step": 0.05},
                },
            },
        )
        out = tmp_path / "wig"
        assert cli.run(cfg, out_dir=str(out)) == 0
        header, rows = read_csv(out / "wigner_grid.csv")
        assert header == ["x", "p", "w"]
        assert len(rows) == 121 * 121
        values = {(float(r[0]), float(r[1])): float(r[2]) for r in rows}
        origin_key = min(values, key=lambda k: abs(k[0]) + abs(k[1]))
        assert abs(origin_key[0]) < 1e-9 and abs(origin_key[1]) < 1e-9
        origin = values[origin_key]
        assert origin == pytest.approx(-2 / math.pi, abs=1e-9)
        assert origin == min(values.values())


@pytest.fixture(scope="module")
def optimize_run(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("opt")
    cfg = write_config(
        tmp_path, "opt.json",
        {
            "mode": "optimize",
            "master_seed": 77,
            "physical": {"target_n": 2, "depth": 1, "revival_index": 0, "omega": 1.0},
            "optimizer": LIGHT_OPTIMIZER,
        },
    )
    out = tmp_path / "out"
    assert cli.run(cfg, out_dir=str(out)) == 0
    return tmp_path, out


class TestOptimizeSimulateRoundTrip:
    def test_report_written(self, optimize_run):
        _, out = optimize_run
        report = json.loads((out / "run_report.json").read_text())
        assert report["code_version"]
        assert report["master_seed"] == 77
        assert 0.0 <= report["quality"]["fidelity_postselected"] <= 1.0
        assert report["leakage"]["max_top_population"] <= 1e-6
        assert (out / "fitness_trace.csv").exists()
        assert (out / "number_distributions.csv").exists()
        assert (out / "layer_1_rho_magnitude.csv").exists()

    def test_simulate_replays_stored_fidelity(self, optimize_run, tmp_path):
        run_dir, out = optimize_run
        sim_cfg = write_config(
            tmp_path, "sim.json",
            {
                "mode": "simulate",
                "master_seed": 77,
                "physical": {"target_n": 2, "omega": 1.0},
                "sequence": {"report": str(out / "run_report.json")},
            },
        )
        sim_out = tmp_path / "sim_out"
        assert cli.run(sim_cfg, out_dir=str(sim_out)) == 0
        report = json.loads((sim_out / "run_report.json").read_text())
        assert report["replay_deviation"] <= 1e-9

    def test_csv_round_trips_full_precision(self, optimize_run):
        _, out = optimize_run
        report = json.loads((out / "run_report.json").read_text())
        header, rows = read_csv(out / "fitness_trace.csv")
        for row, best, mean in zip(
            rows, report["optimization"]["best_fitness"],
            report["optimization"]["mean_fitness"],
        ):
            assert float(row[1]) == best
            assert float(row[2]) == mean


INLINE_SEQUENCE = {
    "taus": [1.5, 0.8],
    "betas_re": [0.3, -0.2],
    "betas_im": [0.0, 0.1],
    "phi0": 1.0,
    "phi1": 0.2,
    "revival_index": 1,
}


class TestAnalysisModes:
    def test_detuning_mode(self, tmp_path):
        cfg = write_config(
            tmp_path, "det.json",
            {
                "mode": "detuning", "master_seed": 3,
                "physical": {"target_n": 3, "omega": 1.0},
                "sequence": INLINE_SEQUENCE,
                "detuning": {"deltas": [-0.2, -0.1, 0.0, 0.1, 0.2]},
            },
        )
        out = tmp_path / "det_out"
        assert cli.run(cfg, out_dir=str(out)) == 0
        header, rows = read_csv(out / "detuning_scan.csv")
        assert header == ["delta", "fidelity_postselected"]
        assert len(rows) == 5
        report = json.loads((out / "run_report.json").read_text())
        assert "fwhm" in report

    def test_noise_mode_grid(self, tmp_path):
        cfg = write_config(
            tmp_path, "noise.json",
            {
                "mode": "noise", "master_seed": 3,
                "physical": {"target_n": 3, "omega": 1.0},
                "sequence": INLINE_SEQUENCE,
                "noise": {
                    "realizations": 10,
                    "sigma_tau_grid": [0.0, 0.02],
                    "sigma_beta_grid": [0.0, 0.02],
                },
            },
        )
        out = tmp_path / "noise_out"
        assert cli.run(cfg, out_dir=str(out)) == 0
        header, rows = read_csv(out / "noise_grid.csv")
        assert header == ["sigma_tau", "sigma_beta", "mean_fidelity", "stderr"]
        assert len(rows) == 4
        zero_row = [r for r in rows if float(r[0]) == 0.0 and float(r[1]) == 0.0][0]
        assert float(zero_row[3]) == 0.0  # no spread without noise

    def test_lindblad_mode(self, tmp_path):
        cfg = write_config(
            tmp_path, "lind.json",
            {
                "mode": "lindblad", "master_seed": 3,
                "physical": {"target_n": 3, "omega": 1.0},
                "sequence": INLINE_SEQUENCE,
                "lindblad": {"kappa": 0.02, "gamma": 0.01, "dt": 0.004},
            },
        )
        out = tmp_path / "lind_out"
        assert cli.run(cfg, out_dir=str(out)) == 0
        report = json.loads((out / "run_report.json").read_text())
        assert 0.0 <= report["quality_dissipative"]["fidelity_postselected"] <= 1.0
        assert "quality_unitary" in report

    def test_lindblad_missing_dt_named(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, "lind.json",
            {
                "mode": "lindblad", "master_seed": 3,
                "physical": {"target_n": 3, "omega": 1.0},
                "sequence": INLINE_SEQUENCE,
                "lindblad": {"kappa": 0.02, "gamma": 0.01},
            },
        )
        assert cli.run(cfg, out_dir=str(tmp_path / "o")) == 2
        assert "lindblad.dt" in capsys.readouterr().err


class TestSweepMode:
    def test_small_sweep(self, tmp_path):
        cfg = write_config(
            tmp_path, "sweep.json",
            {
                "mode": "sweep",
                "master_seed": 5,
                "physical": {"omega": 1.0},
                "optimizer": LIGHT_OPTIMIZER,
                "sweep": {"target_ns": [2], "depths": [1, 2], "revival_indices": 0},
            },
        )
        out = tmp_path / "out"
        assert cli.sweep(cfg, out_dir=str(out)) == 0
        header, rows = read_csv(out / "sweep_table.csv")
        assert len(rows) == 2
        _, best_rows = read_csv(out / "sweep_best.csv")
        assert len(best_rows) == 1
        best_fid = float(best_rows[0][3])
        per_depth = [float(r[4]) for r in rows]
        assert best_fid == max(per_depth)  # best-of includes every listed depth

    def test_worker_count_does_not_change_results(self, tmp_path):
        payload = {
            "mode": "sweep",
            "master_seed": 9,
            "physical": {"omega": 1.0},
            "optimizer": LIGHT_OPTIMIZER,
            "sweep": {"target_ns": [2], "depths": [1], "revival_indices": 0},
        }
        cfg = write_config(tmp_path, "sweep.json", payload)
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        assert cli.sweep(cfg, out_dir=str(out1), workers=1) == 0
        assert cli.sweep(cfg, out_dir=str(out2), workers=2) == 0
        r1 = json.loads((out1 / "sweep_report.json").read_text())
        r2 = json.loads((out2 / "sweep_report.json").read_text())
        r1.pop("wall_time"), r2.pop("wall_time")
        assert r1 == r2
        assert (out1 / "sweep_table.csv").read_bytes() == (out2 / "sweep_table.csv").read_bytes()
