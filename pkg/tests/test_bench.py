"""Benchmark harness: config parsing, experiment sweeps, CSV and manifest
output, and the command-line entry point."""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

import polysn.bench as bench
from polysn import (
    ExperimentConfig,
    Rectangle,
    apply_overrides,
    default_config_text,
    emit_csv,
    load_config,
    mesh_stats,
    parse_config,
    run_experiment,
    write_manifest,
    write_variant_csvs,
)
from polysn.bench import CSV_COLUMNS
from polysn.cli import main

TINY = ExperimentConfig(
    name="tiny",
    n_cells=16,
    lloyd_iterations=4,
    seed=7,
    degree=1,
    n_ordinates=4,
    sigma_t=(1.0,),
    scattering_ratio=(0.999,),
    variants=("none", "mip-dirichlet"),
    cap=60,
)

TINY_INI = """\
[experiment]
name = tiny
domain = 0 0 10 10
cells = 16
lloyd_iterations = 4
seed = 7
degree = 1
ordinates = 4
sigma_t = 1.0
scattering_ratio = 0.999
variants = none mip-marshak
cap = 60
"""

TIMING_COLUMNS = {
    "sweep_time",
    "dsa_source_time",
    "dsa_solve_time",
    "update_time",
    "total_time",
}


@pytest.fixture(scope="module")
def tiny_rows():
    return run_experiment(TINY)


class TestConfigParsing:
    def test_default_round_trip(self):
        text = default_config_text()
        config = parse_config(text)
        assert config.name == "baseline"
        assert config.domain == Rectangle(0.0, 0.0, 10.0, 10.0)
        assert config.n_cells == 256
        assert config.lloyd_iterations == 10
        assert config.seed == 2025
        assert config.degree == 1
        assert config.n_ordinates == 16
        assert len(config.sigma_t) == 20
        assert config.sigma_t[0] == pytest.approx(1e-3)
        assert config.sigma_t[-1] == pytest.approx(1e6)
        assert config.scattering_ratio == (0.999,)
        assert config.variants == bench.VARIANT_NAMES
        assert config.tolerance == 1e-12
        assert config.cap == 50
        assert config.penalty_prefactor == 10.0
        assert config.threads == 1
        assert config.out_dir == "results"
        assert config.reference_cap == 250_000
        assert config.source_text == text

    def test_log_grid_is_log_spaced(self):
        config = parse_config(default_config_text())
        ratios = np.diff(np.log(config.sigma_t))
        assert np.allclose(ratios, ratios[0])

    def test_explicit_sigma_list(self):
        config = parse_config(TINY_INI)
        assert config.sigma_t == (1.0,)
        assert config.variants == ("none", "mip-marshak")

    def test_inline_comments(self):
        config = parse_config(
            "[experiment]\ncells = 16 ; keep it small\nsigma_t = 1.0\n"
        )
        assert config.n_cells == 16

    def test_missing_section(self):
        with pytest.raises(ValueError):
            parse_config("[other]\ncells = 4\n")

    def test_both_sigma_keys(self):
        with pytest.raises(ValueError):
            parse_config(
                "[experiment]\nsigma_t = 1.0\nsigma_t_log = 0.1 10 3\n"
            )

    def test_bad_domain(self):
        with pytest.raises(ValueError):
            parse_config("[experiment]\ndomain = 0 0 10\n")

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            ExperimentConfig(variants=("none", "bip-dirichlet"))

    def test_ratio_out_of_range(self):
        with pytest.raises(ValueError):
            ExperimentConfig(scattering_ratio=(0.0,))
        with pytest.raises(ValueError):
            ExperimentConfig(scattering_ratio=(1.5,))

    def test_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            ExperimentConfig(sigma_t=(1.0, -2.0))

    def test_empty_variants(self):
        with pytest.raises(ValueError):
            ExperimentConfig(variants=())

    def test_too_few_ordinates(self):
        with pytest.raises(ValueError):
            ExperimentConfig(n_ordinates=1)

    def test_load_config_reads_file(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text(TINY_INI)
        config = load_config(path)
        assert config.name == "tiny"
        assert config.source_text == TINY_INI


class TestOverrides:
    def test_no_op_returns_same_object(self):
        config = parse_config(TINY_INI)
        assert apply_overrides(config) is config

    def test_fields_replaced(self):
        config = parse_config(TINY_INI)
        out = apply_overrides(config, out_dir="elsewhere", seed=11, threads=2,
                              cap=9, tol=1e-8)
        assert out.out_dir == "elsewhere"
        assert out.seed == 11
        assert out.threads == 2
        assert out.cap == 9
        assert out.tolerance == 1e-8
        # untouched fields survive
        assert out.n_cells == config.n_cells
        assert out.sigma_t == config.sigma_t


class TestRunExperiment:
    def test_row_grid(self, tiny_rows):
        assert len(tiny_rows) == 2
        assert [r["variant"] for r in tiny_rows] == ["none", "mip-dirichlet"]
        for row in tiny_rows:
            assert set(row) == set(CSV_COLUMNS)
            assert row["status"] == "ok"
            assert row["reference_kind"] == "direct"
            assert row["n_cells"] == 16
            assert row["n_ordinates"] == 4
            assert row["scalar"] == 1.0
            assert row["h"] > 0.0
            assert row["eta"] >= 1.0
            assert 0.0 < row["spectral_radius"] < 1.0
            assert row["termination"] in ("tolerance", "cap")
            assert row["error_final"] < row["error_initial"]

    def test_acceleration_visible_in_rows(self, tiny_rows):
        by_variant = {r["variant"]: r for r in tiny_rows}
        assert (
            by_variant["mip-dirichlet"]["spectral_radius"]
            < by_variant["none"]["spectral_radius"]
        )

    def test_deterministic_except_timings(self, tiny_rows):
        again = run_experiment(TINY)
        for a, b in zip(tiny_rows, again):
            for col in CSV_COLUMNS:
                if col in TIMING_COLUMNS:
                    continue
                assert a[col] == b[col], col

    def test_progress_callback(self):
        seen = []
        run_experiment(TINY, progress=seen.append)
        assert len(seen) == 2
        assert seen[0]["variant"] == "none"

    def test_reference_failure_marks_rows(self, monkeypatch):
        def boom(system, cap):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(bench, "reference_solution", boom)
        rows = run_experiment(TINY)
        assert len(rows) == 2
        for row in rows:
            assert row["status"].startswith("reference failed:")
            assert row["reference_kind"] == ""

    def test_variant_failure_marks_row(self, monkeypatch):
        def boom(*args, **kwargs):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(bench, "dsa_iteration", boom)
        rows = run_experiment(TINY)
        by_variant = {r["variant"]: r for r in rows}
        assert by_variant["none"]["status"] == "ok"
        assert by_variant["mip-dirichlet"]["status"].startswith("error:")


class TestCsvOutput:
    def test_empty_rows_header_only(self, tmp_path):
        path = emit_csv([], tmp_path / "empty.csv")
        lines = path.read_text().strip().splitlines()
        assert lines == [",".join(CSV_COLUMNS)]

    def test_float_round_trip(self, tiny_rows, tmp_path):
        path = emit_csv(tiny_rows, tmp_path / "rows.csv")
        with open(path, newline="") as fh:
            parsed = list(csv.DictReader(fh))
        assert len(parsed) == len(tiny_rows)
        for raw, row in zip(parsed, tiny_rows):
            # 17 significant digits reproduce every float bit for bit
            assert float(raw["spectral_radius"]) == row["spectral_radius"]
            assert float(raw["h"]) == row["h"]
            assert float(raw["error_final"]) == row["error_final"]
            assert int(raw["n_iterations"]) == row["n_iterations"]

    def test_per_variant_files(self, tiny_rows, tmp_path):
        paths = write_variant_csvs(tiny_rows, tmp_path, "tiny")
        names = [p.name for p in paths]
        assert names == ["tiny_none.csv", "tiny_mip-dirichlet.csv"]
        for path, variant in zip(paths, ("none", "mip-dirichlet")):
            with open(path, newline="") as fh:
                parsed = list(csv.DictReader(fh))
            assert len(parsed) == 1
            assert parsed[0]["variant"] == variant

    def test_creates_parent_directories(self, tmp_path):
        path = emit_csv([], tmp_path / "a" / "b" / "rows.csv")
        assert path.exists()


class TestManifest:
    def test_fields(self, tmp_path):
        config = parse_config(TINY_INI)
        path = write_manifest(config, tmp_path, extra={"note": "x"})
        assert path.name == "tiny_manifest.json"
        manifest = json.loads(path.read_text())
        assert manifest["experiment"] == "tiny"
        assert manifest["seed"] == 7
        assert manifest["note"] == "x"
        expected = hashlib.sha256(TINY_INI.encode()).hexdigest()
        assert manifest["config_sha256"] == expected
        assert set(manifest["versions"]) == {"polysn", "numpy", "scipy",
                                             "python"}
        assert manifest["created"]


class TestMeshStats:
    def test_summary_keys(self):
        config = ExperimentConfig(n_cells=12, lloyd_iterations=2, seed=3,
                                  sigma_t=(1.0,))
        stats = mesh_stats(config)
        assert stats["n_cells"] == 12
        assert stats["n_vertices"] > 0
        assert stats["n_facets"] > 0
        assert stats["max_anisotropy"] >= 1.0


class TestCli:
    def test_emit_default_config_stdout(self, capsys):
        assert main(["emit-default-config"]) == 0
        out = capsys.readouterr().out
        assert out == default_config_text()

    def test_emit_default_config_file(self, tmp_path, capsys):
        target = tmp_path / "base.ini"
        assert main(["emit-default-config", str(target)]) == 0
        assert target.read_text() == default_config_text()
        assert str(target) in capsys.readouterr().out

    def test_mesh_stats_command(self, tmp_path, capsys):
        cfg = tmp_path / "exp.ini"
        cfg.write_text(
            "[experiment]\ncells = 12\nlloyd_iterations = 2\nsigma_t = 1.0\n"
        )
        assert main(["mesh-stats", str(cfg), "--seed", "3"]) == 0
        out = capsys.readouterr().out
        assert "n_cells: 12" in out
        assert "max_anisotropy:" in out

    def test_run_command(self, tmp_path, capsys):
        cfg = tmp_path / "exp.ini"
        cfg.write_text(TINY_INI)
        out_dir = tmp_path / "results"
        assert main(["run", str(cfg), "--out-dir", str(out_dir)]) == 0
        assert (out_dir / "tiny_none.csv").exists()
        assert (out_dir / "tiny_mip-marshak.csv").exists()
        manifest = json.loads((out_dir / "tiny_manifest.json").read_text())
        assert manifest["experiment"] == "tiny"
        out = capsys.readouterr().out
        assert "wrote" in out

    def test_run_reports_failures(self, tmp_path, monkeypatch, capsys):
        def boom(system, cap):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(bench, "reference_solution", boom)
        cfg = tmp_path / "exp.ini"
        cfg.write_text(TINY_INI)
        assert main(["run", str(cfg), "--out-dir", str(tmp_path / "r")]) == 1
        assert "errors" in capsys.readouterr().err
