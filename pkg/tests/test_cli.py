"""CLI subcommands: config parsing, output schemas, determinism, exit codes."""

import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import blochcav as bc
from blochcav.cli import (KPath, _check_mesh_size, cutoff_summary, load_config,
                          main, medium_params, run_bands, run_field)
from helpers import CUBE_OFF, assert_matches_golden, make_box_mesh

CONFIG_DIR = Path(__file__).parent.parent / "configs"
GOLDEN = Path(__file__).parent / "data" / "bands_golden.csv"
CUBIC_SPHERE_CFG = CONFIG_DIR / "cubic_sphere.cfg"


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "blochcav.cli", *args],
                          capture_output=True, text=True)


@pytest.fixture()
def empty_lattice_cfg(tmp_path):
    text = CUBIC_SPHERE_CFG.read_text().replace("a = 0.01", "a = 0.0")
    p = tmp_path / "empty.cfg"
    p.write_text(text)
    return p


class TestConfig:
    def test_load_shipped_config(self):
        cfg = load_config(CUBIC_SPHERE_CFG)
        assert cfg.a == 0.01
        assert cfg.kpath is not None
        assert [n[0] for n in cfg.kpath.nodes] == ["G", "X", "M", "R"]
        assert cfg.exceptional_tol == 1e-9

    def test_missing_file(self):
        with pytest.raises(bc.ValidationError, match="not found"):
            load_config("/nonexistent.cfg")

    def test_parse_error_reported(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("[lattice\nell1 = 1 0 0\n")
        with pytest.raises(bc.ValidationError, match="parse error"):
            load_config(p)

    def test_bad_vector(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("[lattice]\nell1 = 1 0\nell2 = 0 1 0\nell3 = 0 0 1\n")
        with pytest.raises(bc.ValidationError, match="expected 3 numbers"):
            load_config(p)

    def test_kpath_invariants(self):
        with pytest.raises(bc.ValidationError):
            KPath(nodes=(("G", np.zeros(3)),), samples_per_segment=4)
        with pytest.raises(bc.ValidationError):
            KPath(nodes=(("G", np.zeros(3)), ("X", np.ones(3))),
                  samples_per_segment=0)

    def test_kpath_sample_count_and_coords(self, cubic_lattice):
        path = KPath(nodes=(("G", np.zeros(3)), ("X", np.array([0.5, 0, 0]))),
                     samples_per_segment=4)
        samples = path.samples(cubic_lattice)
        assert len(samples) == 5
        # fractional coordinates map through the reciprocal basis
        assert np.allclose(samples[-1][1], [0.5, 0, 0])
        assert samples[-1][0] == pytest.approx(0.5)


class TestBands:
    def test_golden_file_byte_identical(self, tmp_path):
        out = run_bands(load_config(CUBIC_SPHERE_CFG), threads=1)
        assert_matches_golden(out, GOLDEN.read_text())

    def test_threads_do_not_change_bytes(self):
        cfg = load_config(CUBIC_SPHERE_CFG)
        assert run_bands(cfg, threads=1) == run_bands(cfg, threads=3)

    def test_schema_header(self):
        lines = run_bands(load_config(CUBIC_SPHERE_CFG)).splitlines()
        assert lines[0] == "# schema=1"
        assert lines[1].split(",") == [
            "path_coord", "kx", "ky", "kz", "order_n", "branch_s",
            "k_squared", "omega", "shift_order", "amplitude_determined",
            "near_exceptional_warning"]

    def test_branch_count_equals_order(self):
        lines = run_bands(load_config(CUBIC_SPHERE_CFG)).splitlines()[2:]
        by_coord: dict[str, list[list[str]]] = {}
        for row in csv.reader(lines):
            by_coord.setdefault(row[0] + row[1] + row[2] + row[3], []).append(row)
        for rows in by_coord.values():
            order = int(rows[0][4])
            assert len(rows) == order
            assert [int(r[5]) for r in rows] == list(range(1, order + 1))

    def test_x_endpoint_is_order_two(self):
        lines = run_bands(load_config(CUBIC_SPHERE_CFG)).splitlines()[2:]
        rows = [r for r in csv.reader(lines)
                if r[1] == "0.5" and r[2] == "0" and r[3] == "0"]
        assert len(rows) == 2
        assert rows[0][4] == "2"
        # interior path rows stay order 1
        interior = [r for r in csv.reader(lines) if r[1] == "0.25"]
        assert all(r[4] == "1" for r in interior)

    def test_empty_lattice(self, empty_lattice_cfg):
        out = run_bands(load_config(empty_lattice_cfg))
        for row in csv.reader(out.splitlines()[2:]):
            k = np.array([float(row[1]), float(row[2]), float(row[3])])
            assert float(row[7]) == pytest.approx(np.linalg.norm(k), abs=1e-14)

    def test_cutoff_summary_on_stderr(self, tmp_path):
        out = tmp_path / "b.csv"
        r = run_cli("bands", str(CUBIC_SPHERE_CFG), "-o", str(out))
        assert r.returncode == 0
        assert "clusters s>1: cutoff O(a), unresolved at leading order" in r.stderr
        # the branch-1 numbers match the cutoff formulas for the solved q
        cfg = load_config(CUBIC_SPHERE_CFG)
        params = medium_params(cfg)
        for n in (1, 2, 4, 8):
            data = bc.cutoff(params, n)
            assert format(data.omega_c, ".17g") in r.stderr
        summary = cutoff_summary(cfg, params, [1, 2])
        assert summary.splitlines()[0].startswith("cutoff n=1: omega_c=")

    def test_mesh_size_cap(self):
        with pytest.raises(bc.ValidationError, match="too large"):
            _check_mesh_size(make_box_mesh(42))  # 42*42*12 > 20480 triangles


class TestField:
    def test_antisymmetric_branch_zero_at_origin(self):
        cfg = load_config(CUBIC_SPHERE_CFG)
        out = run_field(cfg, k_index=4, branch_s=2, grid=4)
        first = out.splitlines()[2].split(",")
        assert first[:3] == ["0", "0", "0"]
        assert float(first[5]) == 0.0

    def test_single_wave_unit_modulus(self):
        cfg = load_config(CUBIC_SPHERE_CFG)
        out = run_field(cfg, k_index=2, branch_s=1, grid=3)
        for row in csv.reader(out.splitlines()[2:]):
            assert float(row[5]) == pytest.approx(1.0, rel=1e-12)

    def test_symmetric_branch_interference(self):
        cfg = load_config(CUBIC_SPHERE_CFG)
        out = run_field(cfg, k_index=4, branch_s=1, grid=4)
        for row in csv.reader(out.splitlines()[2:]):
            x = float(row[0])
            want = 2.0 * abs(np.cos(x / 2.0)) / np.sqrt(2.0)
            assert float(row[5]) == pytest.approx(want, abs=1e-12)

    def test_undetermined_amplitude_sets_warning(self):
        cfg = load_config(CUBIC_SPHERE_CFG)
        out = run_field(cfg, k_index=12, branch_s=3, grid=2)  # R point, n = 8
        rows = out.splitlines()[2:]
        assert all(r.endswith(",true") for r in rows)

    def test_bad_branch_index(self):
        cfg = load_config(CUBIC_SPHERE_CFG)
        with pytest.raises(bc.ValidationError, match="--branch"):
            run_field(cfg, k_index=2, branch_s=5, grid=2)


class TestExitCodes:
    def test_success(self, tmp_path):
        out = tmp_path / "b.csv"
        assert main(["bands", str(CUBIC_SPHERE_CFG), "-o", str(out)]) == 0
        assert_matches_golden(out.read_text(), GOLDEN.read_text())

    def test_validation_failure(self, capsys):
        assert main(["bands", "/nonexistent.cfg"]) == 1
        assert "error" in capsys.readouterr().err

    def test_usage_error_is_validation(self, capsys):
        assert main(["bogus-subcommand"]) == 1

    def test_numerical_failure(self, tmp_path, capsys, monkeypatch):
        def boom(*a, **k):
            raise bc.NumericsError("lattice sum not converged")

        monkeypatch.setattr("blochcav.cli.oracle.oracle_validation_suite", boom)
        assert main(["verify", str(CUBIC_SPHERE_CFG)]) == 2
        assert "numerical failure" in capsys.readouterr().err

    def test_capacitance_json_schema(self, tmp_path):
        mesh_path = tmp_path / "cube.off"
        mesh_path.write_text(CUBE_OFF)
        out = tmp_path / "q.json"
        assert main(["capacitance", str(mesh_path), "-o", str(out)]) == 0
        record = json.loads(out.read_text())
        assert set(record) == {"q", "residual", "triangles", "fitted_order"}
        assert record["triangles"] == 12
        assert record["fitted_order"] is None
        assert record["q"] > 0

    def test_capacitance_extrapolate(self, tmp_path):
        mesh_path = tmp_path / "cube.off"
        mesh_path.write_text(CUBE_OFF)
        out = tmp_path / "q.json"
        assert main(["capacitance", str(mesh_path), "--extrapolate",
                     "--refinements", "4", "-o", str(out)]) == 0
        record = json.loads(out.read_text())
        assert record["triangles"] == 768
        assert abs(record["q"] - 0.6607) / 0.6607 < 0.01
        assert record["fitted_order"] is not None

    def test_verify_subprocess_roundtrip(self, tmp_path):
        out = tmp_path / "verify.json"
        r = run_cli("verify", str(CUBIC_SPHERE_CFG), "-o", str(out))
        assert r.returncode == 0
        report = json.loads(out.read_text())
        assert report["passed"] is True
        assert report["exceptional"]["residue_count"] == 2

    def test_verify_solves_cavity_q_when_not_given(self, tmp_path):
        # drop the explicit q: verify must fall back to the BEM solve
        text = CUBIC_SPHERE_CFG.read_text().replace("q = 1.0", "")
        cfg = tmp_path / "noq.cfg"
        cfg.write_text(text)
        out = tmp_path / "verify.json"
        assert main(["verify", str(cfg), "-o", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["passed"] is True
        assert report["q"] == pytest.approx(0.987, abs=0.002)  # sphere, refinement 2

    def test_extrapolate_needs_refinement(self, tmp_path):
        text = CUBIC_SPHERE_CFG.read_text().replace(
            "refinement = 2", "refinement = 1").replace(
            "shape = sphere", "shape = sphere\nextrapolate = true").replace(
            "q = 1.0", "")
        cfg = tmp_path / "coarse.cfg"
        cfg.write_text(text)
        assert main(["verify", str(cfg)]) == 1
