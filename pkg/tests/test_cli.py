import io
import math
import subprocess
import sys

import numpy as np
import pytest

from rabi_darboux import Trace, oscillation_frequencies
from rabi_darboux.cli import build_parser, main, resolve_config, run_sweep, sweep_point


def _load(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _stdout_csv(capsys):
    text = capsys.readouterr().out
    lines = text.splitlines()
    return lines[0].split(","), np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)


class TestRabi:
    def test_resonant_sin_squared(self, capsys):
        assert main(["rabi", "--f0", "0", "--xi", "1", "--t1", "10", "--n", "1001"]) == 0
        header, data = _stdout_csv(capsys)
        assert header == ["t", "P"]
        np.testing.assert_allclose(data[:, 1], np.sin(data[:, 0]) ** 2, atol=1e-12)

    def test_omega0_peak(self, capsys):
        assert main(["rabi", "--omega0", "2", "--t1", str(math.pi / 4), "--n", "2"]) == 0
        _, data = _stdout_csv(capsys)
        assert data[-1, 1] == pytest.approx(0.75, abs=1e-15)

    def test_ode_column(self, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["rabi", "--xi", "1.1", "--f0", "0.4", "--t1", "30", "--n", "601", "--ode", "--out", str(out)]) == 0
        header, data = _load(out)
        assert header == ["t", "P", "P_ode"]
        assert np.max(np.abs(data[:, 1] - data[:, 2])) <= 1e-8


class TestSimulateAndTransform:
    def test_simulate_columns_and_unit_norm(self, capsys):
        assert main(["simulate", "--drive", "oscillatory", "--varpi", "0.25", "--a", "0.015",
                     "--omega0", "2", "--t1", "20", "--n", "201"]) == 0
        header, data = _stdout_csv(capsys)
        assert header == ["t", "a1_re", "a1_im", "a2_re", "a2_im", "P"]
        norm = data[:, 1] ** 2 + data[:, 2] ** 2 + data[:, 3] ** 2 + data[:, 4] ** 2
        np.testing.assert_allclose(norm, 1.0, atol=1e-8)

    def test_transform_agrees_with_simulate(self, capsys):
        common = ["--varpi", "0.25", "--a", "0.015", "--omega0", "2", "--t1", "20", "--n", "201"]
        main(["transform", *common])
        _, closed = _stdout_csv(capsys)
        main(["simulate", "--drive", "oscillatory", *common])
        _, ode = _stdout_csv(capsys)
        assert np.max(np.abs(closed[:, 1] - ode[:, 5])) <= 1e-6

    def test_tabulated_drive(self, tmp_path, capsys):
        t = np.linspace(0, 10, 2001)
        table = tmp_path / "drive.csv"
        np.savetxt(table, np.column_stack([t, 1 - 4 / (1 + 4 * t**2)]), delimiter=",", header="t,f", comments="")
        assert main(["simulate", "--drive", "tabulated", "--table", str(table), "--xi", str(math.sqrt(3)),
                     "--t1", "10", "--n", "101"]) == 0
        _, data = _stdout_csv(capsys)
        tt = data[:, 0]
        np.testing.assert_allclose(data[:, 5], 3 * tt**2 / (1 + 4 * tt**2), atol=1e-6)

    def test_detuning_command(self, capsys):
        assert main(["detuning", "--drive", "monotone", "--t1", "10", "--n", "101"]) == 0
        header, data = _stdout_csv(capsys)
        assert header == ["t", "f1", "delta1"]
        assert data[0, 2] == -6.0
        t = data[1:, 0]
        np.testing.assert_allclose(data[1:, 2], 2 - 4 / t * np.arctan(2 * t), atol=1e-8)


class TestFigure:
    def test_fig1a(self, tmp_path, capsys):
        assert main(["figure", "fig1a", "--t1", "80", "--n", "8001", "--out", str(tmp_path)]) == 0
        header, data = _load(tmp_path / "fig1a_varpi_1-4.csv")
        assert header == ["t", "P1"]
        est = oscillation_frequencies(Trace(data[:, 0], data[:, 1], kind="scalar"))
        assert est.fast == pytest.approx(4.0, rel=0.05)
        assert (tmp_path / "fig1a_varpi_1-6.csv").exists()
        # the fast oscillations ride on a plateau near 0.75
        late = data[:, 0] > 40
        assert 0.6 < np.median(data[late, 1]) < 0.85

    def test_fig1b_limiting_curve_monotone(self, tmp_path, capsys):
        assert main(["figure", "fig1b", "--t1", "10", "--n", "1001", "--out", str(tmp_path)]) == 0
        _, data = _load(tmp_path / "fig1b_varpi_1e-3.csv")
        sel = data[:, 0] >= 0.1
        assert np.all(np.diff(data[sel, 1]) > 0)

    def test_fig3_fast_amplitude_grows_off_critical(self, tmp_path, capsys):
        assert main(["figure", "fig3", "--t1", "120", "--n", "12001", "--out", str(tmp_path)]) == 0
        amps = []
        for label in ("omega0_2", "omega0_1.6", "omega0_1.2"):
            _, data = _load(tmp_path / f"fig3_{label}.csv")
            amps.append(oscillation_frequencies(Trace(data[:, 0], data[:, 1], kind="scalar")).fast_amplitude)
        assert amps[0] < amps[1] < amps[2]

    def test_byte_identical_reruns(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert main(["figure", "fig2a", "--t1", "20", "--n", "401", "--out", str(d)]) == 0
        for f in a.iterdir():
            assert f.read_bytes() == (b / f.name).read_bytes()


class TestVerify:
    def test_default_passes(self, capsys):
        assert main(["verify", "--seed-count", "20"]) == 0
        out = capsys.readouterr().out
        assert "all checks passed" in out and "FAIL" not in out

    def test_injected_fault(self, capsys):
        assert main(["verify", "--seed-count", "3", "--inject-fault"]) != 0
        err = capsys.readouterr().err
        assert "intertwining: seed #0" in err

    def test_many_seeds(self, capsys):
        assert main(["verify", "--seed-count", "1000", "--seed", "7"]) == 0


class TestSweep:
    def test_single_point_matches_direct(self, capsys):
        assert main(["sweep", "--varpi-list", "0.2", "--a-list", "special", "--omega0-list", "2",
                     "--t1", "40", "--n", "4001", "--jobs", "1"]) == 0
        header, data = _stdout_csv(capsys)
        assert header[0] == "varpi" and header[-2:] == ["floor", "minimum"]
        direct = sweep_point(1.0, 0.2, "special", 2.0, 40.0, 0.01)
        np.testing.assert_array_equal(data[0], np.array(direct, dtype=float))

    def test_parallel_equals_serial(self):
        args = (1.0, [0.1, 0.2], ["0", "0.05"], [1.8, 2.0], 40.0, 0.02)
        assert run_sweep(*args, jobs=1) == run_sweep(*args, jobs=3)

    def test_reproduces_fig1a_frequencies(self):
        row = sweep_point(1.0, 0.25, "0.015", 2.0, 80.0, 0.01)
        assert row[4] == pytest.approx(4.0, rel=0.05) and row[5] == pytest.approx(0.5, rel=0.05)

    def test_witness_exists(self):
        rows = run_sweep(1.0, [0.2], ["0", "special"], [2.0], 40.0, 0.01, jobs=1)
        assert max(r[8] for r in rows) > 0.5

    def test_budget(self, capsys):
        many = ",".join(str(0.01 + 1e-4 * k) for k in range(50))
        assert main(["sweep", "--varpi-list", many, "--a-list", many, "--omega0-list", many]) == 1


class TestConfigAndErrors:
    def test_flags_override_file(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("# comment\nf0 = 2\nt1 = 5\nomega0 = 3\n", encoding="utf-8")
        args = build_parser().parse_args(["rabi", "--config", str(cfg_file), "--t1", "7", "--xi", "1", "--jobs", "1"])
        cfg = resolve_config(args)
        assert cfg.f0 == 2.0 and cfg.t1 == 7.0
        assert cfg.coupling() == 1.0  # --xi replaces the file's omega0

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("RABI_DARBOUX_JOBS", raising=False)
        cfg = resolve_config(build_parser().parse_args(["rabi", "--xi", "1"]))
        assert (cfg.f0, cfg.t1, cfg.n, cfg.tol, cfg.seed_count) == (1.0, 40.0, 4001, 1e-10, 100)

    def test_jobs_env(self, monkeypatch):
        monkeypatch.setenv("RABI_DARBOUX_JOBS", "3")
        assert resolve_config(build_parser().parse_args(["rabi", "--xi", "1"])).jobs == 3
        assert resolve_config(build_parser().parse_args(["rabi", "--xi", "1", "--jobs", "2"])).jobs == 2

    def test_over_specified_coupling(self, capsys):
        assert main(["rabi", "--xi", "1", "--omega0", "2"]) == 1

    def test_file_over_specified_coupling(self, tmp_path, capsys):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("xi = 1\nomega0 = 2\n", encoding="utf-8")
        assert main(["rabi", "--config", str(cfg_file)]) == 1

    @pytest.mark.parametrize(
        "argv",
        [
            ["rabi"],
            ["rabi", "--omega0", "0.5"],
            ["transform", "--xi", "1", "--varpi", "1.5"],
            ["transform", "--xi", "1", "--f0", "0"],
            ["rabi", "--xi", "1", "--n", "1"],
            ["bogus"],
            ["simulate", "--xi", "1", "--tol", "1e-20"],
            ["simulate", "--xi", "1", "--drive", "tabulated"],
        ],
    )
    def test_validation_exit_code(self, argv, capsys):
        assert main(argv) == 1
        assert capsys.readouterr().err

    def test_numeric_exit_code(self, tmp_path, capsys):
        table = tmp_path / "spike.csv"
        table.write_text("t,f\n0,0\n1,0\n1.000000000000001,1e12\n1.000000000000002,0\n2,0\n", encoding="utf-8")
        assert main(["simulate", "--drive", "tabulated", "--table", str(table), "--xi", "1",
                     "--t1", "2", "--n", "11", "--tol", "1e-8"]) == 2
        assert "underflow" in capsys.readouterr().err

    def test_io_exit_code(self, tmp_path, capsys):
        assert main(["rabi", "--xi", "1", "--out", str(tmp_path / "missing" / "x.csv")]) == 3
        assert main(["rabi", "--config", str(tmp_path / "nope.cfg")]) == 3


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "rabi_darboux", "rabi", "--xi", "1", "--f0", "0", "--t1", "1", "--n", "3"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "t,P"
    assert len(proc.stdout.splitlines()) == 4
