import io
import math

import pytest

import squeezed_qfi.dynamics as dynamics
from squeezed_qfi.cli import EVOLVE_HEADER, main
from squeezed_qfi.dynamics import SolutionCoefficients


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def parse_kv(text):
    return dict(line.split(" = ", 1) for line in text.strip().splitlines())


class TestQfi:
    def test_initial_point(self):
        code, text = run("qfi", "--gamma-t", "0", "--r", "1", "--kT", "0.5", "--phi", "0.7")
        kv = parse_kv(text)
        assert code == 0
        assert kv["qfi_analytic"] == kv["qfi_eigen"] == kv["qfi_bloch"] == "1"
        assert kv["delta_phi"] == "1"

    def test_markovian_thermal(self):
        code, text = run("qfi", "--r", "0", "--gamma-t", "1", "--mode", "markovian", "--kT", "0")
        kv = parse_kv(text)
        assert code == 0
        assert float(kv["qfi_analytic"]) == pytest.approx(math.exp(-2), rel=1e-5)
        assert kv["qfi_analytic"] == kv["thermal_baseline"] == "0.135335"
        assert kv["advantage"] == "false"
        assert kv["delta_phi"] == "2.71828"

    def test_phase_matched(self):
        code, text = run("qfi", "--gamma-t", "5", "--r", "1", "--theta", "0.6", "--phi", "0.3")
        kv = parse_kv(text)
        B2 = float(kv["B2"])
        assert float(kv["qfi_analytic"]) == pytest.approx(B2**2, rel=1e-5)
        assert kv["qfi_analytic"] == "0.865737"
        assert kv["advantage"] == "true"

    def test_nu(self):
        _, text = run("qfi", "--nu", "100")
        assert parse_kv(text)["delta_phi"] == "0.1"

    def test_csv(self, tmp_path):
        path = tmp_path / "q.csv"
        code, _ = run("qfi", "--gamma-t", "2", "--r", "0.5", "--csv", str(path))
        header, row = path.read_text().splitlines()
        assert code == 0
        assert "qfi_analytic" in header.split(",")
        assert len(header.split(",")) == len(row.split(","))

    @pytest.mark.parametrize("argv", [
        ("qfi", "--r", "-1"),
        ("qfi", "--kT", "-0.1"),
        ("qfi", "--gamma-t", "-1"),
        ("qfi", "--nu", "0"),
        ("qfi", "--mode", "quantum"),
        ("qfi", "--bogus", "1"),
        ("qfi", "--r", "abc"),
        (),
    ])
    def test_usage_errors(self, argv):
        assert run(*argv)[0] == 1


class TestEvolve:
    def test_zero_duration(self):
        code, text = run("evolve", "--t-end", "0")
        lines = text.splitlines()
        assert code == 0
        assert lines[0] == EVOLVE_HEADER
        assert len(lines) == 2
        t, ee, re, im, purity = map(float, lines[1].split(","))
        assert (t, ee, re, im, purity) == (0.0, 0.5, 0.5, 0.0, 1.0)

    def test_markovian_coherence(self, tmp_path):
        path = tmp_path / "traj.csv"
        code, _ = run("evolve", "--mode", "markovian", "--t-end", "1", "--phi", "0.4",
                      "--stride", "100", "--output", str(path))
        lines = path.read_text().splitlines()
        assert code == 0 and lines[0] == EVOLVE_HEADER
        t, ee, re, im, _ = map(float, lines[-1].split(","))
        assert t == pytest.approx(1.0)
        assert math.hypot(re, im) == pytest.approx(math.exp(-1) / 2, abs=1e-8)
        assert math.atan2(im, re) == pytest.approx(0.4, abs=1e-8)
        assert len(lines) == 1 + 11

    def test_deterministic(self):
        a = run("evolve", "--t-end", "2", "--r", "0.5", "--stride", "50")[1]
        b = run("evolve", "--t-end", "2", "--r", "0.5", "--stride", "50")[1]
        assert a == b

    def test_step_too_large(self):
        assert run("evolve", "--t-end", "1", "--dt", "2")[0] == 1

    def test_unstable_step(self):
        assert run("evolve", "--t-end", "10", "--dt", "1", "--r", "3", "--kT", "2",
                   "--mode", "markovian")[0] == 2


class TestFigure:
    def test_csv_and_script(self, tmp_path):
        code, text = run("figure", "fig3a", "--points", "11", "--out-dir", str(tmp_path),
                         "--plot-script")
        assert code == 0
        csv = (tmp_path / "fig3a.csv").read_bytes()
        assert b"\r" not in csv
        lines = csv.decode().splitlines()
        assert lines[0] == "gamma_t,kT,qfi_analytic,qfi_thermal"
        assert len(lines) == 1 + 11 * 4
        script = (tmp_path / "fig3a_plot.py").read_text()
        assert "fig3a.csv" in script
        compile(script, "fig3a_plot.py", "exec")
        assert "wrote" in text

    def test_fig3a_default(self, tmp_path):
        assert run("figure", "fig3a", "--out-dir", str(tmp_path))[0] == 0
        rows = (tmp_path / "fig3a.csv").read_text().splitlines()[1:]
        assert len(rows) == 4 * 201

    def test_fig2a_order(self, tmp_path):
        run("figure", "fig2a", "--points", "9", "--out-dir", str(tmp_path))
        rows = [tuple(map(float, line.split(",")[:2]))
                for line in (tmp_path / "fig2a.csv").read_text().splitlines()[1:]]
        assert rows == sorted(rows) and len(rows) == 81

    def test_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            run("figure", "fig6", "--points", "21", "--out-dir", str(tmp_path / d))
        assert (tmp_path / "a" / "fig6.csv").read_bytes() == (tmp_path / "b" / "fig6.csv").read_bytes()

    def test_override(self, tmp_path):
        run("figure", "fig3a", "--points", "5", "--out-dir", str(tmp_path / "a"))
        run("figure", "fig3a", "--points", "5", "--out-dir", str(tmp_path / "b"), "--set", "lambda=0.01")
        assert (tmp_path / "a" / "fig3a.csv").read_text() != (tmp_path / "b" / "fig3a.csv").read_text()
        assert run("figure", "fig3a", "--set", "omega=1", "--out-dir", str(tmp_path))[0] == 1

    def test_unknown_id(self, tmp_path, capsys):
        code, _ = run("figure", "fig9", "--out-dir", str(tmp_path))
        assert code == 1
        assert "fig4c" in capsys.readouterr().err

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert run("figure", "fig3a", "--points", "3", "--out-dir", str(blocker / "sub"))[0] == 1


class TestVerify:
    def test_passes(self):
        code, text = run("verify")
        assert code == 0
        assert "ALL CHECKS PASSED" in text

    def test_mutation_fails(self, monkeypatch):
        real = dynamics.solution_coefficients

        def swapped(vt, n, r):
            c = real(vt, n, r)
            return SolutionCoefficients(c.vartheta, c.A, c.B2, c.B1)

        monkeypatch.setattr(dynamics, "solution_coefficients", swapped)
        code, text = run("verify")
        assert code == 3
        assert "[FAIL]" in text


class TestConfig:
    def test_precedence(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# defaults\ngamma-t = 1\nmode = markovian\nr = 0\n")
        _, text = run("qfi", "--config", str(cfg))
        assert parse_kv(text)["qfi_analytic"] == "0.135335"
        _, text = run("qfi", "--config", str(cfg), "--gamma-t", "0")
        assert parse_kv(text)["qfi_analytic"] == "1"

    def test_print_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("lambda = 0.5\n")
        code, text = run("qfi", "--config", str(cfg), "--r", "0.1", "--print-config")
        kv = parse_kv(text)
        assert code == 0
        assert kv["lambda"] == "0.5" and kv["r"] == "0.1" and kv["mode"] == "nonMarkovian"

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("temperature = 3\n")
        assert run("qfi", "--config", str(cfg))[0] == 1

    def test_missing_file(self, tmp_path):
        assert run("qfi", "--config", str(tmp_path / "none.cfg"))[0] == 1
