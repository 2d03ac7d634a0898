import subprocess
import sys

import pytest

from tlzsim.cli import main, parse_axis, parse_config, CliError


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


SWEEP_ARGS = [
    "sweep", "--m", "0.5e6", "--nu", "1e14", "--kappa", "0.2e-6", "--F", "-0.3142",
]


class TestSweep:
    def test_prints_probability_and_diagnostics(self, capsys):
        code, out, _ = run_cli(SWEEP_ARGS, capsys)
        assert code == 0
        lines = dict(
            ln.split(" = ") for ln in out.strip().splitlines() if " = " in ln
        )
        assert float(lines["P"]) == pytest.approx(0.9995681, abs=1e-5)
        assert float(lines["T_s"]) == pytest.approx(8.6569064e-7, rel=1e-6)
        assert float(lines["norm_drift"]) <= 1e-9

    def test_missing_parameter_exits_2(self, capsys):
        code, _, err = run_cli(["sweep", "--m", "1e6", "--nu", "1e14"], capsys)
        assert code == 2
        assert "kappa" in err


class TestScan:
    def test_csv_to_stdout(self, capsys):
        code, out, _ = run_cli(
            [
                "scan", "--axis", "F:0.1:0.5:5", "--mode", "analytic",
                "--m", "0.5e6", "--nu", "1e14", "--kappa", "0.2e-6",
                "--deterministic",
            ],
            capsys,
        )
        assert code == 0
        data = [ln for ln in out.splitlines() if not ln.startswith("#")]
        assert data[0] == "F,P"
        assert len(data) == 6

    def test_deterministic_file_output_is_stable(self, tmp_path, capsys):
        args = [
            "scan", "--axis", "F:-0.5:0.5:5", "--mode", "analytic",
            "--m", "0.5e6", "--nu", "1e14", "--kappa", "0.2e-6",
            "--deterministic", "--out",
        ]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + [str(a)]) == 0
        assert main(args + [str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_svg_output(self, tmp_path, capsys):
        out = tmp_path / "scan.svg"
        code, _, _ = run_cli(
            [
                "scan", "--axis", "F:-0.6:-0.1:4", "--axis", "kappa:1e-7:5e-7:3",
                "--mode", "analytic",
                "--m", "0.5e6", "--nu", "1e14", "--kappa", "0.2e-6",
                "--format", "svg", "--out", str(out),
            ],
            capsys,
        )
        assert code == 0
        assert out.read_text().count("<rect") == 12

    def test_strict_flags_point_failures(self, capsys):
        args = [
            "scan", "--axis", "F:0.1:0.3:3", "--mode", "amplitude-error",
            "--alpha", "-1", "--m", "0.5e6", "--nu", "1e14", "--kappa", "0.2e-6",
        ]
        code, _, err = run_cli(args, capsys)
        assert code == 0  # failures recorded but not fatal
        assert "DomainError" in err
        code, _, _ = run_cli(args + ["--strict"], capsys)
        assert code == 1

    def test_config_file_drives_scan(self, tmp_path, capsys):
        cfg = tmp_path / "scan.cfg"
        cfg.write_text(
            "# comment line\n"
            "axis1 = F:0.1:0.5:5\n"
            "mode = analytic\n"
            "m = 0.5e6\n"
            "nu = 1e14\n"
            "kappa = 0.2e-6\n"
        )
        code, out, _ = run_cli(
            ["scan", "--config", str(cfg), "--deterministic"], capsys
        )
        assert code == 0
        assert "F,P" in out

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("speed = 1\n")
        code, _, err = run_cli(["scan", "--config", str(cfg)], capsys)
        assert code == 2
        assert "unknown config key" in err


class TestOtherCommands:
    def test_pt_locus_analytic(self, capsys):
        code, out, _ = run_cli(
            [
                "pt-locus", "--m", "0.5e6", "--nu", "1e14",
                "--kappa-range", "1.4e-6:2.8e-6:2",
            ],
            capsys,
        )
        assert code == 0
        rows = [ln for ln in out.splitlines() if not ln.startswith("#")]
        assert rows[0] == "kappa,f_pt,p_at_pt"
        first = rows[1].split(",")
        assert float(first[1]) == pytest.approx(-0.04488, abs=1e-5)

    def test_pulse_export(self, tmp_path, capsys):
        wf = tmp_path / "wf.csv"
        code, out, _ = run_cli(
            [
                "pulse", "--m", "0.5e6", "--nu", "1e14", "--kappa", "0.2e-6",
                "--F", "-0.3142", "--sample-rate", "2e8", "--out", str(wf),
            ],
            capsys,
        )
        assert code == 0
        assert wf.read_text().splitlines()[0] == "t_s,f_R_Hz,phi_rad,f_det_Hz"
        assert "constraint rabi_amplitude" in out
        assert "prep_rad" in out

    def test_pulse_iq_export(self, tmp_path, capsys):
        wf = tmp_path / "wf_iq.csv"
        code, _, _ = run_cli(
            [
                "pulse", "--m", "0.5e6", "--nu", "1e14", "--kappa", "0.2e-6",
                "--F", "-0.3142", "--sample-rate", "2e8", "--iq", "--out", str(wf),
            ],
            capsys,
        )
        assert code == 0
        assert wf.read_text().splitlines()[0] == "t_s,I_Hz,Q_Hz,f_det_Hz"

    def test_robustness_rabi(self, capsys):
        code, out, _ = run_cli(
            ["robustness", "--method", "rabi", "--threshold", "0.9"], capsys
        )
        assert code == 0
        lines = dict(
            ln.split(" = ") for ln in out.strip().splitlines() if " = " in ln
        )
        assert float(lines["alpha_lo"]) == pytest.approx(0.7952, abs=2e-3)
        assert float(lines["alpha_hi"]) == pytest.approx(1.2048, abs=2e-3)

    def test_dephase_zero_width_matches_sweep(self, capsys):
        code, out, _ = run_cli(
            [
                "dephase", "--m", "0.5e6", "--nu", "1e14", "--kappa", "0.2e-6",
                "--F", "-0.3142", "--fwhm", "0",
            ],
            capsys,
        )
        assert code == 0
        assert float(out.split("=")[1]) == pytest.approx(0.9995681, abs=1e-5)


class TestParsers:
    def test_parse_axis(self):
        axis = parse_axis("kappa:1e-7:1e-6:11:log")
        assert axis.name == "kappa"
        assert axis.count == 11
        assert axis.scale == "log"
        with pytest.raises(CliError):
            parse_axis("F:0:1")
        with pytest.raises(CliError):
            parse_axis("speed:0:1:5")

    def test_parse_config_types(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("m = 2e6\nn_nodes = 31\nchannel = prep\n")
        values = parse_config(str(cfg))
        assert values == {"m": 2e6, "n_nodes": 31, "channel": "prep"}

    def test_missing_config_file(self):
        with pytest.raises(CliError):
            parse_config("/nonexistent/path.cfg")


def test_installed_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "tlzsim.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "tlz-scan v0.1.0"
