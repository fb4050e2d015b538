import csv
import io
import shutil
import subprocess

import numpy as np
import pytest

from casimir_oqs import ConfigError, QuadratureError
from casimir_oqs import cli
from casimir_oqs.cli import (
    CSV_COLUMNS,
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_VERIFY,
    build_run_config,
    main,
    parse_config,
)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    body = "\n".join(line for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def header_config(text):
    lines = [line[2:] for line in text.splitlines()
             if line.startswith("# ") and " = " in line]
    return "\n".join(lines) + "\n"


class TestConfig:
    def test_parse_comments_and_blanks(self):
        raw = parse_config("# comment\n\nmedium.omega_p = 3  # trailing\n")
        assert raw == {"medium.omega_p": "3"}

    @pytest.mark.parametrize("text, key", [
        ("medium.nope = 1", "medium.nope"),
        ("verify.no_such_check = 1", "verify.no_such_check"),
        ("just text", "line 1"),
    ])
    def test_parse_errors_name_key(self, text, key):
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.key == key

    @pytest.mark.parametrize("sets, key", [
        ({"medium.omega_p": "abc"}, "medium.omega_p"),
        ({"env.gamma0": "-1"}, "env.gamma0"),
        ({"geometry.gap": "0"}, "geometry.gap"),
        ({"sweep.count": "1"}, "sweep.count"),
        ({"sweep.start": "5", "sweep.stop": "1"}, "sweep.start"),
        ({"sweep.variable": "mass"}, "sweep.variable"),
        ({"run.route": "matsubara", "thermal.temperature": "0"}, "run.route"),
        ({"run.route": "lifshitz_t0"}, "run.route"),
        ({"run.route": "bogus"}, "run.route"),
        ({"medium.omega_p": "inf"}, "medium.omega_p"),
    ])
    def test_validation_names_key(self, sets, key):
        sub = "sweep" if any(k.startswith("sweep.") for k in sets) else "force"
        with pytest.raises(ConfigError) as exc:
            build_run_config(sub, sets)
        assert exc.value.key == key
        assert key in str(exc.value)

    def test_log_grid_exact(self):
        rc = build_run_config("sweep", {"sweep.start": "1", "sweep.stop": "16",
                                        "sweep.count": "5", "sweep.spacing": "log"})
        assert list(rc.sweep_grid) == [1.0, 2.0, 4.0, 8.0, 16.0]

    def test_lossless_dielectric_real_axis_route_rejected(self):
        with pytest.raises(ConfigError, match="Matsubara"):
            build_run_config("force", {"env.gamma0": "0"})


class TestForce:
    def test_vacuum_slabs_give_zero(self, capsys):
        code, out, _ = run(capsys, "force", "--set", "medium.omega_p=0")
        assert code == EXIT_OK
        rows = table(out)
        assert float(rows[0]["F_total"]) == 0.0

    def test_columns_and_header(self, capsys):
        code, out, _ = run(capsys, "force")
        assert code == EXIT_OK
        lines = out.splitlines()
        assert lines[0].startswith("# casimir-oqs force ")
        assert "# medium.omega_p = 2" in lines
        assert next(l for l in lines if not l.startswith("#")) == ",".join(CSV_COLUMNS["force"])

    def test_route_all_consistency(self, capsys):
        code, out, _ = run(capsys, "force", "--set", "run.route=all")
        assert code == EXIT_OK
        rows = table(out)
        assert [r["route"] for r in rows] == ["decomposed", "closed", "semispace_real",
                                              "matsubara"]
        assert all(float(r["consistency"]) < 1e-6 for r in rows)

    def test_route_all_marks_inapplicable(self, capsys):
        code, out, _ = run(capsys, "force", "--set", "run.route=all",
                           "--set", "env.gamma0=0", "--set", "medium.omega0=0")
        rows = {r["route"]: r for r in table(out)}
        assert code == EXIT_OK
        assert rows["semispace_real"]["error"].startswith("skipped")
        assert float(rows["decomposed"]["F_langevin"]) == 0.0

    def test_matsubara_at_zero_temperature(self, capsys):
        code, _, err = run(capsys, "force", "--set", "run.route=matsubara",
                           "--set", "thermal.temperature=0")
        assert code == EXIT_CONFIG
        assert "run.route" in err

    def test_unknown_key(self, capsys):
        code, _, err = run(capsys, "force", "--set", "medium.colour=red")
        assert code == EXIT_CONFIG
        assert "medium.colour" in err

    def test_numerical_failure_keeps_partial_row(self, capsys):
        code, out, _ = run(capsys, "force", "--set", "quad.max_panels=16",
                           "--set", "quad.rel_tol=1e-14", "--set", "quad.abs_tol=1e-300")
        assert code == EXIT_NUMERIC
        row = table(out)[0]
        assert row["error"].startswith("QuadratureError")
        assert row["F_total"] != ""

    def test_header_reproduces_run(self, capsys, tmp_path):
        code, first, _ = run(capsys, "force", "--set", "geometry.gap=1.7",
                             "--set", "env.cutoff=gaussian", "--set", "env.lambda_cut=4")
        assert code == EXIT_OK
        cfg = tmp_path / "replay.cfg"
        cfg.write_text(header_config(first))
        code, second, _ = run(capsys, "force", "--config", str(cfg))
        assert code == EXIT_OK and second == first

    def test_out_file_rewritten(self, capsys, tmp_path):
        path = tmp_path / "f.csv"
        path.write_text("stale\n" * 100)
        assert main(["force", "--out", str(path)]) == EXIT_OK
        text = path.read_text()
        assert "stale" not in text and text.startswith("# casimir-oqs force")


class TestSweep:
    ARGS = ("sweep", "--set", "sweep.start=1", "--set", "sweep.stop=16",
            "--set", "sweep.count=5")

    def test_gap_sweep_monotone(self, capsys):
        # at T = 0 every gap is resolved; at T > 0 the force falls below the
        # quadrature floor once T a >~ 3
        code, out, _ = run(capsys, *self.ARGS, "--set", "thermal.temperature=0")
        assert code == EXIT_OK
        rows = table(out)
        assert [float(r["swept_value"]) for r in rows] == [1, 2, 4, 8, 16]
        f = np.array([float(r["F_total"]) for r in rows])
        assert np.all(np.diff(np.abs(f)) < 0)
        ref = [-0.0040978809425625626, -0.0011781856750053144, -0.0002356485788846646,
               -3.354545286047442e-05, -3.5885926696226266e-06]
        np.testing.assert_allclose(f, ref, rtol=1e-7)

    def test_rows_match_single_runs(self, capsys):
        code, out, _ = run(capsys, "sweep", "--set", "sweep.variable=temperature",
                           "--set", "sweep.start=0.2", "--set", "sweep.stop=0.6",
                           "--set", "sweep.count=3", "--set", "sweep.spacing=linear")
        assert code == EXIT_OK
        for row in table(out):
            _, single, _ = run(capsys, "force", "--set",
                               f"thermal.temperature={row['swept_value']}")
            assert table(single)[0]["F_total"] == row["F_total"]

    def test_parallel_identical(self, capsys):
        _, serial, _ = run(capsys, *self.ARGS)
        _, parallel, _ = run(capsys, *self.ARGS, "--jobs", "2")
        assert serial == parallel

    def test_per_point_failure_continues(self, capsys, monkeypatch):
        real = cli._ROUTE_FUNCS["closed"]

        def flaky(cfg):
            if cfg.geometry.gap == 2.0:
                raise QuadratureError("injected", value=-1.0, abs_error=1.0)
            return real(cfg)

        monkeypatch.setitem(cli._ROUTE_FUNCS, "closed", flaky)
        code, out, _ = run(capsys, *self.ARGS)
        rows = table(out)
        assert code == EXIT_NUMERIC
        assert len(rows) == 5
        assert [bool(r["error"]) for r in rows] == [False, True, False, False, False]

    def test_invalid_point_rejected_upfront(self, capsys):
        code, _, err = run(capsys, "sweep", "--set", "sweep.variable=gamma0",
                           "--set", "sweep.start=0", "--set", "sweep.stop=0.2",
                           "--set", "sweep.spacing=linear")
        assert code == EXIT_CONFIG
        assert "requires Matsubara route" in err


class TestEpsilonChi:
    def test_epsilon_vacuum(self, capsys):
        code, out, _ = run(capsys, "epsilon", "--set", "medium.omega_p=0",
                           "--set", "grid.start=0.1", "--set", "grid.stop=5",
                           "--set", "grid.count=7")
        assert code == EXIT_OK
        rows = table(out)
        assert len(rows) == 7
        assert all(float(r["re_eps"]) == 1 and float(r["im_eps"]) == 0 for r in rows)

    def test_chi_dual_route(self, capsys):
        code, out, _ = run(capsys, "chi", "--set", "env.alpha=3",
                           "--set", "env.cutoff=lorentzian", "--set", "env.lambda_cut=5",
                           "--set", "env.gamma0=0.1", "--set", "grid.start=-5",
                           "--set", "grid.stop=15", "--set", "grid.count=41")
        assert code == EXIT_OK
        rows = table(out)
        tau = np.array([float(r["tau"]) for r in rows])
        ana = np.array([float(r["chi_analytic"]) for r in rows])
        num = np.array([float(r["chi_numeric"]) for r in rows])
        assert np.all(ana[tau < 0] == 0)
        assert np.max(np.abs(ana - num)) < 1e-4 * np.max(np.abs(ana))

    def test_chi_without_closed_form(self, capsys):
        code, out, _ = run(capsys, "chi", "--set", "grid.start=0",
                           "--set", "grid.stop=2", "--set", "grid.count=3")
        assert code == EXIT_OK
        assert all(r["chi_analytic"] == "" for r in table(out))


class TestVerify:
    def test_default_passes(self, capsys):
        code, out, _ = run(capsys, "verify")
        assert code == EXIT_OK
        assert "0 failed" in out
        assert not any(l.startswith("FAIL") for l in out.splitlines())

    def test_lossless_dielectric_skips_real_axis(self, capsys):
        code, out, _ = run(capsys, "verify", "--set", "env.gamma0=0")
        assert code == EXIT_OK
        skipped = [l for l in out.splitlines() if l.startswith("SKIP")]
        assert any("central_identity" in l and "requires Matsubara route" in l
                   for l in skipped)
        assert any(l.split()[:2] == ["PASS", "matsubara_T0_limit"]
                   for l in out.splitlines())

    def test_corrupted_tolerance_names_check(self, capsys):
        code, out, _ = run(capsys, "verify", "--set", "verify.central_identity=1e-30")
        assert code == EXIT_VERIFY
        assert any(l.split()[:2] == ["FAIL", "central_identity"] for l in out.splitlines())
        assert "failing checks: central_identity" in out


@pytest.mark.skipif(shutil.which("casimir-oqs") is None, reason="entry point not installed")
def test_console_script():
    proc = subprocess.run(["casimir-oqs", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "units" in proc.stdout and "thermal.temperature" in proc.stdout
