"""Command line behavior: output text, config precedence, exit codes."""
import json

import pytest

from bll.cli import cli_main

WORKED_M4 = "m_4(t) = 296 - 592 exp(-t) + 256 exp(-2t) + 112 exp(-3t) - 71 exp(-4t)"


# --- moments ---

def test_moments_default_run_prints_worked_example(capsys):
    assert cli_main(["moments", "--alpha", "1", "--c", "1", "--k-max", "5"]) == 0
    out = capsys.readouterr().out
    assert "m_1(t) = 2 - exp(-t)" in out
    assert "m_2(t) = 8 - 8 exp(-t) + exp(-2t)" in out
    assert "m_3(t) = 44 - 66 exp(-t) + 18 exp(-2t) + 5 exp(-3t)" in out
    assert WORKED_M4 in out
    assert ("m_5(t) = 2312 - 5780 exp(-t) + 3460 exp(-2t) + 1880 exp(-3t) "
            "- 2530 exp(-4t) + 659 exp(-5t)") in out
    assert "limits (t -> infinity): 2, 8, 44, 296, 2312" in out
    assert "constant terms verified against the stationary moment recursion: ok" in out


def test_moments_json_format(capsys):
    assert cli_main(["moments", "--format", "json", "--k-max", "4"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["alpha"] == 1.0 and payload["k_max"] == 4
    assert payload["coefficients"][0] == ["2", "-1"]
    assert payload["coefficients"][3] == ["296", "-592", "256", "112", "-71"]
    assert payload["limits"] == ["1", "2", "8", "44", "296"]


def test_moments_rational_parameters(capsys):
    assert cli_main(["moments", "--alpha", "1.5", "--c", "0.5", "--k-max", "2"]) == 0
    out = capsys.readouterr().out
    assert "m_1(t) = 2 - exp(-t)" in out  # alpha + c = 2 again, different route
    assert "m_2(t) = 7 - 7 exp(-t) + exp(-2t)" in out
    assert "limits (t -> infinity): 2, 7" in out


def test_moments_rejects_bad_domain(capsys):
    assert cli_main(["moments", "--alpha", "0.3"]) == 2
    assert "error:" in capsys.readouterr().err


# --- limit ---

def test_limit_prints_stationary_data(capsys):
    assert cli_main(["limit", "--k-max", "5"]) == 0
    out = capsys.readouterr().out
    assert "stationary moments: 1, 2, 8, 44, 296, 2312" in out
    assert "quadrature (6 nodes)" in out
    assert out.count("node ") == 6
    assert "resolvent at z =" in out


def test_limit_json_quadrature_is_tight(capsys):
    assert cli_main(["limit", "--format", "json", "--k-max", "5"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["stationary_moments"] == ["1", "2", "8", "44", "296", "2312"]
    assert payload["quadrature_max_rel_error"] < 1e-12
    assert len(payload["quadrature"]["nodes"]) == 6
    assert all(x > 0 for x in payload["quadrature"]["nodes"])
    assert all(g[1] > 0 for g in (e["value"] for e in payload["resolvent"]))


# --- config files ---

def test_config_file_sets_defaults_and_flags_win(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("k_max = 3  # comment\nalpha = 1\nc = 1\n")
    assert cli_main(["moments", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "m_3(t)" in out and "m_4(t)" not in out
    assert cli_main(["moments", "--config", str(cfg), "--k-max", "5"]) == 0
    out = capsys.readouterr().out
    assert "m_5(t)" in out


def test_config_file_allows_foreign_keys(tmp_path, capsys):
    # one shared file may carry keys for several subcommands
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_particles = 50\nk_max = 2\n")
    assert cli_main(["moments", "--config", str(cfg)]) == 0
    assert "m_2(t)" in capsys.readouterr().out


def test_config_file_errors_exit_2(tmp_path, capsys):
    bad_key = tmp_path / "bad_key.cfg"
    bad_key.write_text("flux_capacitor = 1\n")
    assert cli_main(["moments", "--config", str(bad_key)]) == 2
    assert "unknown key" in capsys.readouterr().err
    bad_line = tmp_path / "bad_line.cfg"
    bad_line.write_text("k_max 3\n")
    assert cli_main(["moments", "--config", str(bad_line)]) == 2
    assert "expected 'key = value'" in capsys.readouterr().err
    bad_value = tmp_path / "bad_value.cfg"
    bad_value.write_text("k_max = soup\n")
    assert cli_main(["moments", "--config", str(bad_value)]) == 2
    assert "not a valid int" in capsys.readouterr().err
    assert cli_main(["moments", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert "cannot read config" in capsys.readouterr().err


# --- simulate ---

SIM_ARGS = ["simulate", "--n-particles", "6", "--dt", "0.05", "--t-max", "0.3",
            "--k-max", "2", "--replicas", "2", "--seed", "0"]


def test_simulate_writes_trace_csv(tmp_path, capsys):
    out_path = tmp_path / "trace"
    assert cli_main(SIM_ARGS + ["--out", str(out_path)]) == 0
    out = capsys.readouterr().out
    assert "seed 0: t=0.3, S_1=" in out
    assert "seed 1:" in out
    assert f"trace written to {out_path}.csv" in out
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0] == "run_id,k,N,seed,time,value"
    # 2 replicas x 2 orders x 7 grid points
    assert len(lines) == 1 + 2 * 2 * 7
    first = lines[1].split(",")
    assert len(first[0]) == 12
    assert first[1] == "1" and first[2] == "6" and first[3] == "0"
    assert float(first[4]) == 0.0
    assert float(first[5]) > 0


def test_simulate_reruns_are_byte_identical(tmp_path):
    cli_main(SIM_ARGS + ["--out", str(tmp_path / "a")])
    cli_main(SIM_ARGS + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_simulate_json_trace(tmp_path, capsys):
    assert cli_main(SIM_ARGS + ["--out", str(tmp_path / "t"), "--format", "json"]) == 0
    payload = json.loads((tmp_path / "t.json").read_text())
    assert set(payload) == {"spec", "traces"}
    assert payload["spec"]["n_particles"] == 6
    assert len(payload["traces"]) == 2
    tr = payload["traces"][0]
    assert tr["seed"] == 0
    assert len(tr["grid"]) == 7
    assert tr["values"][0] == [1.0] * 7  # order zero row
    assert len(tr["values"]) == 3


def test_simulate_usage_errors(capsys):
    assert cli_main(["simulate", "--scheme", "magic"]) == 2
    assert "scheme must be one of" in capsys.readouterr().err
    assert cli_main(["simulate", "--format", "text"]) == 2
    assert "csv or json" in capsys.readouterr().err
    assert cli_main(["simulate", "--dt", "0.07", "--t-max", "0.3"]) == 2
    assert "multiple" in capsys.readouterr().err


# --- verify and report ---

VERIFY_ARGS = ["verify", "--n-particles", "60", "--replicas", "4",
               "--dt", "0.05", "--t-max", "1", "--k-max", "2", "--seed", "0"]


@pytest.fixture(scope="module")
def verify_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("verify")
    out_path = tmp / "results"
    import io
    from contextlib import redirect_stdout
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli_main(VERIFY_ARGS + ["--out", str(out_path), "--format", "both"])
    return code, buf.getvalue(), out_path


def test_verify_prints_full_battery(verify_run):
    code, out, _ = verify_run
    assert code in (0, 1)
    for fragment in ("moment structure:", "quadrature:", "resolvent:",
                     "convergence:", "stationarity:", "martingale scaling:"):
        assert fragment in out
    lines = out.splitlines()
    assert all(l.startswith(("PASS  ", "FAIL  ", "ANOMALY  ", "verdict:",
                             "results written to")) for l in lines)
    verdict = [l for l in lines if l.startswith("verdict:")]
    assert len(verdict) == 1
    assert verdict[0] == ("verdict: pass" if code == 0 else "verdict: fail")
    # the cheap structure checks hold at any scale
    structural = [l for l in lines if l.startswith(("PASS", "FAIL"))][:3]
    assert all(l.startswith("PASS") for l in structural)


def test_verify_emits_results_files(verify_run):
    code, out, out_path = verify_run
    csv_file = out_path.with_suffix(".csv")
    json_file = out_path.with_suffix(".json")
    assert csv_file.exists() and json_file.exists()
    assert f"results written to {csv_file}" in out
    header = csv_file.read_text().splitlines()[0]
    assert header == "run_id,k,N,seed,metric,value"
    payload = json.loads(json_file.read_text())
    assert set(payload) == {"spec", "thresholds", "results", "anomalies", "pass"}
    assert payload["pass"] == (code == 0)
    names = set(payload["thresholds"])
    assert {"SweepReport", "LongtimeReport", "MartingaleReport"} <= names


def test_report_rerenders_summary(verify_run, capsys):
    code, _, out_path = verify_run
    rc = cli_main(["report", str(out_path.with_suffix(".json"))])
    out = capsys.readouterr().out
    assert rc == code
    assert out.startswith("runs:")
    assert "thresholds [MartingaleReport]" in out
    assert "nvar_ratio" in out
    assert out.rstrip().endswith("verdict: pass" if code == 0 else "verdict: fail")


def test_report_usage_errors(tmp_path, capsys):
    assert cli_main(["report", str(tmp_path / "nope.json")]) == 2
    assert "cannot load" in capsys.readouterr().err
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert cli_main(["report", str(broken)]) == 2
    capsys.readouterr()
    partial = tmp_path / "partial.json"
    partial.write_text(json.dumps({"spec": [], "results": []}))
    assert cli_main(["report", str(partial)]) == 2
    assert "missing" in capsys.readouterr().err
