import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from polcor.cli import ConfigError, main, parse_config, parse_number, parse_sweep


def read_csv(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


@pytest.mark.parametrize("text, value", [
    ("1.5", 1.5), ("pi", math.pi), ("-pi/2", -math.pi / 2), ("3*pi/8", 3 * math.pi / 8),
    ("2pi", 2 * math.pi), ("1e-3", 1e-3),
])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value)


def test_parse_number_rejects_garbage():
    with pytest.raises(ValueError):
        parse_number("tau")


def test_flag_overrides_file(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\nduty=0.5\nseed = 3\n")
    cfg = parse_config(f, {"seed": "7"}, env={})
    assert cfg.duty == 0.5 and cfg.seed == 7


def test_out_of_range(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("duty=1.5\n")
    with pytest.raises(ConfigError, match=r"duty.*\(0, 1\)"):
        parse_config(f, env={})


def test_unknown_key(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("colour=blue\n")
    with pytest.raises(ConfigError, match="colour"):
        parse_config(f, env={})


def test_defaults():
    cfg = parse_config(None, {}, env={})
    assert (cfg.theta, cfg.xi, cfg.psi_a, cfg.psi_b, cfg.eta, cfg.i0, cfg.duty) == (0, 0, 0, 0, 0, 1, 0.5)


def test_env_seed_lowest_precedence(tmp_path):
    assert parse_config(None, {}, env={"POLCOR_SEED": "11"}).seed == 11
    f = tmp_path / "run.cfg"
    f.write_text("seed=12\n")
    assert parse_config(f, {}, env={"POLCOR_SEED": "11"}).seed == 12
    assert parse_config(f, {"seed": "13"}, env={"POLCOR_SEED": "11"}).seed == 13


@pytest.mark.parametrize("bad", ["colour:0:1:5", "xi:0:1:1", "xi:0:1"])
def test_sweep_validation(bad):
    with pytest.raises(ConfigError):
        parse_sweep(bad)


def test_fringe_scan_tracks_cos_squared(tmp_path):
    out = tmp_path / "fringe.csv"
    assert main(["fringe-scan", "--theta", "0", "--sweep", "xi:0:pi:9", "--pair", "AB",
                 "--bins", "5000", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 9
    for r in rows:
        xi = float(r["xi"])
        assert float(r["closed_form"]) == pytest.approx(math.cos(-xi) ** 2, abs=1e-12)
        assert float(r["estimate"]) == pytest.approx(float(r["closed_form"]), abs=1e-12)
    assert "# sweep=xi:0:pi:9" in out.read_text()


def test_local_scan_is_flat(tmp_path):
    out = tmp_path / "local.csv"
    assert main(["local-scan", "--theta", "0.4", "--sweep", "psi_a:0:2*pi:16", "--bins", "5000",
                 "--out", str(out)]) == 0
    rows = [r for r in read_csv(out) if r["party"] == "alpha"]
    assert len(rows) == 16
    for col in ("port1_mean", "port2_mean", "full_mean"):
        vals = np.array([float(r[col]) for r in rows])
        assert np.ptp(vals) < 1e-12


def test_chsh_prints_s(tmp_path, capsys):
    out = tmp_path / "chsh.csv"
    assert main(["chsh", "--bins", "20000", "--out", str(out)]) == 0
    err = capsys.readouterr().err
    assert "S closed-form = 2.828427" in err
    s_row = [r for r in read_csv(out) if r["setting"] == "S"][0]
    assert float(s_row["E_closed"]) == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_algebra_output(capsys):
    assert main(["algebra", "--theta", "pi/8", "--xi", "0"]) == 0
    text = capsys.readouterr().out
    assert "no temporal overlap" in text and "closed form R_AB = 0.853553390593" in text


def test_csv_header_reproduces_run(tmp_path):
    first = tmp_path / "a.csv"
    assert main(["simulate", "--theta", "0.3", "--xi", "1.2", "--eta", "0.5", "--seed", "21",
                 "--bins", "3000", "--out", str(first)]) == 0
    cfg_file = tmp_path / "from_header.cfg"
    cfg_file.write_text("\n".join(ln[2:] for ln in first.read_text().splitlines()
                                  if ln.startswith("# ") and "=" in ln))
    second = tmp_path / "b.csv"
    assert main(["simulate", "--config", str(cfg_file), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_config_error_exit_code(capsys):
    assert main(["simulate", "--duty", "1.5"]) == 1
    assert "duty" in capsys.readouterr().err


def test_correlator_cli_files(tmp_path):
    common = ["--theta", "0.2", "--xi", "0.9", "--seed", "4", "--bins", "2000"]
    assert main(["run-party", "--role", "alice", "--out", str(tmp_path / "a.bin"), *common]) == 0
    assert main(["run-party", "--role", "bob", "--out", str(tmp_path / "b.bin"), *common]) == 0
    assert main(["run-correlator", "--inputs", str(tmp_path / "a.bin"), str(tmp_path / "b.bin"),
                 "--out", str(tmp_path / "net.csv"), *common]) == 0
    assert main(["simulate", "--out", str(tmp_path / "loc.csv"), *common]) == 0
    assert (tmp_path / "net.csv").read_bytes() == (tmp_path / "loc.csv").read_bytes()
    assert main(["run-correlator", "--inputs", str(tmp_path / "a.bin"), str(tmp_path / "b.bin"),
                 "--theta", "0.2", "--seed", "5", "--bins", "2000"]) == 2


def test_networked_cli_processes(tmp_path):
    common = ["--theta", "0.5", "--seed", "77", "--bins", "10000"]
    corr = subprocess.Popen(
        [sys.executable, "-m", "polcor", "run-correlator", "--listen", "127.0.0.1:0",
         "--out", str(tmp_path / "net.csv"), *common],
        stderr=subprocess.PIPE, text=True)
    banner = corr.stderr.readline()
    port = banner.strip().rsplit(":", 1)[1]
    parties = [subprocess.Popen([sys.executable, "-m", "polcor", "run-party", "--role", role,
                                 "--connect", f"127.0.0.1:{port}", *common])
               for role in ("alice", "bob")]
    for p in parties:
        assert p.wait(timeout=60) == 0
    assert corr.wait(timeout=60) == 0
    assert main(["simulate", "--out", str(tmp_path / "loc.csv"), *common]) == 0
    assert (tmp_path / "net.csv").read_bytes() == (tmp_path / "loc.csv").read_bytes()
