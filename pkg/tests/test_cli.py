import json
import subprocess
import sys

import numpy as np
import pytest

from kgdecay.cli import EXPERIMENTS, ConfigError, main, parse_config, parse_text, run


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


# ---- parsing ----------------------------------------------------------------

def test_minimal_config_gets_defaults():
    cfg = parse_text("experiment=free-decay\n")
    assert cfg["m"] == 1.0 and cfg["sigma"] == 1.1 and cfg["N"] == 256
    assert cfg["potential"] == "zero" and cfg["seed"] == 0
    t = cfg.times
    assert t[0] == pytest.approx(10.0) and t[-1] == pytest.approx(100.0) and t.size == 8


def test_comments_lists_and_overrides():
    cfg = parse_text("# comment\nexperiment = evolve  # trailing\nt_list = 1, 2.5,4\n",
                     overrides=["c=-0.1"])
    assert list(cfg.times) == [1.0, 2.5, 4.0]
    assert cfg.potential().c == -0.1


def test_odd_grid_rejected(tmp_path):
    p = _write(tmp_path, "experiment=evolve\nN=15\n")
    with pytest.raises(ConfigError, match="N=15"):
        parse_config(p)


def test_duplicate_key_named(tmp_path):
    p = _write(tmp_path, "experiment=born\nsigma=1\nsigma=2\n")
    with pytest.raises(ConfigError, match=r"run\.cfg:3: duplicate key 'sigma'"):
        parse_config(p)


@pytest.mark.parametrize("text,msg", [
    ("experiment=born\nfoo=1\n", "unknown key 'foo'"),
    ("experiment=born\nN=abc\n", "bad value for 'N'"),
    ("experiment=born\nm=\n", "bad value for 'm'"),
    ("m=2\n", "missing required key 'experiment'"),
    ("experiment=nope\n", "unknown experiment"),
    ("experiment=born\nno equals sign\n", "expected key=value"),
    ("experiment=born\npotential=square\n", "unknown potential"),
])
def test_parse_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_text(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config(tmp_path / "absent.cfg")


def test_every_experiment_has_defaults():
    for exp in EXPERIMENTS:
        cfg = parse_text(f"experiment={exp}\n")
        assert cfg.grid().N >= 16


# ---- runs -------------------------------------------------------------------

def test_scattering_zero_potential(tmp_path):
    code = run(parse_text("experiment=scattering\n"), tmp_path)
    assert code == 0
    lines = (tmp_path / "scattering.csv").read_text().splitlines()
    assert lines[0].startswith("k,ReW,ImW,ReT,ImT")
    assert len(lines) == 101
    for line in lines[1:]:
        v = [float(s) for s in line.split(",")]
        assert v[3] == pytest.approx(1.0, abs=1e-10) and abs(v[4]) < 1e-10
        assert max(abs(a) for a in v[5:9]) < 1e-10


def test_resonance_zero_potential(tmp_path):
    assert run(parse_text("experiment=resonance\n"), tmp_path) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["results"][0]["is_resonant"] is True
    assert summary["pass"] is True


def test_free_decay_exponent(tmp_path):
    assert run(parse_text("experiment=free-decay\nn_t=6\n"), tmp_path) == 0
    res = json.loads((tmp_path / "summary.json").read_text())["results"][0]
    assert -0.6 <= res["exponent"] <= -0.4


def test_summary_schema(tmp_path):
    run(parse_text("experiment=resonance\npotential=sech_squared\nc=2\n"), tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary) == {"experiment", "config_echo", "results", "pass"}
    assert summary["experiment"] == "resonance"
    assert summary["config_echo"]["c"] == 2.0
    assert isinstance(summary["results"], list) and isinstance(summary["pass"], bool)


def test_byte_reproducible(tmp_path):
    text = "experiment=free-kernel\nseed=7\n"
    outs = []
    for d in ("a", "b"):
        run(parse_text(text), tmp_path / d)
        outs.append([(tmp_path / d / f).read_bytes() for f in ("free-kernel.csv", "summary.json")])
    assert outs[0] == outs[1]
    assert b"\r" not in outs[0][0] and b"-0.000000000000e+00" not in outs[0][0]


def test_threshold_failure_exit_and_message(tmp_path, capsys):
    # a coarse k grid breaks the Bessel agreement, which must be reported
    p = _write(tmp_path, "experiment=free-kernel\nn_k=64\nk_max=100\n")
    code = main(["--config", str(p), "--out-dir", str(tmp_path / "o")])
    assert code == 1
    err = capsys.readouterr().err
    assert "FAIL [free-kernel]: relative error" in err
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["pass"] is False


def test_main_config_error_exit(tmp_path, capsys):
    p = _write(tmp_path, "experiment=evolve\nN=15\n")
    assert main(["--config", str(p)]) == 2
    assert "N=15" in capsys.readouterr().err


def test_main_override_flag(tmp_path):
    p = _write(tmp_path, "experiment=resonance\n")
    code = main(["--config", str(p), "--out-dir", str(tmp_path),
                 "--override", "potential=sech_squared", "--override", "c=-0.4"])
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["results"][0]["is_resonant"] is False


def test_console_entry_point(tmp_path):
    p = _write(tmp_path, "experiment=resonance\n")
    proc = subprocess.run([sys.executable, "-m", "kgdecay.cli", "--config", str(p),
                           "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    rows = np.loadtxt(tmp_path / "resonance.csv", delimiter=",", skiprows=1)
    assert rows.shape[1] == 3
