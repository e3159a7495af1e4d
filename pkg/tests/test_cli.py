import json
import subprocess
import sys

import pytest

from shortcut_metrics.cli import ENV_OUT, main, read_config_file
from shortcut_metrics.suites import ConfigError, RunConfig
from shortcut_metrics.vertical_metric import schedule


def run(capsys, *argv, environ=None):
    code = main(list(argv), environ={} if environ is None else environ)
    out, err = capsys.readouterr()
    return code, out, err


def test_build_heisenberg_summary(tmp_path, capsys):
    code, out, _ = run(capsys, "build", "--m", "5", "--trunc", "3", "--out", str(tmp_path))
    assert code == 0
    data = json.loads((tmp_path / "build-heisenberg.json").read_text())
    assert data["space"] == "heisenberg" and data["lam"] == 0.5
    assert sorted(data["levels"]) == ["1", "2", "3"]
    assert data["shortcuts"] == sum(v["shortcuts"] for v in data["levels"].values())
    assert "level 1:" in out


@pytest.mark.parametrize("space", ["kset", "snowflake", "synthetic"])
def test_build_other_spaces(tmp_path, capsys, space):
    code, _, _ = run(capsys, "build", "--space", space, "--lam", "0.25", "--trunc", "3", "--out", str(tmp_path))
    assert code == 0
    data = json.loads((tmp_path / f"build-{space}.json").read_text())
    assert data["shortcuts"] > 0


def test_distance_heisenberg_bounds(capsys):
    code, out, _ = run(capsys, "distance", "--from", "0,0,0", "--to", "1,0,0", "--m", "5", "--trunc", "3")
    assert code == 0
    res = json.loads(out)
    assert res["base"] == 1.0
    assert 0 <= res["lower"] <= res["value"] <= res["base"]
    assert res["lower"] == pytest.approx(max(0.0, res["value"] - res["epsilon"]))


def test_distance_kset_and_line(capsys):
    code, out, _ = run(capsys, "distance", "--space", "kset", "--from", "0,0,0", "--to", "0,0,0", "--trunc", "4")
    assert code == 0 and json.loads(out)["value"] == 0.0
    code, out, _ = run(capsys, "distance", "--space", "synthetic", "--lam", "0.25", "--from", "0.1", "--to", "0.6", "--trunc", "3")
    res = json.loads(out)
    assert code == 0 and res["base"] == pytest.approx(0.5) and res["value"] <= 0.5


def test_distance_usage_errors(capsys):
    code, _, err = run(capsys, "distance", "--from", "0,0", "--to", "1,0,0")
    assert code == 64 and "coordinates" in err
    code, _, err = run(capsys, "distance", "--from", "5,5,5", "--to", "0,0,0", "--m", "5", "--trunc", "3")
    assert code == 64 and "outside" in err
    code, _, _ = run(capsys, "distance", "--space", "synthetic", "--lam", "0.25", "--from", "2", "--to", "0", "--trunc", "2")
    assert code == 64
    code, _, err = run(capsys, "build", "--space", "synthetic", "--lam", "0.5")
    assert code == 64 and "1/4" in err


def test_aseq_prints_bits(capsys):
    code, out, _ = run(capsys, "aseq", "--max", "20")
    assert code == 0
    bits = out.strip().split(",")
    assert bits[:8] == ["0", "0", "0", "1", "0", "0", "0", "1"]
    seq = schedule(20)
    assert bits == [str(seq(i)) for i in range(1, 21)]


def test_scan_headers_and_format(tmp_path, capsys):
    out = str(tmp_path)
    assert run(capsys, "scan", "--kind", "aseq", "--max", "20", "--out", out)[0] == 0
    lines = (tmp_path / "scan-aseq.csv").read_text().splitlines()
    assert lines[0] == "i,a" and len(lines) == 21 and lines[4] == "4,1"
    assert run(capsys, "scan", "--kind", "blowup", "--out", out)[0] == 0
    lines = (tmp_path / "scan-blowup.csv").read_text().splitlines()
    assert lines[0] == "j,s,ratio" and len(lines) == 1 + 11 * 7
    assert run(capsys, "scan", "--kind", "ratio", "--profile", "quick", "--out", out)[0] == 0
    lines = (tmp_path / "scan-ratio.csv").read_text().splitlines()
    assert lines[0] == "level,alpha,ratio,eps"
    level, alpha, ratio, eps = lines[1].split(",")
    assert int(level) == 3 and float(alpha) == 0.125
    assert len(ratio.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 12


def test_scan_ahlfors_header(tmp_path, capsys):
    assert run(capsys, "scan", "--kind", "ahlfors", "--out", str(tmp_path))[0] == 0
    lines = (tmp_path / "scan-ahlfors.csv").read_text().splitlines()
    assert lines[0] == "center,radius,base,shortcut" and len(lines) == 1 + 3 * 4


def test_verify_writes_report(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "--suite", "vertical", "--profile", "quick", "--out", str(tmp_path))
    assert code == 0
    rep = json.loads((tmp_path / "verify-vertical.json").read_text())
    assert rep["suite"] == "vertical" and rep["summary"]["fail"] == 0
    assert {c["status"] for c in rep["checks"]} == {"pass"}
    assert all(set(c) == {"id", "tag", "status", "margin", "details"} for c in rep["checks"])
    assert "PASS" in out


def test_verify_is_deterministic_across_threads_and_runs(tmp_path, capsys):
    paths = []
    for i, threads in enumerate(("1", "4", "4")):
        out = tmp_path / str(i)
        assert run(capsys, "verify", "--suite", "kset", "--profile", "quick", "--seed", "3", "--threads", threads, "--out", str(out))[0] == 0
        paths.append(out / "verify-kset.json")
    texts = [p.read_bytes() for p in paths]
    assert texts[0] == texts[1] == texts[2]


def test_usage_errors_exit_64(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--suite", "nope"], environ={})
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        main([], environ={})
    assert exc.value.code == 64
    assert run(capsys, "aseq", "--max", "5", "--lam", "1.5")[0] == 64
    assert run(capsys, "aseq", "--max", "5", "--lam", "0.3")[0] == 64
    assert run(capsys, "aseq", "--max", "5", "--config", str(tmp_path / "missing.cfg"))[0] == 64
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    code, _, err = run(capsys, "aseq", "--max", "5", "--config", str(bad))
    assert code == 64 and "unknown key" in err


def test_unwritable_output_exits_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "scan", "--kind", "aseq", "--max", "5", "--out", str(blocker / "sub"))
    assert code == 1 and "cannot write" in err


def test_config_file_parsing(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nseed = 9\nc-E = 12  # trailing\nprofile = quick\n\nlam=0.25\n")
    assert read_config_file(str(cfg)) == {"seed": 9, "c_E": 12.0, "profile": "quick", "lam": 0.25}
    cfg.write_text("seed = nine\n")
    with pytest.raises(ConfigError):
        read_config_file(str(cfg))
    cfg.write_text("seed\n")
    with pytest.raises(ConfigError):
        read_config_file(str(cfg))


def test_precedence_config_env_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"out = {tmp_path / 'from_cfg'}\n")
    args = ("scan", "--kind", "aseq", "--max", "4", "--config", str(cfg))
    assert run(capsys, *args)[0] == 0
    assert (tmp_path / "from_cfg" / "scan-aseq.csv").exists()
    env = {ENV_OUT: str(tmp_path / "from_env")}
    assert run(capsys, *args, environ=env)[0] == 0
    assert (tmp_path / "from_env" / "scan-aseq.csv").exists()
    assert run(capsys, *args, "--out", str(tmp_path / "from_flag"), environ=env)[0] == 0
    assert (tmp_path / "from_flag" / "scan-aseq.csv").exists()


def test_flags_after_subcommand_and_before():
    cfg = RunConfig(seed=2, trunc=5).validate()
    assert cfg.seed == 2 and cfg.trunc == 5
    assert main(["--seed", "2", "aseq", "--max", "3"], environ={}) == 0
    assert main(["aseq", "--seed", "2", "--max", "3"], environ={}) == 0


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "shortcut_metrics", "aseq", "--max", "8"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0,0,0,1,0,0,0,1"
    res = subprocess.run([sys.executable, "-m", "shortcut_metrics", "verify", "--suite", "bogus"], capture_output=True, text=True)
    assert res.returncode == 64
