import json
import subprocess
import sys

import pytest

from gmssc.cli import EXIT_CONFIG, EXIT_DESK_SCALE, EXIT_IO, EXIT_OK, main
from gmssc.harness import CSV_HEADER, read_csv
from gmssc.model import parse_instance


def write_config(path, **kw):
    cfg = {
        "n": 6,
        "T": 30,
        "generator": {"kind": "anchored", "anchors": [1, 2], "extra": 2},
        "algorithms": ["random", "flt", {"kind": "opgd+det", "r": 3}, {"kind": "opgd+rand", "params": "mssc"}],
        "seeds": [0, 1],
    }
    cfg.update(kw)
    path.write_text(json.dumps(cfg))
    return path


def test_generate_round_trips(tmp_path):
    out = tmp_path / "inst.json"
    assert main(["generate", "--n", "10", "--anchors", "1,2", "--extra", "3", "--T", "25", "--seed", "4", "--out", str(out)]) == EXIT_OK
    inst = parse_instance(out.read_bytes())
    assert inst.n == 10 and inst.T == 25
    assert all(len(r) == 4 for r in inst.requests)


def test_generate_bad_sizes(capsys):
    assert main(["generate", "--n", "4", "--anchors", "1", "--extra", "5", "--T", "3"]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_run_and_summarize(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json")
    out = tmp_path / "res.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert out.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert len(read_csv(out).rows) == 4 * 2 * 30
    capsys.readouterr()
    assert main(["summarize", "--in", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert text.startswith("algorithm,seeds,final_avg_cost")
    assert "flt,2," in text


def test_run_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path / "cfg.json")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["run", "--config", str(cfg), "--out", str(a)])
    main(["run", "--config", str(cfg), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_run_config_error(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", T=0)
    assert main(["run", "--config", str(cfg)]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == EXIT_CONFIG


def test_run_desk_scale(tmp_path):
    cfg = write_config(tmp_path / "cfg.json", n=10, algorithms=["flt", "brute"])
    out = tmp_path / "r.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_DESK_SCALE
    # the other algorithm still produced its rows
    assert {r.algorithm for r in read_csv(out).rows} == {"flt"}


def test_io_errors(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == EXIT_IO
    assert main(["summarize", "--in", str(tmp_path / "missing.csv")]) == EXIT_IO
    cfg = write_config(tmp_path / "cfg.json")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "no" / "dir.csv")]) == EXIT_IO


def test_usage_error_is_config_error():
    with pytest.raises(SystemExit) as ei:
        main(["run"])
    assert ei.value.code == EXIT_CONFIG


def test_console_script_entry(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "gmssc.cli", "generate", "--n", "3", "--anchors", "1", "--extra", "1", "--T", "2"],
        capture_output=True,
        env={"GMSSC_LOG_LEVEL": "debug", "PATH": ""},
    )
    assert proc.returncode == 0
    assert parse_instance(proc.stdout).T == 2
