import json
from pathlib import Path

import pytest

from mlab.cli import main

RUN_CONFIG = """\
[run]
max_moves = 5
out_dir = {out}

[strategy:doubler]
martingale = double_on:0
rule = monotonic

[strategy:skipper]
martingale = double_on:0
rule = injection:even

[source:zeros]
id = all-zeros

[source:mixed]
id = periodic:01
"""


def test_run_emits_expected_csv(tmp_path, capsys):
    config = tmp_path / "run.ini"
    config.write_text(RUN_CONFIG.format(out=tmp_path / "out"))
    assert main(["run", str(config)]) == 0
    csv_path = tmp_path / "out" / "doubler__zeros.csv"
    rows = csv_path.read_text().splitlines()
    assert rows[0] == "move,position,bit,capital_num,capital_den,halt"
    assert rows[-1] == "4,4,0,32,1,completed"
    assert (tmp_path / "out" / "skipper__mixed.csv").exists()


def test_run_outputs_are_byte_deterministic(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        config = tmp_path / f"run_{out.name}.ini"
        config.write_text(RUN_CONFIG.format(out=out))
        assert main(["run", str(config)]) == 0
    for name in ("doubler__zeros.csv", "skipper__mixed.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_run_plot_renders_figures(tmp_path):
    config = tmp_path / "run.ini"
    config.write_text(RUN_CONFIG.format(out=tmp_path / "out"))
    assert main(["run", str(config), "--plot"]) == 0
    png = tmp_path / "out" / "doubler__zeros.png"
    assert png.exists() and png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_run_config_errors_exit_2(tmp_path):
    missing = tmp_path / "nope.ini"
    assert main(["run", str(missing)]) == 2
    no_strategies = tmp_path / "empty.ini"
    no_strategies.write_text("[run]\nmax_moves = 3\n[source:z]\nid = all-zeros\n")
    assert main(["run", str(no_strategies)]) == 2


def test_diagonalize_replay_roundtrip(tmp_path, capsys):
    cert = tmp_path / "cert.bin"
    assert main(["diagonalize", "--roster", "pmr-std", "--schedule", "s64",
                 "--variant", "pmr", "--out", str(cert)]) == 0
    forward = capsys.readouterr().out
    prefix = [l for l in forward.splitlines() if l.startswith("prefix:")][0]
    word = prefix.split()[1]
    assert main(["replay", str(cert)]) == 0
    assert capsys.readouterr().out.strip() == word
    assert main(["replay", str(cert), "--length", "10"]) == 0
    assert capsys.readouterr().out.strip() == word[:10]
    assert main(["replay", str(cert), "--check"]) == 0


def test_diagonalize_adversary_plot(tmp_path):
    cert = tmp_path / "cert.bin"
    assert main(["diagonalize", "--roster", "tmr-std", "--schedule", "s64",
                 "--variant", "tmr", "--out", str(cert), "--plot"]) == 0
    assert (tmp_path / "cert.png").exists()


def test_replay_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"not a certificate")
    assert main(["replay", str(bad)]) == 2


def test_splitting_reports(tmp_path, capsys):
    out = tmp_path / "split"
    assert main(["splitting", "--checkpoints", "0,256,512", "--source",
                 "all-zeros", "--thresholds", "4,4", "--out-dir", str(out),
                 "--plot"]) == 0
    gains = (out / "gains.csv").read_text().splitlines()
    assert gains[0] == "interval,moves,gain_num,gain_den,cleared_one"
    assert all(row.endswith(",1") for row in gains[1:])
    assert (out / "trajectory.csv").exists()
    assert (out / "trajectory.png").exists()


def test_splitting_bad_checkpoints_exit_2(tmp_path):
    assert main(["splitting", "--checkpoints", "0,4,7", "--source",
                 "all-zeros", "--out-dir", str(tmp_path)]) == 2


def test_complexity_command(capsys):
    assert main(["complexity", "0" * 32, "--condition", "32"]) == 0
    out = capsys.readouterr().out
    assert "bound=4" in out and "witness_bits=1010" in out
    assert "witness_hex=a0" in out


def test_enumerate_low_command(capsys):
    assert main(["enumerate-low", "--length", "8", "--threshold", "5"]) == 0
    words = capsys.readouterr().out.split()
    assert words == ["00000000", "11111111"]


def test_verify_command(capsys):
    assert main(["verify", "counting"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] counting/low_sets_below_power_bound" in out
    assert main(["verify", "bogus"]) == 2
