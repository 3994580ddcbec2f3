import json

import pytest

from pcep.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from pcep.sim import CSV_COLUMNS


def test_sim_csv(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["sim", "--n-exp", "6", "--p", "0.0,0.02", "--trials", "5", "--seed", "3", "--out", str(out)])
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS) and len(lines) == 3


def test_sim_stdout_json(capsys):
    assert main(["sim", "--n-exp", "6", "--p", "0.01", "--trials", "3", "--format", "json"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["rows"][0]["n_exp"] == 6


def test_construct(tmp_path):
    out = tmp_path / "s.json"
    assert main(["construct", "--p", "0.02", "--n-exp", "8", "--out", str(out)]) == EXIT_OK
    d = json.loads(out.read_text())
    assert sorted(d["r"] + d["a"] + d["b"]) == list(range(256))


def test_rate(capsys):
    assert main(["rate", "--p-grid", "0.01,0.02", "--n-exp", "8"]) == EXIT_OK
    assert len(capsys.readouterr().out.splitlines()) == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["sim", "--n-exp", "2", "--p", "0.01", "--trials", "1"],
        ["sim", "--n-exp", "6", "--p", "0.3", "--trials", "1"],
        ["sim", "--n-exp", "6", "--p", "abc", "--trials", "1"],
        ["construct", "--p", "0.3", "--n-exp", "8"],
        ["construct", "--p", "0.02", "--n-exp", "8", "--fer-target", "2"],
        ["bogus"],
    ],
)
def test_config_errors(argv, capsys):
    assert main(argv) == EXIT_CONFIG


def test_io_error(tmp_path):
    bad = tmp_path / "nope" / "r.csv"
    assert main(["sim", "--n-exp", "6", "--p", "0.01", "--trials", "1", "--out", str(bad)]) == EXIT_IO
    assert main(["rate", "--p-grid", "0.01", "--n-exp", "6", "--out", str(bad)]) == EXIT_IO
