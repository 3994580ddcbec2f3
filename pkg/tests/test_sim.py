import csv
import io
import json

import numpy as np
import pytest

from pcep.sim import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentConfig,
    ReportIOError,
    ReportRow,
    SimulationReport,
    emit_report,
    load_report,
    rate_table,
    render_report,
    run_experiment,
    run_trial,
    thread_count,
)
from pcep.structure import build_code_structure


def _cfg(**kw):
    base = dict(n_exps=[8], p_grid=[0.0, 0.02], trials=30, master_seed=11)
    base.update(kw)
    return ExperimentConfig(**base)


def test_trial_p0():
    s = build_code_structure(0.0, 8)
    outcomes = [run_trial(s, t) for t in range(40)]
    assert not any(o.bob_frame_error for o in outcomes)
    ber = sum(o.eve_bit_errors for o in outcomes) / (40 * 256)
    assert 0.45 < ber < 0.55


def test_trial_frame_error_definition():
    s = build_code_structure(0.03, 8)
    for t in range(30):
        o = run_trial(s, t)
        assert o.bob_frame_error == (o.bob_bit_errors > 0)
        assert o.eve_frame_error == (o.eve_bit_errors > 0)


def test_trial_seed_reproducible():
    s = build_code_structure(0.02, 8)
    assert run_trial(s, np.random.SeedSequence(5)) == run_trial(s, np.random.SeedSequence(5))


def test_empty_grid():
    report = run_experiment(_cfg(p_grid=[]))
    assert report.rows == [] and report.skipped == []
    assert render_report(report, "csv") == ",".join(CSV_COLUMNS) + "\n"


def test_deterministic_across_runs_and_threads():
    a = render_report(run_experiment(_cfg(), threads=1))
    b = render_report(run_experiment(_cfg(), threads=1))
    c = render_report(run_experiment(_cfg(), threads=3))
    assert a == b == c


def test_seed_changes_results():
    a = render_report(run_experiment(_cfg(master_seed=1, p_grid=[0.02])))
    b = render_report(run_experiment(_cfg(master_seed=2, p_grid=[0.02])))
    assert a != b


def test_row_contents():
    report = run_experiment(_cfg())
    assert [(r.n_exp, r.p_m) for r in report.rows] == [(8, 0.0), (8, 0.02)]
    r0 = report.rows[0]
    assert r0.rate == 1.0 and r0.bob_fer == 0.0 and r0.rate_over_csec == 1.0
    assert r0.seconds == 0.0
    for r in report.rows:
        for v in (r.rate, r.bob_fer, r.bob_ber, r.eve_fer, r.eve_ber):
            assert 0.0 <= v <= 1.0
        assert r.trials == 30


def test_timing_opt_in():
    report = run_experiment(_cfg(p_grid=[0.01], trials=2, record_timing=True))
    assert report.rows[0].seconds > 0.0


@pytest.mark.parametrize(
    "kw",
    [
        dict(trials=0),
        dict(p_grid=[0.2]),
        dict(p_grid=[-0.01]),
        dict(n_exps=[3]),
        dict(n_exps=[25]),
        dict(format="xml"),
        dict(mu=3),
        dict(fer_target=1.5),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        _cfg(**kw)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("PCEP_THREADS", "4")
    assert thread_count() == 4
    monkeypatch.setenv("PCEP_THREADS", "x")
    with pytest.raises(ConfigError):
        thread_count()
    monkeypatch.delenv("PCEP_THREADS")
    assert thread_count() == 1


def test_csv_and_json_round_trip(tmp_path):
    report = run_experiment(_cfg(p_grid=[0.02]))
    csv_path = emit_report(report, "csv", tmp_path / "r.csv")
    json_path = emit_report(report, "json", tmp_path / "r.json")
    rows = list(csv.DictReader(io.StringIO(csv_path.read_text())))
    assert list(rows[0]) == list(CSV_COLUMNS)
    assert load_report(csv_path).rows == report.rows
    assert load_report(json_path).rows == report.rows
    parsed = json.loads(json_path.read_text())
    assert ReportRow(**parsed["rows"][0]) == report.rows[0]


def test_empty_report_header_only(tmp_path):
    path = emit_report(SimulationReport(), "csv", tmp_path / "e.csv")
    assert path.read_text().splitlines() == [",".join(CSV_COLUMNS)]


def test_io_error_has_path(tmp_path):
    target = tmp_path / "missing" / "r.csv"
    with pytest.raises(ReportIOError, match="missing"):
        emit_report(SimulationReport(), "csv", target)


def test_rate_table():
    rep = rate_table([10], [0.01, 0.02, 0.2])
    assert [r.p_m for r in rep.rows] == [0.01, 0.02]
    assert rep.rows[0].rate > rep.rows[1].rate > 0
    assert rep.skipped[0]["p_m"] == 0.2
