"""Running scenarios, report formats and the command-line contract."""

import csv
import io
import json
import textwrap
from pathlib import Path

import pytest

from holocurv.cli import main
from holocurv.config import parse_scenarios
from holocurv.reports import RunReport
from holocurv.runner import run_scenarios

ROOT = Path(__file__).resolve().parent.parent
PROJECTIVE = ROOT / "scenarios" / "projective.ini"
FLOW = ROOT / "scenarios" / "flow.ini"

MIXED = textwrap.dedent("""
    [scenario ok]
    source = cp1_fs
    map = power:d=2
    checks = main_inequality, cpn_bound, chern_lu
    points = 4

    [scenario broken]
    source = torus_flat
    checks = cpn_bound, degeneracy_inequality
""")


@pytest.fixture(scope="module")
def mixed_report():
    return run_scenarios(parse_scenarios(MIXED))


def test_square_map_holds_everywhere(mixed_report):
    ok = [r for r in mixed_report.records if r.scenario == "ok"]
    assert [r.verdict for r in ok] == ["Holds", "Holds", "Holds"]
    chern = ok[2]
    assert len(chern.rows) == 4 * 3 and {"eps", "residual", "coords"} <= set(chern.rows[0])


def test_check_errors_are_captured_per_check(mixed_report):
    broken = [r for r in mixed_report.records if r.scenario == "broken"]
    assert broken[0].status == "error" and "DimensionMismatch" in broken[0].notes[0]
    assert broken[1].status == "pass"
    assert not mixed_report.passed


@pytest.mark.criterion(10)
def test_run_is_deterministic(mixed_report):
    again = run_scenarios(parse_scenarios(MIXED))
    assert again.numeric_fingerprint() == mixed_report.numeric_fingerprint()


def test_jsonl_round_trip(mixed_report):
    text = mixed_report.to_jsonl()
    back = RunReport.from_jsonl(text)
    assert back.to_jsonl() == text
    head = json.loads(text.splitlines()[0])
    assert head["type"] == "run" and head["scenarios"][0]["name"] == "ok"


def test_csv_and_text(mixed_report):
    rows = list(csv.DictReader(io.StringIO(mixed_report.to_csv())))
    assert len(rows) == len(mixed_report.records)
    assert float(rows[0]["lhs"]) == mixed_report.records[0].lhs
    text = mixed_report.to_text()
    assert "[ERROR] broken / cpn_bound" in text and "checks passed" in text
    point_rows = list(csv.DictReader(io.StringIO(mixed_report.rows_csv())))
    assert len(point_rows) == 12


def test_tolerance_floor_reapplies_verdict():
    sc = parse_scenarios("[scenario s]\nsource = cp1_fs\nmap = power:d=2\nchecks = main_inequality\n")
    rec = run_scenarios(sc, tolerance=100.0).records[0]
    assert rec.tolerance == 100.0 and rec.verdict == "HoldsWithEquality"


def test_cli_verify_passes(capsys):
    assert main(["verify", str(PROJECTIVE)]) == 0
    assert "12/12 checks passed" in capsys.readouterr().out


def test_cli_exit_status_on_failure(tmp_path, capsys):
    path = tmp_path / "mixed.ini"
    path.write_text(MIXED)
    assert main(["verify", str(path)]) == 1


def test_cli_config_error_exit_status(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[scenario x]\nsource = cp1_fs\nchecks = nope\n")
    assert main(["verify", str(path)]) == 2
    err = capsys.readouterr().err
    assert "checks" in err and "line 3" in err


def test_cli_out_dir_from_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("HOLOCURV_OUT_DIR", str(tmp_path / "out"))
    path = tmp_path / "s.ini"
    path.write_text("[scenario s]\nsource = cp1_fs\nmap = power:d=2\nchecks = chern_lu\npoints = 3\n")
    assert main(["verify", str(path), "--format", "json-lines"]) == 0
    report = tmp_path / "out" / "verify.jsonl"
    assert report.exists() and (tmp_path / "out" / "verify.rows.csv").exists()
    # re-render the stored run in another format
    assert main(["report", str(report), "--format", "csv", "--out", str(tmp_path / "again.csv")]) == 0
    assert (tmp_path / "again.csv").read_text().startswith("scenario,check,status")


def test_cli_krf(capsys):
    assert main(["krf", str(FLOW)]) == 0
    out = capsys.readouterr().out
    assert "TypeIIbForced" in out and "NotApplicable" in out
    assert main(["krf", "--lambda-total", "2", "--eta0", "1", "--ky", "0", "--dim", "1"]) == 0
    assert "TypeIIbForced" in capsys.readouterr().out
    assert main(["krf", "--lambda-total", "2"]) == 2


def test_cli_curvature(capsys):
    assert main(["curvature", "--metric", "cpn_fs:2", "--point", "0.1+0.2j, 0.3", "--format", "json-lines"]) == 0
    rec = json.loads(capsys.readouterr().out.splitlines()[1])
    assert rec["details"]["lambda"] == pytest.approx(18.84955592153876)
    assert rec["details"]["kappa_branch"] == "KahlerRho"
    assert main(["curvature", "--metric", "cpn_fs:2", "--point", "0.1"]) == 2
    assert main(["curvature", "--metric", "nowhere"]) == 2


def test_cli_suite(tmp_path, capsys):
    out = tmp_path / "suite.jsonl"
    assert main(["suite", "--format", "json-lines", "--out", str(out)]) == 0
    report = RunReport.from_jsonl(out.read_text())
    assert report.passed and all(r.reference["basis"] in ("literature", "derived", "trivial")
                                 for r in report.records)


def test_suite_flags_lost_stability_at_halved_resolution():
    from holocurv.suite import run_suite
    coarse = run_suite(resolution=24)
    unstable = [r for r in coarse.records if r.stable is False]
    assert unstable and all(r.check == "main_inequality" for r in unstable)
    assert "UNSTABLE" in coarse.to_text()


@pytest.mark.criterion(10)
def test_suite_verdicts_do_not_depend_on_seed():
    from holocurv.suite import run_suite
    a, b = run_suite(seed=0), run_suite(seed=5)
    assert [r.verdict for r in a.records] == [r.verdict for r in b.records]
    assert a.passed and b.passed
