import json
import subprocess
import sys

import pytest

from twobridge.cli import cache_dir, fmt_q, main, parse_knot, report_to_dict, run_knot
from twobridge.knot import InvalidKnotError


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("text,want", [("29/11", (29, 11, None)), ("45,17", (45, 17, None)),
                                       (" 45 , 17 name=10_10", (45, 17, "10_10"))])
def test_parse_knot(text, want):
    s = parse_knot(text)
    assert (s.p, s.q, s.name) == want


@pytest.mark.parametrize("text", ["29", "29/11/3", "a/b", "4/1", "9/3", ""])
def test_parse_knot_rejects(text):
    with pytest.raises(InvalidKnotError):
        parse_knot(text)


def test_fmt_q():
    from fractions import Fraction as F
    assert fmt_q(F(4)) == "4/1"
    assert fmt_q(F(-6, 4)) == "-3/2"


def test_json_schema_and_round_trip(capsys):
    code, out, _ = run(capsys, "obstruct", "9/2", "--format", "json")
    assert code == 0
    rec = json.loads(out)
    assert set(rec) == {"p", "q", "tau", "d", "tests", "verdict"}
    assert rec["verdict"] == "inconclusive"
    assert set(rec["tau"]) == {str(s) for s in range(9)}
    for t in rec["tests"]:
        assert {"kind", "p", "k", "value", "fired"} <= set(t)
        assert "/" in t["value"]
    assert json.dumps(rec, indent=2) + "\n" == out


def test_invalid_input_exit_code(capsys):
    assert run(capsys, "tau", "4/1")[0] == 1
    assert run(capsys, "tau", "nonsense")[0] == 1
    assert run(capsys, "obstruct", "29/11", "--oracle")[0] == 1  # guard
    assert run(capsys, "tau", "5/2", "--jobs", "0")[0] == 1
    assert run(capsys)[0] == 1


def test_invariant_violation_exit_code(capsys, monkeypatch):
    from twobridge import cli
    from twobridge.knot import InconsistencyError

    def broken(*a, **k):
        raise InconsistencyError("d-squared", "forced")
    monkeypatch.setattr(cli, "compute", broken)
    code, _, err = run(capsys, "tau", "5/2")
    assert code == 2 and "d-squared" in err


@pytest.mark.parametrize("cmd", ["tau", "d", "hfk", "obstruct"])
@pytest.mark.parametrize("fmt", ["table", "csv", "json"])
def test_formats(capsys, cmd, fmt):
    code, out, _ = run(capsys, cmd, "5/2", "--format", fmt)
    assert code == 0 and out
    if fmt == "json":
        json.loads(out)


def test_oracle_flag_agrees(capsys):
    a = run(capsys, "obstruct", "7/3", "--format", "json")[1]
    b = run(capsys, "obstruct", "7/3", "--format", "json", "--oracle")[1]
    assert a == b


def test_twist(capsys):
    code, out, _ = run(capsys, "twist", "21", "55", "--format", "json")
    rec = json.loads(out)
    assert code == 0 and rec["independent"] is True
    assert run(capsys, "twist", "4")[0] == 1


def test_cache_written_and_reused(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("CONCORDANCE_CACHE", raising=False)
    first = run(capsys, "obstruct", "7/3", "--format", "json", "--cache", str(tmp_path))[1]
    path = tmp_path / "7_3.json"
    assert path.exists()
    assert run(capsys, "obstruct", "7/3", "--format", "json", "--cache", str(tmp_path))[1] == first
    # a corrupted d-table fails revalidation and is recomputed
    rec = json.loads(path.read_text())
    rec["d"]["0"] = "5/1"
    path.write_text(json.dumps(rec))
    assert run(capsys, "obstruct", "7/3", "--format", "json", "--cache", str(tmp_path))[1] == first
    assert json.loads(path.read_text())["d"]["0"] != "5/1"


def test_cache_env_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("CONCORDANCE_CACHE", str(tmp_path / "env"))
    assert cache_dir(str(tmp_path / "flag")) == tmp_path / "env"
    monkeypatch.delenv("CONCORDANCE_CACHE")
    assert cache_dir(str(tmp_path / "flag")) == tmp_path / "flag"
    assert cache_dir(None) is None


def test_batch_quarantines_bad_rows(tmp_path, capsys):
    src = tmp_path / "in.csv"
    src.write_text("name,p,q\nfig8,5,2\nbad,4,1\nworse,x,1\nstevedore,9,2\n")
    out = tmp_path / "out.csv"
    assert main(["batch", str(src), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("name,p,q,det,verdict,tests_fired")
    assert [l.split(",")[0] for l in lines[1:]] == ["fig8", "bad", "worse", "stevedore"]
    assert ",error," in lines[2] and ",error," in lines[3]
    assert "inconclusive" in lines[1] and "inconclusive" in lines[4]


def test_batch_bad_header(tmp_path, capsys):
    src = tmp_path / "in.csv"
    src.write_text("p,q\n5,2\n")
    assert main(["batch", str(src)]) == 1
    assert main(["batch", str(tmp_path / "missing.csv")]) == 1


def test_batch_jobs_deterministic(tmp_path, capsys):
    src = tmp_path / "in.csv"
    src.write_text("name,p,q\na,5,2\nb,7,3\nc,9,2\nd,11,4\n")
    outs = []
    for jobs in ("1", "3"):
        path = tmp_path / f"out{jobs}.json"
        assert main(["batch", str(src), "-o", str(path), "--jobs", jobs, "--format", "json"]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "twobridge", "d", "3/1", "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("label,d")


def test_run_knot_report():
    report, text = run_knot(parse_knot("5/2"), "obstruct", "json")
    assert json.loads(text) == report_to_dict(report)
