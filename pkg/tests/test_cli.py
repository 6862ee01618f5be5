import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from conftest import BENCH, needs_z3
from sre_falsify import report
from sre_falsify.cli import RunConfig, build_parser
from sre_falsify.engine import FalsifyResult, Stats, Verdict


def cli(*args, timeout=300):
    proc = subprocess.run([sys.executable, "-m", "sre_falsify.cli", *map(str, args)],
                          capture_output=True, text=True, timeout=timeout)
    return proc.returncode, proc.stdout, proc.stderr


@needs_z3
def test_falsified_run_exits_zero_with_json():
    code, out, _ = cli("falsify", BENCH / "ordered_put_bug.hat", "--json")
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"verdict", "method", "engine", "kind", "context_length", "trace", "model",
                        "stats", "note"}
    assert doc["verdict"] == "Falsified" and doc["engine"] == "deriv"
    assert doc["trace"] and set(doc["trace"][0]) == {"fname", "args", "ret", "qualifier"}
    assert set(doc["stats"]) == {"states", "solver_calls", "wall_ms", "solver_ms"}
    assert doc["model"] and all(isinstance(v, (int, bool)) for v in doc["model"].values())


@needs_z3
def test_exit_codes():
    assert cli("falsify", BENCH / "ordered_put_fixed.hat")[0] == 1
    assert cli("falsify", BENCH / "ordered_put_fixed.hat", "--engine", "naive")[0] == 1
    assert cli("falsify", BENCH / "linkedlist_remove_bug.hat", "--max-steps", "1")[0] == 2
    assert cli("falsify", BENCH / "ordered_put_bug.hat", "--max-ctx", "-1")[0] == 3
    assert cli("falsify", BENCH / "ordered_put_bug.hat", "--engine", "smt")[0] == 3
    assert cli("falsify", BENCH / "ordered_put_bug.hat", "a", "--method", "b")[0] == 3
    assert cli("falsify", BENCH / "no_such_file.hat")[0] == 4
    assert cli("falsify", BENCH / "ordered_put_bug.hat", "--solver-cmd", "no-such-solver")[0] == 5


@needs_z3
def test_input_errors_name_the_file(tmp_path):
    bad = tmp_path / "broken.hat"
    bad.write_text("effect put : (k: Key) -> unit\n")
    code, _, err = cli("falsify", bad)
    assert code == 4 and "broken.hat" in err


@needs_z3
def test_unknown_method_is_an_input_error():
    assert cli("falsify", BENCH / "ordered_put_bug.hat", "nope")[0] == 4


@needs_z3
def test_bench_writes_all_outputs(tmp_path):
    src = tmp_path / "suite"
    src.mkdir()
    for v in ("bug", "fixed"):
        shutil.copy(BENCH / f"ordered_put_{v}.hat", src)
    out = tmp_path / "out"
    code, stdout, _ = cli("bench", src, "--out", out, "--timeout", "30")
    assert code == 0, stdout
    rows = list(csv.DictReader(io.StringIO((out / "bench.csv").read_text())))
    assert len(rows) == 4
    assert all(r["expected"] == "True" for r in rows)
    assert "| ordered_put |" in (out / "bench.md").read_text()
    assert (out / "bench.png").read_bytes()[:4] == b"\x89PNG"


def test_bench_rejects_an_empty_directory(tmp_path):
    assert cli("bench", tmp_path)[0] == 4
    assert cli("bench", tmp_path / "missing")[0] == 4


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(engine="smt")
    with pytest.raises(ValueError):
        RunConfig(max_events=-2)
    with pytest.raises(ValueError):
        RunConfig(timeout=0)
    b = RunConfig(max_ctx=1).bounds({"max_ctx": 3, "max_events": 5})
    assert b.max_ctx == 1 and b.max_events == 5


def test_parser_shapes():
    args = build_parser().parse_args(["falsify", "f.hat", "m", "--engine", "naive", "--json"])
    assert (args.file, args.method, args.engine, args.json) == ("f.hat", "m", "naive", True)
    args = build_parser().parse_args(["bench", "d"])
    assert args.engine == "both" and args.mem_mb == 2048


# ---------------------------------------------------------------------------
# Reports


def rows():
    R = report.BenchRow
    return [
        R("toy", "bug", "deriv", "Falsified", 0.5, expected=True, replay="ok"),
        R("toy", "bug", "naive", report.TIMEOUT, 60.0),
        R("toy", "fixed", "deriv", "NotFalsifiedAtBound", 0.25, expected=True),
        R("toy", "fixed", "naive", "NotFalsifiedAtBound", 2.0, expected=True),
    ]


def test_csv_has_one_line_per_run():
    text = report.rows_to_csv(rows())
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert len(parsed) == 4 and parsed[0]["wall_s"] == "0.5000"


def test_markdown_summarises_pairs():
    md = report.rows_to_markdown(rows())
    line = next(l for l in md.splitlines() if l.startswith("| toy"))
    assert "F 0.50s" in line and "T/O" in line and "NF 0.25s" in line
    assert "Unexpected verdicts: toy/bug/naive" in md


def test_plot_is_written(tmp_path):
    path = tmp_path / "chart.png"
    report.plot_timings(rows(), str(path), cap=60)
    assert path.stat().st_size > 0


def test_expected_verdicts():
    assert report.expected_verdict("bug") == "Falsified"
    assert report.expected_verdict("fixed") == "NotFalsifiedAtBound"


def test_json_for_a_run_without_witness():
    r = FalsifyResult(Verdict.NOT_FALSIFIED, "deriv", "m", stats=Stats())
    doc = json.loads(report.dumps(r))
    assert doc["verdict"] == "NotFalsifiedAtBound" and doc["trace"] == []
    assert doc["context_length"] is None
    assert "NotFalsifiedAtBound" in report.format_result(r)
