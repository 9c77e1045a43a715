import json
import subprocess
import sys
from pathlib import Path

from odsim.cli import main
from odsim.report import canonical_bytes

from conftest import DESIGNS, corpus_path


def run_cli(*argv):
    return main(list(argv))


def load(path: Path) -> dict:
    return json.loads(path.read_text())


def test_run_with_oracle_check_passes(tmp_path):
    report_path = tmp_path / "r.json"
    code = run_cli("run", str(corpus_path("stream_pair")), "--oracle-check",
                   "--report", str(report_path))
    assert code == 0
    report = load(report_path)
    assert report["total_cycles"] == 5
    assert report["status"] == "ok"
    assert report["oracle_check"]["verdict"] == "match"


def test_deadlock_exit_code_and_blocked_set(tmp_path):
    report_path = tmp_path / "r.json"
    code = run_cli("run", str(corpus_path("mutual_read_deadlock")),
                   "--report", str(report_path))
    assert code == 2
    report = load(report_path)
    assert report["status"] == "deadlock"
    assert report["blocked"] == ["north", "south"]


def test_depth_override_and_class_in_report(tmp_path):
    report_path = tmp_path / "r.json"
    code = run_cli("run", str(corpus_path("sentinel_stream")),
                   "--depth", "data=1", "--report", str(report_path))
    assert code == 0
    report = load(report_path)
    assert report["class"] == "TypeB"
    assert report["depths"]["data"] == 1


def test_report_round_trips_canonically(tmp_path):
    report_path = tmp_path / "r.json"
    run_cli("run", str(corpus_path("pipeline_pair")), "--report", str(report_path))
    report = load(report_path)
    body = json.loads(canonical_bytes(report))
    assert canonical_bytes(body) == canonical_bytes(report)


def test_jitter_seeds_do_not_change_the_report(tmp_path):
    blobs = set()
    for seed in (0, 1, 7, 99):
        report_path = tmp_path / f"r{seed}.json"
        code = run_cli("run", str(corpus_path("congestion_router")),
                       "--jitter", str(seed), "--report", str(report_path))
        assert code == 0
        blobs.add(canonical_bytes(load(report_path)))
    assert len(blobs) == 1


def test_parse_error_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.od"
    bad.write_text("design x { fifo f depth ; }")
    assert run_cli("run", str(bad)) == 1
    assert "error" in capsys.readouterr().err


def test_oracle_subcommand_same_schema(tmp_path):
    engine_report = tmp_path / "e.json"
    oracle_report = tmp_path / "o.json"
    run_cli("run", str(corpus_path("pipeline_pair")), "--report", str(engine_report))
    code = run_cli("oracle", str(corpus_path("pipeline_pair")),
                   "--report", str(oracle_report))
    assert code == 0
    engine, oracle = load(engine_report), load(oracle_report)
    assert engine["schema"] == oracle["schema"]
    assert set(engine) == set(oracle)
    assert oracle["generator"] == "oracle"
    assert oracle["total_cycles"] == engine["total_cycles"]
    assert oracle["outputs"] == engine["outputs"]


def test_incremental_command_paths(tmp_path, capsys):
    artifacts = tmp_path / "artifacts"
    code = run_cli("run", str(corpus_path("congestion_router")),
                   "--artifacts", str(artifacts),
                   "--report", str(tmp_path / "full.json"))
    assert code == 0
    capsys.readouterr()

    code = run_cli("incremental", "--artifacts", str(artifacts),
                   "--report", str(tmp_path / "same.json"))
    assert code == 0
    assert "reused, unchanged" in capsys.readouterr().out

    code = run_cli("incremental", "--artifacts", str(artifacts),
                   "--depth", "q2=100", "--report", str(tmp_path / "ok.json"))
    assert code == 0
    assert "reused" in capsys.readouterr().out
    reused = load(tmp_path / "ok.json")
    full = load(tmp_path / "full.json")
    assert reused["outputs"] == full["outputs"]

    code = run_cli("incremental", "--artifacts", str(artifacts),
                   "--depth", "q1=100", "--report", str(tmp_path / "resim.json"))
    assert code == 0
    assert "resimulated" in capsys.readouterr().out
    resim = load(tmp_path / "resim.json")
    assert resim["status"] == "ok"


def test_incremental_missing_artifacts(tmp_path, capsys):
    assert run_cli("incremental", "--artifacts", str(tmp_path / "nope")) == 1
    assert "artifacts" in capsys.readouterr().err


def test_bench_corpus_all_match(tmp_path, capsys):
    report_path = tmp_path / "bench.json"
    code = run_cli("bench", str(DESIGNS), "--report", str(report_path))
    out = capsys.readouterr().out
    assert code == 0
    rows = load(report_path)["rows"]
    assert len(rows) == len(list(DESIGNS.glob("*.od")))
    assert all(r["oracle"] == "match" for r in rows)
    deadlock_rows = [r for r in rows if r["note"] == "expected-deadlock"]
    assert [r["design"] for r in deadlock_rows] == ["mutual_read_deadlock"]
    assert "mutual_read_deadlock" in out


def test_bench_empty_directory(tmp_path, capsys):
    assert run_cli("bench", str(tmp_path)) == 0
    capsys.readouterr()


def test_usage_error_exits_one():
    assert run_cli("run") == 1


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "odsim", "run", str(corpus_path("stream_pair"))],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["total_cycles"] == 5
