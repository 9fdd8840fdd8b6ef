import json
import subprocess
import sys

import pytest

from harvest.cli import main
from harvest.pipeline import CORPUS, MANIFEST, STATE, Interrupted, run


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "harvest" in capsys.readouterr().out


def test_funnel_subcommand(capsys):
    assert main(["funnel", "687e9", "29e9", "8.6e9", "4.9e9"]) == 0
    out = capsys.readouterr().out
    for pct in ("100%", "4.2%", "1.3%", "0.71%"):
        assert pct in out
    assert main(["funnel", "1000", "500", "--format", "json"]) == 0
    stages = json.loads(capsys.readouterr().out)["stages"]
    assert [s["percent"] for s in stages] == ["100", "50"]
    assert main(["funnel", "0"]) == 1


def test_stats_subcommand(tmp_path, capsys):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    a.write_text(json.dumps({"text": "x y y"}) + "\n", encoding="utf-8")
    b.write_text(json.dumps({"text": "y z"}) + "\n", encoding="utf-8")
    assert main(["stats", str(a), str(b), "--min-count", "1", "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert (report["shared"], report["only_a"], report["only_b"]) == (1, 1, 1)
    assert main(["stats", str(a), str(b)]) == 0
    assert "count >= 5" in capsys.readouterr().out
    assert main(["stats", str(a), str(b), "--min-count", "0"]) == 1


def run_args(server, minicrawl, out, *extra):
    return ["run", "--crawl", minicrawl.crawl, "--index-url", server.url, "--data-url",
            server.url, "-o", str(out), *extra]


def test_run_and_resume(server, minicrawl, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(run_args(server, minicrawl, out)) == 0
    assert "Filtering step" in capsys.readouterr().out
    assert len((out / CORPUS).read_text().splitlines()) == 3
    assert main(["resume", "--manifest", str(out / MANIFEST)]) == 0
    assert main(["resume", "--manifest", str(out / MANIFEST), "-j", "2"]) == 0


def test_run_with_config_file(server, minicrawl, tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(f"[crawl]\ncrawls = {minicrawl.crawl}\nindex_url = {server.url}\n"
                   f"data_url = {server.url}\n[run]\noutput_dir = out\nparallelism = 2\n",
                   encoding="utf-8")
    assert main(["run", "--config", str(ini)]) == 0
    assert (tmp_path / "out" / CORPUS).exists()
    # a flag that changes the result is refused for an existing run
    assert main(["run", "--config", str(ini), "--threshold", "0.3"]) == 1


def test_config_errors_exit_1(tmp_path):
    assert main(["run", "-o", str(tmp_path / "o")]) == 1  # no crawls
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 1
    assert main(["resume", "--manifest", str(tmp_path / "none.jsonl")]) == 1


def test_state_corruption_exit_2(make_config, tmp_path):
    config = make_config(checkpoint_every=3)

    def hook(point, seq):
        if point == "entry" and seq == 5:
            raise Interrupted("stop")

    with pytest.raises(Interrupted):
        run(config, hook)
    (config.out / STATE).write_bytes(b"DDUP garbage")
    assert main(["resume", "--manifest", str(config.out / MANIFEST)]) == 2
    bad = tmp_path / "bad.state"
    bad.write_bytes(b"nope")
    docs = tmp_path / "docs.jsonl"
    docs.write_text("", encoding="utf-8")
    assert main(["dedup", str(docs), "--state", str(bad)]) == 2


def test_partial_failure_exit_3(server, minicrawl, tmp_path):
    for name in minicrawl.files:
        server.faults.fail_paths["/" + name] = 10 ** 6
    argv = run_args(server, minicrawl, tmp_path / "out")
    # transport flags do not cover retries, so use a config with one attempt
    ini = tmp_path / "fast.ini"
    ini.write_text("[run]\nretry_attempts = 1\nretry_base = 0.001\n", encoding="utf-8")
    assert main(argv + ["--config", str(ini)]) == 3


def test_stage_subcommands_reproduce_run(server, minicrawl, tmp_path, monkeypatch):
    monkeypatch.setenv("HARVEST_INDEX_URL", server.url)
    monkeypatch.setenv("HARVEST_DATA_URL", server.url)
    d = tmp_path
    assert main(["index", "--crawl", minicrawl.crawl, "-o", str(d / "entries.jsonl")]) == 0
    assert len((d / "entries.jsonl").read_text().splitlines()) == 12
    assert main(["fetch", str(d / "entries.jsonl"), "-o", str(d / "records.jsonl")]) == 0
    assert main(["extract", str(d / "records.jsonl"), "-o", str(d / "docs.jsonl")]) == 0
    assert main(["filter", str(d / "docs.jsonl"), "-o", str(d / "is.jsonl")]) == 0
    assert main(["dedup", str(d / "is.jsonl"), "--state", str(d / "s.state"),
                 "-o", str(d / "corpus.jsonl")]) == 0
    assert main(run_args(server, minicrawl, d / "full")) == 0
    assert (d / "corpus.jsonl").read_bytes() == (d / "full" / CORPUS).read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "harvest", "funnel", "10", "5"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "50%" in proc.stdout
