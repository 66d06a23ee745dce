import json
import os

import pytest

from conftest import GOLDEN_QUERY
from detective import build_parser, main


def test_run_command_answers_golden_question(golden_bundle, tmp_path, capsys):
    out = str(tmp_path / "run")
    code = main(["run", "--bundle", golden_bundle, "--query", GOLDEN_QUERY,
                 "--options", "potato, red onion, carrot, lemon", "--mock", "--out", out])
    assert code == 0
    assert "Answer: B" in capsys.readouterr().out
    assert os.path.isfile(os.path.join(out, "answer.json"))


def test_missing_bundle_exits_with_input_error(tmp_path, capsys):
    out = str(tmp_path / "err")
    code = main(["run", "--bundle", str(tmp_path / "nowhere"), "--query", "q", "--mock", "--out", out])
    assert code == 2
    assert "BundleNotFound" in capsys.readouterr().err
    with open(os.path.join(out, "error.json"), encoding='utf-8') as f:
        record = json.load(f)
    assert record['error_type'] == "BundleNotFound"
    assert record['context']['command'] == "run"


def test_bad_override_exits_with_input_error(golden_bundle):
    assert main(["graph", "--bundle", golden_bundle, "--set", "graph.top_k=0"]) == 2


def test_unreachable_provider_exits_with_provider_error(golden_bundle):
    assert main(["run", "--bundle", golden_bundle, "--query", GOLDEN_QUERY]) == 3


def test_graph_command(golden_bundle, tmp_path, capsys):
    assert main(["graph", "--bundle", golden_bundle, "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("6 segments")


def test_bench_command_writes_metrics(tmp_path, capsys):
    code = main(["bench", "--seeds", "2", "--k", "30", "--clue-count", "2", "--decoys", "1",
                 "--variants", "full,uniform", "--workers", "1", "--out", str(tmp_path)])
    assert code == 0
    assert os.path.isfile(os.path.join(tmp_path, "metrics.csv"))
    assert "full" in capsys.readouterr().out


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_build_idf_command_writes_table(tmp_path, capsys):
    docs = tmp_path / "docs"
    docs.mkdir()
    for i, text in enumerate(["chef knife", "chef board", "chef knife board"]):
        (docs / f"{i}.txt").write_text(text, encoding="utf-8")
    table = str(tmp_path / "idf.tsv")
    assert main(["build-idf", "--docs", str(docs), "--table", table, "--min-df", "2"]) == 0
    assert capsys.readouterr().out.startswith("3 idf weights")
    assert os.path.isfile(table)


def test_build_idf_command_rejects_missing_docs(tmp_path):
    assert main(["build-idf", "--docs", str(tmp_path / "none"), "--table", str(tmp_path / "t.tsv")]) == 2
