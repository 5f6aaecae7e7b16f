import json

import pytest

from nobelgraph.cli import main
from nobelgraph.store import snapshot_read


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def store(tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    path = tmp_path / "g.ng"
    assert run(capsys, "synth", "--seed", 1, "--persons", 80, "--countries", 8, "--fields", 5,
               "--out", corpus)[0] == 0
    assert run(capsys, "ingest", "--store", path, "--input", corpus, "--source", "original")[0] == 0
    return path


def test_no_command_and_unknown_command(capsys):
    code, _, err = run(capsys)
    assert code == 1 and "usage" in err
    code, _, err = run(capsys, "frobnicate")
    assert code == 1 and "usage" in err


def test_bad_flag_is_user_error(capsys, store):
    code, _, err = run(capsys, "analyze", "--store", store, "--seed", "x")
    assert code == 1 and "usage" in err


def test_missing_store(capsys, tmp_path):
    code, _, err = run(capsys, "stats", "--store", tmp_path / "nope.ng")
    assert code == 1 and "not found" in err


def test_stats_table_and_jsonl(capsys, store):
    code, out, _ = run(capsys, "stats", "--store", store)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split()[:4] == ["Metric", "Original", "Added", "Final"]
    assert lines[2].startswith("Nodes") and lines[3].startswith("Edges")
    code, out, _ = run(capsys, "stats", "--store", store, "--format", "jsonl")
    rows = [json.loads(s) for s in out.splitlines()]
    g = snapshot_read(store)
    assert [r["final"] for r in rows] == [g.node_count, g.edge_count]


def test_strict_ingest_cites_first_violation(capsys, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text(
        json.dumps({"entities": [["Ada", "Person"], ["Mars", "Planet"]], "relations": []}) + "\n"
        + "{not json\n",
        encoding="utf-8",
    )
    path = tmp_path / "g.ng"
    code, _, err = run(capsys, "ingest", "--store", path, "--input", bad, "--strict")
    assert code == 1 and "line 1" in err
    assert not path.exists()
    code, out, _ = run(capsys, "ingest", "--store", path, "--input", bad, "--format", "jsonl")
    assert code == 0
    assert json.loads(out)["records_rejected"] == 2


def test_ingest_is_idempotent_through_cli(capsys, store, tmp_path):
    before = store.read_bytes()
    corpus = tmp_path / "corpus.jsonl"
    assert run(capsys, "ingest", "--store", store, "--input", corpus)[0] == 0
    assert store.read_bytes() == before


def test_read_only_commands_leave_store_alone(capsys, store, tmp_path):
    before = store.read_bytes()
    run(capsys, "stats", "--store", store)
    run(capsys, "project", "--store", store, "--out", tmp_path / "edges.tsv")
    run(capsys, "analyze", "--store", store, "--seed", 1)
    run(capsys, "communities", "--store", store, "--seed", 1)
    run(capsys, "query", "--store", store, "MATCH (p:Person) RETURN count(*)")
    assert store.read_bytes() == before


def test_project(capsys, store, tmp_path):
    out_path = tmp_path / "edges.tsv"
    code, out, _ = run(capsys, "project", "--store", store, "--out", out_path, "--attributes", "field,country")
    assert code == 0
    summary = json.loads(out)
    assert summary["attributes"] == ["field", "country"]
    lines = out_path.read_text().splitlines()
    assert len(lines) == summary["edges"]
    assert all(int(line.split("\t")[2]) in (1, 2) for line in lines)
    code, _, err = run(capsys, "project", "--store", store, "--attributes", "shoe_size")
    assert code == 1 and "--attributes" in err


def test_analyze_seed_notice_and_report(capsys, store, tmp_path):
    code, out, err = run(capsys, "analyze", "--store", store, "--report", tmp_path / "rep")
    assert code == 0 and "seed 0" in err
    assert (tmp_path / "rep" / "analysis.txt").read_text() == out
    records = [json.loads(s) for s in (tmp_path / "rep" / "analysis.jsonl").read_text().splitlines()]
    assert records[0]["kind"] == "small_world" and records[0]["seed"] == 0
    assert {r["kind"] for r in records[1:]} == {"centrality"}


@pytest.mark.parametrize("argv", [
    ["analyze", "--seed", 42, "--format", "jsonl"],
    ["communities", "--seed", 42, "--format", "jsonl"],
    ["query", "MATCH (p:Person)-[:IS_CITIZEN_OF]->(c:Country) RETURN c.name, count(*) ORDER BY c.name",
     "--format", "jsonl"],
])
def test_outputs_deterministic(capsys, store, argv):
    first = run(capsys, argv[0], "--store", store, *argv[1:])
    second = run(capsys, argv[0], "--store", store, *argv[1:])
    assert first[0] == 0 and first[1] == second[1] and first[1]


def test_communities_jsonl_contract(capsys, store, tmp_path):
    out_path = tmp_path / "c.jsonl"
    code, out, _ = run(capsys, "communities", "--store", store, "--seed", 3, "--out", out_path)
    assert code == 0 and out.startswith("seed 3\n")
    records = [json.loads(s) for s in out_path.read_text().splitlines()]
    head = records[0]
    assert head["kind"] == "partition" and head["seed"] == 3
    members = [r for r in records if r["kind"] == "member"]
    assert len(members) == head["vertices"]
    assert len({r["community"] for r in members}) == head["communities"]


def test_query_errors_and_explain(capsys, store):
    code, _, err = run(capsys, "query", "--store", store, "MATCH (p:Person) RETURN")
    assert code == 1 and "error" in err
    code, _, err = run(capsys, "query", "--store", store, "MATCH (p:Planet) RETURN p")
    assert code == 1
    code, _, err = run(capsys, "query", "--store", store)
    assert code == 1
    code, out, _ = run(capsys, "query", "--store", store, "--explain",
                       "MATCH (p:Person)-[:IS_CITIZEN_OF]->(c:Country) RETURN c.name")
    assert code == 0 and "seed" in out


def test_generate_and_eval(capsys, store, tmp_path):
    mcq, ft = tmp_path / "mcq.jsonl", tmp_path / "ft.jsonl"
    code, out, _ = run(capsys, "generate", "--store", store, "--seed", 5, "--mcq", mcq,
                       "--counts", "1:5,2:5,3:3,4:3", "--finetune", ft, "--pairs", 50)
    assert code == 0
    mcq_summary, ft_summary = (json.loads(s) for s in out.splitlines())
    assert mcq_summary["seed"] == 5 and mcq_summary["items"] + mcq_summary["skipped"] == 16
    assert ft_summary["pairs"] == 50
    assert all(json.loads(s)["seed"] == 5 for s in ft.read_text().splitlines())
    assert all(json.loads(s)["seed"] == 5 for s in mcq.read_text().splitlines())

    report = tmp_path / "report.jsonl"
    code, out, _ = run(capsys, "eval", "--store", store, "--dataset", mcq, "--translator", "oracle",
                       "--out", report)
    assert code == 0 and "Accuracy (%)" in out and "100.00" in out
    summary = json.loads(report.read_text().splitlines()[0])
    assert summary["accuracy"] == 100.0
    code, out, _ = run(capsys, "eval", "--store", store, "--dataset", mcq, "--translator", "abstain",
                       "--format", "jsonl")
    assert json.loads(out)["accuracy"] == 0.0


def test_generate_argument_errors(capsys, store, tmp_path):
    assert run(capsys, "generate", "--store", store, "--seed", 1)[0] == 1
    assert run(capsys, "generate", "--store", store, "--mcq", tmp_path / "m", "--counts", "5:1")[0] == 1
    assert run(capsys, "generate", "--store", store, "--finetune", tmp_path / "f", "--mix", "1-2:0.5")[0] == 1
    assert run(capsys, "generate", "--store", store, "--finetune", tmp_path / "f", "--mix", "junk")[0] == 1


def test_eval_errors(capsys, store, tmp_path):
    code, _, err = run(capsys, "eval", "--store", store, "--dataset", tmp_path / "none.jsonl")
    assert code == 1 and "dataset" in err
    (tmp_path / "d.jsonl").write_text("")
    code, _, err = run(capsys, "eval", "--store", store, "--dataset", tmp_path / "d.jsonl",
                       "--translator", "external", "--endpoint-env", "NOBELGRAPH_UNSET_VAR")
    assert code == 1 and "NOBELGRAPH_UNSET_VAR" in err


def test_chat(capsys, store, monkeypatch):
    import io
    g = snapshot_read(store)
    person = next(iter(g.nodes("Person"))).name
    monkeypatch.setattr("sys.stdin", io.StringIO(f"Which country is {person} a citizen of?\n:quit\n"))
    code, out, _ = run(capsys, "chat", "--store", store)
    assert code == 0 and "answer:" in out


def test_internal_error_exit_code(capsys, store, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("bug")

    monkeypatch.setattr("nobelgraph.cli.stats", boom)
    code, _, err = run(capsys, "stats", "--store", store)
    assert code == 2 and "RuntimeError" in err
