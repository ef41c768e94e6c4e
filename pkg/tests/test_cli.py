import json

import pytest

from bgsum import jsonl
from bgsum.cli import main
from tests.conftest import build_synthetic_corpus


@pytest.fixture
def workspace(tmp_path):
    build_synthetic_corpus(tmp_path / "corpus")
    return tmp_path


def run_cli(*argv):
    return main([str(a) for a in argv])


def write_sources(tmp_path):
    a = tmp_path / "wire.jsonl"
    b = tmp_path / "paper.jsonl"
    a.write_text(
        '{"date": "2011-01-01", "text": "Protests begin in the capital."}\n'
        '{"date": "2011-01-03", "text": "The cabinet resigns."}\n',
        encoding="utf-8",
    )
    b.write_text(
        '{"date": "2011-01-03", "text": "The cabinet resigns."}\n'
        '{"date": "2011-01-05", "text": "Curfew declared."}\n',
        encoding="utf-8",
    )
    return a, b


# --- merge -----------------------------------------------------------------

def test_merge_builds_corpus(tmp_path, capsys):
    a, b = write_sources(tmp_path)
    code = run_cli(
        "merge", a, b, "--event", "egyptian-crisis", "--workspace", tmp_path
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "3 timesteps" in out
    manifest = json.loads((tmp_path / "corpus" / "manifest.json").read_text())
    assert manifest["events"][0]["event_id"] == "egyptian-crisis"
    assert manifest["events"][0]["split"] == "test"
    steps = jsonl.load_records(tmp_path / "corpus" / "timelines.jsonl")
    assert [s["t"] for s in steps] == [1, 2, 3]
    # duplicate text on the shared date collapsed
    assert len(steps[1]["raw_source_updates"]) == 1


def test_merge_unknown_event_needs_split(tmp_path, capsys):
    a, b = write_sources(tmp_path)
    code = run_cli("merge", a, b, "--event", "mystery-event", "--workspace", tmp_path)
    assert code == 2
    assert "--split" in capsys.readouterr().err
    code = run_cli(
        "merge", a, b, "--event", "mystery-event", "--split", "dev", "--workspace", tmp_path
    )
    assert code == 0


def test_merge_bad_date_names_file_and_line(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"date": "01/05/2011", "text": "x"}\n', encoding="utf-8")
    code = run_cli("merge", bad, "--event", "iraq-war", "--workspace", tmp_path)
    assert code == 2
    assert "bad.jsonl:1" in capsys.readouterr().err


# --- stats / iaa --------------------------------------------------------------

def test_stats_grid_and_records(workspace, capsys):
    code = run_cli("stats", "--workspace", workspace)
    assert code == 0
    out = capsys.readouterr().out
    assert "alpha-event" in out
    records = jsonl.load_records(workspace / "scores" / "stats.jsonl")
    assert len(records) == 3
    assert all(r["timesteps"] == 5 for r in records)


def test_iaa_grid_and_records(workspace, capsys):
    code = run_cli("iaa", "--workspace", workspace)
    assert code == 0
    out = capsys.readouterr().out
    assert "backgrounds" in out
    records = jsonl.load_records(workspace / "scores" / "iaa.jsonl")
    # 2 sections x 3 annotators x 3 variants
    assert len(records) == 18
    assert all(0.0 <= r["mean_f1"] <= 1.0 for r in records)


# --- summarize / rouge ----------------------------------------------------------

def summarize(workspace, *extra):
    return run_cli(
        "summarize", "--workspace", workspace, "--profile", "mock", *extra
    )


def test_summarize_writes_runs_and_resumes(workspace, capsys):
    assert summarize(workspace) == 0
    runs = sorted((workspace / "runs").glob("*.jsonl"))
    assert len(runs) == 3
    first = {p.name: p.read_bytes() for p in runs}
    out = capsys.readouterr().out
    assert "4 backgrounds" in out

    assert summarize(workspace) == 0
    out = capsys.readouterr().out
    assert "(4 resumed" in out
    second = {p.name: p.read_bytes() for p in sorted((workspace / "runs").glob("*.jsonl"))}
    assert first == second


def test_summarize_unknown_profile_exits_2(workspace, capsys):
    code = run_cli("summarize", "--workspace", workspace, "--profile", "ghost")
    assert code == 2


def test_summarize_query_focused_modes(workspace):
    code = run_cli(
        "summarize", "--workspace", workspace, "--profile", "mock",
        "--mode", "query_focused", "--query-form", "named_entities",
    )
    assert code == 0
    runs = list((workspace / "runs").glob("*query_focused__named_entities*.jsonl"))
    assert len(runs) == 3
    record = jsonl.load_records(runs[0])[0]
    assert record["mode"] == "query_focused"
    assert record["query_form"] == "named_entities"


def test_rouge_scores_runs(workspace, capsys):
    summarize(workspace)
    code = run_cli("rouge", "--workspace", workspace)
    assert code == 0
    records = jsonl.load_records(workspace / "scores" / "rouge.jsonl")
    # one system x one split x three variants
    assert len(records) == 3
    assert {r["variant"] for r in records} == {"rouge1", "rouge2", "rougeLsum"}
    assert all(r["items"] == 12 for r in records)
    assert all(0.0 <= r["f1"] <= 1.0 for r in records)


# --- bus --------------------------------------------------------------------------

def test_bus_end_to_end_mock(workspace, capsys):
    summarize(workspace)
    code = run_cli("bus", "--workspace", workspace, "--profile", "mock")
    assert code == 0
    out = capsys.readouterr().out
    assert "BUS" in out
    assert "rule file sha256" in out
    questions = jsonl.load_records(workspace / "logs" / "bus_questions.jsonl")
    assert len(questions) == 12  # 3 events x 4 items
    assert all(len(q["questions"]) == 5 for q in questions)
    answers = jsonl.load_records(workspace / "logs" / "bus_answers.jsonl")
    assert len(answers) == 24  # items x (mock system + human)
    scores = jsonl.load_records(workspace / "scores" / "bus_mock.jsonl")
    corpus_rows = [s for s in scores if s["scope"] == "corpus"]
    assert {s["system_id"] for s in corpus_rows} == {"human", "mock"}
    designations = jsonl.load_records(
        workspace / "scores" / "bus_designations_mock.jsonl"
    )
    assert len(designations) == 12
    assert all(d["best"] and d["worst"] for d in designations)


def test_bus_is_idempotent(workspace):
    summarize(workspace)
    run_cli("bus", "--workspace", workspace, "--profile", "mock")
    first = (workspace / "logs" / "bus_answers.jsonl").read_bytes()
    run_cli("bus", "--workspace", workspace, "--profile", "mock")
    assert (workspace / "logs" / "bus_answers.jsonl").read_bytes() == first


def test_bus_sampling_flag(workspace):
    summarize(workspace)
    code = run_cli("bus", "--workspace", workspace, "--profile", "mock", "--n", "5")
    assert code == 0
    questions = jsonl.load_records(workspace / "logs" / "bus_questions.jsonl")
    assert len(questions) == 5


# --- bws / compare -----------------------------------------------------------------

def write_judgments(path, items=6):
    records = []
    for i in range(items):
        for j in range(3):
            records.append(
                {
                    "item_id": f"alpha-event:{i + 2}",
                    "judge_id": f"j{j}",
                    "display_order": ["human", "mock", "other"],
                    "best": "human" if j < 2 else "mock",
                    "worst": "mock" if j < 2 else "other",
                    "justification": "context",
                    "elapsed_ms": 40_000,
                    "task_type": "bws_judgment",
                }
            )
    jsonl.write_records(path, records)


def test_bws_command_outputs_tables(workspace, capsys):
    log = workspace / "logs" / "judgments.jsonl"
    write_judgments(log, items=4)
    code = run_cli("bws", "--workspace", workspace)
    assert code == 0
    out = capsys.readouterr().out
    assert "per_majority" in out
    records = jsonl.load_records(workspace / "scores" / "bws.jsonl")
    bws_rows = [r for r in records if "bws" in r]
    human = next(r for r in bws_rows if r["system_id"] == "human")
    assert human["bws"] == 1.0
    assert human["mode"] == "per_majority"


def test_bws_per_vote_mode(workspace):
    log = workspace / "logs" / "judgments.jsonl"
    write_judgments(log, items=3)
    code = run_cli("bws", "--workspace", workspace, "--bws-mode", "per_vote")
    assert code == 0
    records = jsonl.load_records(workspace / "scores" / "bws.jsonl")
    bws_rows = [r for r in records if "bws" in r]
    assert sum(r["bws"] for r in bws_rows) == pytest.approx(0.0, abs=1e-12)


def test_compare_three_way(workspace, capsys):
    summarize(workspace)
    run_cli("bus", "--workspace", workspace, "--profile", "mock")
    write_judgments(workspace / "logs" / "judgments.jsonl", items=4)
    code = run_cli(
        "compare",
        "--workspace",
        workspace,
        "--bus-answers",
        workspace / "logs" / "bus_answers.jsonl",
    )
    assert code == 0
    records = jsonl.load_records(workspace / "scores" / "compare.jsonl")
    methods = {r["method"] for r in records}
    assert methods == {"bws", "bus:mock"}
    out = capsys.readouterr().out
    assert "bus:mock" in out


# --- report -----------------------------------------------------------------------

def test_report_bundles_available_sections(workspace, capsys):
    summarize(workspace)
    run_cli("rouge", "--workspace", workspace)
    run_cli("bus", "--workspace", workspace, "--profile", "mock")
    code = run_cli("report", "--workspace", workspace)
    assert code == 0
    report = json.loads((workspace / "report" / "report.json").read_text())
    assert "stats" in report and "rouge" in report and "bus" in report
    assert len(report["stats"]) == 3


def test_report_without_corpus_is_config_error(tmp_path, capsys):
    code = run_cli("report", "--workspace", tmp_path)
    assert code == 2


# --- config file --------------------------------------------------------------------

def test_config_file_seed_and_profiles(workspace):
    config_path = workspace / "config.json"
    config_path.write_text(
        json.dumps({"seed": 99, "profiles": {"mock": {"temperature": 0.5}}}),
        encoding="utf-8",
    )
    summarize(workspace)
    code = run_cli(
        "bus", "--workspace", workspace, "--profile", "mock",
        "--config", config_path, "--n", "3",
    )
    assert code == 0


def test_bad_config_file_is_exit_2(workspace, capsys):
    config_path = workspace / "config.json"
    config_path.write_text("{not json", encoding="utf-8")
    code = run_cli("stats", "--workspace", workspace, "--config", config_path)
    assert code == 2
