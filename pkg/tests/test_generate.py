import random

import pytest

from bgsum import jsonl
from bgsum.gateway import BUILTIN_PROFILES, ChatClient, ClientConfig, ModelProfile
from bgsum.generate import (
    GenerationError,
    GenerationSpec,
    PastUpdate,
    assert_causal,
    extract_entities,
    generate_background,
    render_prompt,
    run_event,
)
from tests.conftest import make_timeline

MOCK = BUILTIN_PROFILES["mock"]
MOCK_PREFIX = BUILTIN_PROFILES["mock-prefix"]


def spec_for(mode="generic", query_form=None, profile_id="mock", event_id="tiny-event"):
    return GenerationSpec(
        mode=mode, profile_id=profile_id, event_id=event_id, query_form=query_form
    )


def updates(*texts):
    return [PastUpdate(index=i + 1, text=t) for i, t in enumerate(texts)]


# --- generation spec ----------------------------------------------------

def test_spec_query_form_only_with_query_focused():
    with pytest.raises(GenerationError):
        GenerationSpec(mode="generic", profile_id="mock", event_id="e", query_form="full_update")
    with pytest.raises(GenerationError):
        GenerationSpec(mode="query_focused", profile_id="mock", event_id="e")


# --- entity extraction --------------------------------------------------

def test_entities_capitalized_runs_with_title():
    q = extract_entities("Dr. Conrad Murray is sentenced in Los Angeles.")
    assert list(q.entities) == ["Dr. Conrad Murray", "Los Angeles"]
    assert q.rendered == "Dr. Conrad Murray, Los Angeles"


def test_entities_none_capitalized():
    q = extract_entities("nothing capitalized here")
    assert q.entities == ()
    assert q.empty


def test_entities_dedup_case_insensitive():
    q = extract_entities("NSA leaks shake NSA again")
    assert list(q.entities) == ["NSA"]


def test_entities_connector_inside_run():
    q = extract_entities("Oil spreads across the Gulf of Mexico tonight.")
    assert "Gulf of Mexico" in q.entities


def test_entities_sentence_opener_excluded():
    q = extract_entities("The spill worsens near Venice overnight.")
    assert list(q.entities) == ["Venice"]


def test_entities_rendered_respects_query_limit():
    text = "Alpha Bravo meets Charlie Delta and Echo Foxtrot in Gulf of Mexico."
    q = extract_entities(text, query_limit=3)
    assert len(q.rendered.split()) == 3


def test_entities_external_recognizer_hook():
    q = extract_entities("whatever text", recognizer=lambda text: ["BP", "bp", "Gulf"])
    assert list(q.entities) == ["BP", "Gulf"]


def test_entities_empty_text_rejected():
    with pytest.raises(GenerationError):
        extract_entities("   ")


# --- prompt templates ---------------------------------------------------

def test_generic_prefix_template():
    render = render_prompt(spec_for(), MOCK_PREFIX, updates("u1", "u2"))
    assert render.text == "summarize: u1\nu2"


def test_generic_suffix_template():
    render = render_prompt(spec_for(), MOCK, updates("u1", "u2"))
    assert render.text == "u1\nu2\n\nProvide a short summary of the above article."


def test_query_focused_prefix_template():
    render = render_prompt(
        spec_for("query_focused", "full_update"), MOCK_PREFIX, updates("u1", "u2"), query="Q"
    )
    assert render.text == (
        "Generate a short query-focused summary of the background. "
        "Query: Q, Background: u1\nu2"
    )


def test_query_focused_suffix_template():
    render = render_prompt(
        spec_for("query_focused", "full_update"), MOCK, updates("u1", "u2"), query="Q"
    )
    assert render.text == (
        "Query: Q, Background: u1\nu2\n\n"
        "Generate a short query-focused summary of the background."
    )


def test_render_is_segment_concatenation():
    render = render_prompt(
        spec_for("query_focused", "full_update"), MOCK, updates("u1", "u2"), query="Q"
    )
    assert "".join(s.text for s in render.segments) == render.text


def test_query_truncated_to_profile_limit():
    long_query = " ".join(f"q{i}" for i in range(200))
    render = render_prompt(
        spec_for("query_focused", "full_update"), MOCK, updates("u1"), query=long_query
    )
    query_seg = next(s for s in render.segments if s.kind == "query")
    assert len(query_seg.text.split()) == MOCK.query_limit
    assert query_seg.text.split()[0] == "q0"


def test_render_truncates_oldest_and_reports_drop():
    profile = ModelProfile(
        profile_id="small", backend="mock", source_limit=20, query_limit=4,
        request_style="suffix", safety_factor=1.0,
    )
    past = updates(*[" ".join([f"u{i}"] * 6) for i in range(4)])
    render = render_prompt(spec_for(), profile, past)
    assert render.dropped_updates > 0
    assert render.token_estimate <= profile.source_limit
    # most recent update always represented
    assert render.past_update_indices()[-1] == 4


def test_render_rejects_impossible_budget():
    profile = ModelProfile(
        profile_id="nano", backend="mock", source_limit=6, query_limit=5,
        request_style="suffix", safety_factor=1.0,
    )
    with pytest.raises(GenerationError):
        render_prompt(spec_for(), profile, updates("u1"))


def test_date_prefix_flag():
    past = [PastUpdate(index=1, text="u1", date="2011-01-01")]
    render = render_prompt(spec_for(), MOCK_PREFIX, past, include_dates=True)
    assert render.text == "summarize: 2011-01-01. u1"


# --- generation --------------------------------------------------------

def test_generate_t2_uses_only_first_update(tiny_timeline):
    client = ChatClient()
    result = generate_background(tiny_timeline, 2, spec_for(), client)
    assert result.render.past_update_indices() == [1]
    update_texts = [s.text for s in result.render.segments if s.kind == "update"]
    assert update_texts == ["troops enter the city"]
    assert result.background == result.exchange.response


def test_generate_query_focused_full_update(tiny_timeline):
    client = ChatClient()
    spec = spec_for("query_focused", "full_update")
    result = generate_background(tiny_timeline, 2, spec, client)
    query_seg = next(s for s in result.render.segments if s.kind == "query")
    assert query_seg.text == "the president resigns"
    # the current update never enters the past-updates section
    assert "president" not in " ".join(
        s.text for s in result.render.segments if s.kind == "update"
    )


def test_generate_entity_mode_falls_back_when_no_entities():
    tl = make_timeline(
        "lowercase-event",
        [
            ("2011-01-01", {1: "alpha beta gamma"}, {}),
            ("2011-01-02", {1: "all lowercase update"}, {1: "bg"}),
        ],
    )
    client = ChatClient()
    spec = spec_for("query_focused", "named_entities", event_id="lowercase-event")
    result = generate_background(tl, 2, spec, client)
    assert result.render.fallback_generic is True
    assert "Query:" not in result.render.text


def test_generic_output_invariant_to_current_update(tiny_timeline):
    client = ChatClient()
    baseline = generate_background(tiny_timeline, 2, spec_for(), client)
    changed = make_timeline(
        "tiny-event",
        [
            (
                "2011-01-02",
                {1: "troops enter the city", 2: "troops enter the town", 3: "soldiers enter a city"},
                {},
            ),
            (
                "2011-01-05",
                {1: "a completely different present-day update", 2: "x", 3: "y"},
                {1: "troops entered the city", 2: "troops entered town", 3: "soldiers entered the city"},
            ),
        ],
    )
    rerun = generate_background(changed, 2, spec_for(), client)
    assert rerun.render.text == baseline.render.text
    assert rerun.background == baseline.background


def test_generate_rejects_out_of_range_t(tiny_timeline):
    client = ChatClient()
    with pytest.raises(GenerationError):
        generate_background(tiny_timeline, 1, spec_for(), client)
    with pytest.raises(GenerationError):
        generate_background(tiny_timeline, 3, spec_for(), client)


def test_causality_fuzz():
    rng = random.Random(4242)
    client_profile = ModelProfile(
        profile_id="fuzz", backend="mock", source_limit=64, query_limit=8,
        request_style="suffix", safety_factor=1.0,
    )
    for _ in range(100):
        total = rng.randint(2, 9)
        past = updates(*[f"step{i} content" for i in range(1, total)])
        render = render_prompt(spec_for(), client_profile, past)
        assert_causal(render, total)
        for idx in render.past_update_indices():
            assert idx < total


# --- run orchestration --------------------------------------------------

def run_timeline(n_steps=4):
    steps = []
    for i in range(n_steps):
        updates_map = {1: f"update {i + 1} alpha beta"}
        backgrounds = {1: f"background {i + 1}"} if i else {}
        steps.append((f"2011-02-{i + 1:02d}", updates_map, backgrounds))
    return make_timeline("run-event", steps)


def test_run_event_produces_output_per_later_step(tmp_path):
    tl = run_timeline(4)
    client = ChatClient()
    spec = spec_for(event_id="run-event")
    run = run_event(tl, spec, client, out_path=tmp_path / "run.jsonl")
    assert sorted(run.outputs) == [2, 3, 4]
    assert run.complete
    records = jsonl.load_records(tmp_path / "run.jsonl")
    assert len(records) == 3
    assert {r["t"] for r in records} == {2, 3, 4}
    assert all(r["system_id"] == "mock" for r in records)


def test_run_event_resumes_without_new_calls(tmp_path):
    tl = run_timeline(4)
    log = tmp_path / "log.jsonl"
    out = tmp_path / "run.jsonl"
    spec = spec_for(event_id="run-event")

    client = ChatClient(config=ClientConfig(log_path=str(log)))
    run_event(tl, spec, client, out_path=out)
    first_calls = len(jsonl.load_records(log))

    rerun = run_event(tl, spec, client, out_path=out)
    assert rerun.skipped == 3
    assert len(jsonl.load_records(log)) == first_calls
    assert len(jsonl.load_records(out)) == 3


def test_run_event_force_regenerates(tmp_path):
    tl = run_timeline(3)
    out = tmp_path / "run.jsonl"
    spec = spec_for(event_id="run-event")
    client = ChatClient()
    run_event(tl, spec, client, out_path=out)
    run = run_event(tl, spec, client, out_path=out, force=True)
    assert run.skipped == 0
    assert len(jsonl.load_records(out)) == 2


def test_run_event_single_step_timeline_is_empty_run():
    tl = run_timeline(1)
    run = run_event(tl, spec_for(event_id="run-event"), ChatClient())
    assert run.outputs == {}
    assert run.complete
