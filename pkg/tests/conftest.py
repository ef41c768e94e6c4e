import datetime as dt

import pytest

from bgsum.timeline import (
    AnnotatedText,
    Corpus,
    DateRange,
    EventRecord,
    TimeStep,
    Timeline,
)


def make_event(event_id="test-event", split="test", start="2011-01-01", end="2011-12-31"):
    return EventRecord(
        event_id=event_id,
        title=event_id.replace("-", " ").title(),
        split=split,
        period=DateRange(dt.date.fromisoformat(start), dt.date.fromisoformat(end)),
    )


def make_step(index, date, updates, backgrounds=None):
    """updates/backgrounds are {annotator_id: text} mappings."""
    backgrounds = backgrounds or {}
    return TimeStep(
        date=dt.date.fromisoformat(date),
        index=index,
        updates=tuple(AnnotatedText(a, t) for a, t in sorted(updates.items())),
        backgrounds=tuple(AnnotatedText(a, t) for a, t in sorted(backgrounds.items())),
    )


def make_timeline(event_id, step_specs, split="test"):
    """step_specs: list of (date, updates_dict, backgrounds_dict)."""
    steps = tuple(
        make_step(i + 1, date, updates, backgrounds)
        for i, (date, updates, backgrounds) in enumerate(step_specs)
    )
    event = make_event(
        event_id,
        split=split,
        start=step_specs[0][0],
        end=step_specs[-1][0],
    )
    return Timeline(event=event, steps=steps)


@pytest.fixture
def tiny_timeline():
    return make_timeline(
        "tiny-event",
        [
            ("2011-01-02", {1: "troops enter the city", 2: "troops enter the town", 3: "soldiers enter a city"}, {}),
            (
                "2011-01-05",
                {1: "the president resigns", 2: "president resigns today", 3: "the leader resigns"},
                {1: "troops entered the city", 2: "troops entered town", 3: "soldiers entered the city"},
            ),
        ],
    )


@pytest.fixture
def tiny_corpus(tiny_timeline):
    corpus = Corpus()
    corpus.events[tiny_timeline.event.event_id] = tiny_timeline.event
    corpus.timelines[tiny_timeline.event.event_id] = tiny_timeline
    return corpus


def build_synthetic_corpus(
    directory=None,
    events=("alpha-event", "beta-event", "gamma-event"),
    steps=5,
    annotators=(1, 2, 3),
    split="test",
):
    """Deterministic multi-annotator corpus for pipeline tests."""
    from bgsum.timeline import save_corpus

    phrasing = {
        1: "officials said the situation escalated",
        2: "observers reported the situation escalated",
        3: "reporters noted tensions were rising",
    }
    corpus = Corpus()
    for e, event_id in enumerate(events):
        specs = []
        for i in range(steps):
            updates = {
                a: (
                    f"Update {i + 1} for {event_id}: protest crowds gathered downtown "
                    f"and {phrasing[a]}."
                )
                for a in annotators
            }
            backgrounds = (
                {
                    a: (
                        f"Earlier in {event_id}, crowds had gathered downtown on "
                        f"day {i}. Authorities were monitoring events and "
                        f"{phrasing[a]}."
                    )
                    for a in annotators
                }
                if i
                else {}
            )
            specs.append((f"2014-0{e + 1}-{i + 1:02d}", updates, backgrounds))
        tl = make_timeline(event_id, specs, split=split)
        corpus.events[event_id] = tl.event
        corpus.timelines[event_id] = tl
    if directory is not None:
        save_corpus(corpus, directory)
    return corpus
