import random
from fractions import Fraction

import pytest

from bgsum.bws import (
    BwsError,
    ItemDesignation,
    JudgmentRecord,
    bws_scores,
    group_by_item,
    majority_designations,
    majority_pick,
    per_event_tally,
    vote_distribution,
)

SYSTEMS = ("human", "flan-t5-xl", "gpt-3.5")


def judgment(event_id, t, judge, best, worst, order=SYSTEMS):
    return JudgmentRecord(
        event_id=event_id,
        t=t,
        judge_id=judge,
        display_order=tuple(order),
        best=best,
        worst=worst,
        justification="because",
        elapsed_ms=45_000,
    )


def random_log(rng, n_items=20, judges=3):
    log = []
    for i in range(n_items):
        order = list(SYSTEMS)
        rng.shuffle(order)
        for j in range(judges):
            best, worst = rng.sample(SYSTEMS, 2)
            log.append(judgment("ev", i + 1, f"j{j}", best, worst, order))
    return log


# --- record invariants ---------------------------------------------------

def test_judgment_best_must_differ_from_worst():
    with pytest.raises(BwsError):
        judgment("ev", 1, "j1", "human", "human")


def test_judgment_picks_must_be_displayed():
    with pytest.raises(BwsError):
        JudgmentRecord(
            event_id="ev", t=1, judge_id="j", display_order=("a", "b"),
            best="a", worst="c",
        )


def test_judgment_round_trip():
    j = judgment("ev", 3, "j9", "human", "gpt-3.5")
    assert JudgmentRecord.from_record(j.to_record()) == j
    assert j.item_id == "ev:3"


# --- majority voting -------------------------------------------------------

def test_majority_two_of_three():
    items = [
        judgment("ev", 1, "j1", "human", "gpt-3.5"),
        judgment("ev", 1, "j2", "human", "flan-t5-xl"),
        judgment("ev", 1, "j3", "gpt-3.5", "flan-t5-xl"),
    ]
    pick = majority_pick(items)
    assert pick.best == "human"
    assert pick.worst == "flan-t5-xl"


def test_majority_three_way_split_is_none():
    items = [
        judgment("ev", 1, "j1", "human", "gpt-3.5"),
        judgment("ev", 1, "j2", "flan-t5-xl", "human"),
        judgment("ev", 1, "j3", "gpt-3.5", "flan-t5-xl"),
    ]
    pick = majority_pick(items)
    assert pick.best is None
    assert pick.worst is None


def test_majority_unanimous():
    items = [judgment("ev", 1, f"j{i}", "human", "gpt-3.5") for i in range(3)]
    assert majority_pick(items) == majority_pick(items)
    assert majority_pick(items).best == "human"


def test_majority_soundness_exhaustive_three_judges():
    """Brute-force oracle over every 3-judge (best, worst) vote pattern."""
    options = [(b, w) for b in SYSTEMS for w in SYSTEMS if b != w]
    checked = 0
    for v1 in options:
        for v2 in options:
            for v3 in options:
                items = [
                    judgment("ev", 1, f"j{i}", b, w)
                    for i, (b, w) in enumerate((v1, v2, v3))
                ]
                pick = majority_pick(items)
                best_votes = [v[0] for v in (v1, v2, v3)]
                worst_votes = [v[1] for v in (v1, v2, v3)]
                for system in SYSTEMS:
                    if best_votes.count(system) > 1.5:
                        assert pick.best == system
                    if worst_votes.count(system) > 1.5:
                        assert pick.worst == system
                if max(best_votes.count(s) for s in SYSTEMS) <= 1.5:
                    assert pick.best is None
                if max(worst_votes.count(s) for s in SYSTEMS) <= 1.5:
                    assert pick.worst is None
                checked += 1
    assert checked == 6**3


# --- scores -----------------------------------------------------------------

def test_unanimous_corpus_hits_extremes():
    log = []
    for i in range(100):
        for j in range(3):
            log.append(judgment("ev", i + 1, f"j{j}", "human", "gpt-3.5"))
    for mode in ("per_majority", "per_vote"):
        report = bws_scores(log, mode=mode)
        assert report.results["human"].bws == Fraction(1)
        assert report.results["gpt-3.5"].bws == Fraction(-1)
        assert report.results["flan-t5-xl"].bws == Fraction(0)


def test_per_vote_hand_fractions():
    log = []
    picks = (
        [("human", "gpt-3.5")] * 2
        + [("human", "flan-t5-xl")] * 3
        + [("flan-t5-xl", "flan-t5-xl2")] * 0
        + [("flan-t5-xl", "gpt-3.5")] * 3
        + [("gpt-3.5", "human")] * 2
    )
    for i, (best, worst) in enumerate(picks):
        log.append(judgment("ev", i + 1, "j1", best, worst))
    report = bws_scores(log, mode="per_vote")
    assert report.results["human"].bws == Fraction(3, 10)
    assert report.results["flan-t5-xl"].bws == Fraction(0)
    assert report.results["gpt-3.5"].bws == Fraction(-3, 10)


def test_per_vote_zero_sum_exact_on_random_logs():
    rng = random.Random(555)
    for _ in range(100):
        log = random_log(rng, n_items=rng.randint(1, 15), judges=rng.randint(1, 5))
        report = bws_scores(log, mode="per_vote")
        assert sum(r.bws for r in report.results.values()) == Fraction(0)


def test_scores_invariant_under_display_order_relabeling():
    rng = random.Random(321)
    log = random_log(rng, n_items=12)
    shuffled = []
    for j in log:
        order = list(j.display_order)
        rng.shuffle(order)
        shuffled.append(
            JudgmentRecord(
                event_id=j.event_id,
                t=j.t,
                judge_id=j.judge_id,
                display_order=tuple(order),
                best=j.best,
                worst=j.worst,
                justification=j.justification,
                elapsed_ms=j.elapsed_ms,
            )
        )
    for mode in ("per_majority", "per_vote"):
        assert bws_scores(log, mode).results == bws_scores(shuffled, mode).results


def test_per_majority_no_majority_counts_in_denominator():
    log = [
        judgment("ev", 1, "j1", "human", "gpt-3.5"),
        judgment("ev", 1, "j2", "flan-t5-xl", "human"),
        judgment("ev", 1, "j3", "gpt-3.5", "flan-t5-xl"),
        judgment("ev", 2, "j1", "human", "gpt-3.5"),
        judgment("ev", 2, "j2", "human", "gpt-3.5"),
        judgment("ev", 2, "j3", "gpt-3.5", "human"),
    ]
    report = bws_scores(log, mode="per_majority")
    assert report.items == 2
    assert report.no_majority_best == 1
    assert report.results["human"].bws == Fraction(1, 2)
    assert report.results["gpt-3.5"].bws == Fraction(-1, 2)


def test_bws_scores_rejects_empty_and_bad_mode():
    with pytest.raises(BwsError):
        bws_scores([])
    with pytest.raises(BwsError):
        bws_scores([judgment("ev", 1, "j", "human", "gpt-3.5")], mode="nope")


# --- vote distribution -------------------------------------------------------

def test_distribution_unanimous_mass():
    log = [judgment("ev", i + 1, f"j{j}", "human", "gpt-3.5") for i in range(4) for j in range(3)]
    dist = vote_distribution(log, judges=3)
    assert dist.best["human"][3] == 4
    assert dist.best["flan-t5-xl"][0] == 4
    assert dist.worst["gpt-3.5"][3] == 4


def test_distribution_hand_tally():
    log = [
        # item 1: human 2 best votes, gpt 1
        judgment("ev", 1, "j1", "human", "gpt-3.5"),
        judgment("ev", 1, "j2", "human", "flan-t5-xl"),
        judgment("ev", 1, "j3", "gpt-3.5", "human"),
        # item 2: each system 1 best vote
        judgment("ev", 2, "j1", "human", "gpt-3.5"),
        judgment("ev", 2, "j2", "flan-t5-xl", "gpt-3.5"),
        judgment("ev", 2, "j3", "gpt-3.5", "human"),
    ]
    dist = vote_distribution(log, judges=3)
    assert dist.best["human"][2] == 1
    assert dist.best["human"][1] == 1
    assert dist.best["flan-t5-xl"][0] == 1
    assert dist.best["flan-t5-xl"][1] == 1
    assert dist.worst["gpt-3.5"][1] == 1
    assert dist.worst["gpt-3.5"][2] == 1


def test_distribution_counting_identity():
    rng = random.Random(77)
    log = random_log(rng, n_items=30)
    dist = vote_distribution(log, judges=3)
    for system in dist.best:
        total_votes = sum(1 for j in log if j.best == system)
        assert sum(k * c for k, c in dist.best[system].items()) == total_votes
        items = sum(dist.best[system].values())
        assert items == len(group_by_item(log))


# --- per-event tallies --------------------------------------------------------

def test_single_event_tally_equals_corpus():
    log = [judgment("ev", i + 1, f"j{j}", "human", "gpt-3.5") for i in range(5) for j in range(3)]
    rows = per_event_tally(majority_designations(log))
    by_system = {r.system_id: r for r in rows}
    assert by_system["human"].best == 5
    assert by_system["gpt-3.5"].worst == 5


def test_two_event_tally_hand_counts():
    designations = [
        ItemDesignation("ev-a", 1, frozenset({"human"}), frozenset({"gpt-3.5"})),
        ItemDesignation("ev-a", 2, frozenset({"human"}), frozenset({"flan-t5-xl"})),
        ItemDesignation("ev-b", 1, frozenset({"gpt-3.5"}), frozenset({"human"})),
    ]
    rows = {(r.event_id, r.system_id): r for r in per_event_tally(designations)}
    assert rows[("ev-a", "human")].best == 2
    assert rows[("ev-a", "gpt-3.5")].worst == 1
    assert rows[("ev-b", "gpt-3.5")].best == 1
    assert rows[("ev-b", "human")].worst == 1
    assert rows[("ev-a", "flan-t5-xl")].worst == 1


def test_uncovered_event_gets_flagged_zero_row():
    designations = [
        ItemDesignation("ev-a", 1, frozenset({"human"}), frozenset({"gpt-3.5"})),
    ]
    rows = per_event_tally(designations, events=["ev-a", "ev-empty"])
    empty_rows = [r for r in rows if r.event_id == "ev-empty"]
    assert empty_rows
    assert all(r.flagged_empty and r.best == 0 and r.worst == 0 for r in empty_rows)
