import json
import random
from datetime import datetime, timezone

import pytest

from defectmine.links import (
    AUTO_VALIDATED,
    EXPERT_CONFIRMED,
    EXPERT_REJECTED,
    JL_KEY,
    LinkCandidate,
)
from defectmine.validation import (
    DecisionConflict,
    DecisionInvalid,
    IssueTypeDecision,
    LinkDecision,
    ValidationStore,
    build_queue,
)

NOW = datetime(2021, 6, 1, tzinfo=timezone.utc)


def link(commit, issue, rater="r1", verdict="addressed"):
    return LinkDecision(commit=commit, issue=issue, rater=rater, verdict=verdict, decided_at=NOW)


def typed(issue, rater, label, round="independent"):
    return IssueTypeDecision(issue=issue, rater=rater, label=label, round=round, decided_at=NOW)


def test_link_decision_validates_candidate():
    store = ValidationStore()
    store.record_link_decision(link("c1", "K-1", verdict="addressed"))
    assert store.link_state("c1", "K-1") == EXPERT_CONFIRMED


def test_mentioned_only_rejects_but_is_recorded():
    store = ValidationStore()
    store.record_link_decision(link("c1", "K-1", verdict="mentioned_only"))
    assert store.link_state("c1", "K-1") == EXPERT_REJECTED
    assert ("c1", "K-1") in store.link_decisions


def test_duplicate_link_decision_conflicts():
    store = ValidationStore()
    store.record_link_decision(link("c1", "K-1"))
    with pytest.raises(DecisionConflict):
        store.record_link_decision(link("c1", "K-1"))
    with pytest.raises(DecisionConflict):
        store.record_link_decision(link("c1", "K-1", rater="r2", verdict="wrong"))


def test_unknown_candidate_rejected_when_scoped():
    store = ValidationStore()
    with pytest.raises(DecisionInvalid):
        store.record_link_decision(link("cX", "K-9"), known_pairs={("c1", "K-1")})


def test_bad_verdict_rejected():
    with pytest.raises(DecisionInvalid):
        link("c1", "K-1", verdict="maybe")


def test_issue_type_agreement_finalizes():
    store = ValidationStore()
    assert store.record_issue_type(typed("K-1", "r1", "BUG")) is False
    assert store.record_issue_type(typed("K-1", "r2", "BUG")) is False
    assert store.final_issue_types() == {"K-1": "BUG"}
    assert store.conflicts() == []


def test_issue_type_conflict_then_committee():
    store = ValidationStore()
    store.record_issue_type(typed("K-1", "r1", "BUG"))
    conflict = store.record_issue_type(typed("K-1", "r2", "IMPROVEMENT"))
    assert conflict is True
    assert store.conflicts() == ["K-1"]
    assert store.final_issue_types() == {}
    store.record_issue_type(typed("K-1", "r3", "IMPROVEMENT", round="committee"))
    assert store.final_issue_types() == {"K-1": "IMPROVEMENT"}
    assert store.conflicts() == []


def test_committee_requires_conflict_and_fresh_rater():
    store = ValidationStore()
    with pytest.raises(DecisionConflict):
        store.record_issue_type(typed("K-1", "r3", "BUG", round="committee"))
    store.record_issue_type(typed("K-1", "r1", "BUG"))
    store.record_issue_type(typed("K-1", "r2", "DOC"))
    with pytest.raises(DecisionConflict):
        store.record_issue_type(typed("K-1", "r1", "BUG", round="committee"))


def test_third_independent_label_rejected():
    store = ValidationStore()
    store.record_issue_type(typed("K-1", "r1", "BUG"))
    store.record_issue_type(typed("K-1", "r2", "BUG"))
    with pytest.raises(DecisionConflict):
        store.record_issue_type(typed("K-1", "r3", "DOC"))


def test_same_rater_cannot_label_twice():
    store = ValidationStore()
    store.record_issue_type(typed("K-1", "r1", "BUG"))
    with pytest.raises(DecisionConflict):
        store.record_issue_type(typed("K-1", "r1", "DOC"))


def test_unknown_label_and_round_rejected():
    with pytest.raises(DecisionInvalid):
        typed("K-1", "r1", "FEATURE")
    with pytest.raises(DecisionInvalid):
        typed("K-1", "r1", "BUG", round="plenary")


def test_log_replay_reproduces_state(tmp_path):
    log_path = tmp_path / "decisions.jsonl"
    store = ValidationStore(log_path=log_path)
    store.record_link_decision(link("c1", "K-1"))
    store.record_issue_type(typed("K-1", "r1", "BUG"))
    store.record_issue_type(typed("K-1", "r2", "DOC"))
    store.record_issue_type(typed("K-1", "r3", "DOC", round="committee"))
    replayed = ValidationStore.load(log_path)
    assert replayed.final_issue_types() == store.final_issue_types()
    assert replayed.link_decisions.keys() == store.link_decisions.keys()
    # replaying the same log into a fresh file produces identical decisions
    log2 = tmp_path / "again.jsonl"
    second = ValidationStore(log_path=log2)
    for line in log_path.read_text().splitlines():
        second.apply_record(json.loads(line))
    assert log2.read_text() == log_path.read_text()


def test_apply_to_candidates_overlay():
    store = ValidationStore()
    store.record_link_decision(link("c" * 40, "K-1", verdict="wrong"))
    cands = [
        LinkCandidate("c" * 40, "K-1", JL_KEY, "K-1"),
        LinkCandidate("d" * 40, "K-2", JL_KEY, "K-2", validation=AUTO_VALIDATED),
    ]
    overlaid = store.apply_to_candidates(cands)
    assert overlaid[0].validation == EXPERT_REJECTED
    assert overlaid[1].validation == AUTO_VALIDATED


def test_queue_contents(fixture, graph, issues):
    from defectmine.links import auto_validate, detect_jl_links, detect_szz_links

    candidates = auto_validate(
        detect_szz_links(graph, issues) + detect_jl_links(graph, issues, {})
    )
    # with an empty store everything planted is pending
    empty = ValidationStore()
    queue = build_queue(empty, candidates, {i.key: i for i in issues})
    assert fixture.sha["MM"] in queue.pending_links
    assert fixture.sha["VB"] in queue.pending_links
    assert "DEMO-101" in queue.pending_issues
    assert queue.conflicts == []
    # the seeded log clears all queues
    seeded = ValidationStore.load(fixture.decisions_path)
    queue = build_queue(seeded, candidates, {i.key: i for i in issues})
    assert queue.pending_links == []
    assert queue.pending_issues == []
    assert queue.conflicts == []


def test_two_rater_protocol_invariants_over_interleavings():
    issues = [f"K-{i}" for i in range(1, 4)]
    rng = random.Random(42)
    for trial in range(100):
        ops = []
        for key in issues:
            label_a = rng.choice(["BUG", "IMPROVEMENT"])
            label_b = rng.choice(["BUG", "IMPROVEMENT", "DOC"])
            ops.append(("ind", key, "alice", label_a))
            ops.append(("ind", key, "bob", label_b))
        rng.shuffle(ops)
        store = ValidationStore()
        for _tag, key, rater, label in ops:
            store.record_issue_type(typed(key, rater, label))
        # committee rounds for whatever conflicted
        for key in store.conflicts():
            store.record_issue_type(typed(key, "carol", "BUG", round="committee"))
        finals = store.final_issue_types()
        assert set(finals) == set(issues)
        for key in issues:
            state = store.issue_types[key]
            assert len(state.independent) == 2
            labels = set(state.independent.values())
            if len(labels) == 1:
                assert finals[key] == labels.pop()
                assert state.committee is None
            else:
                assert state.committee is not None
                assert state.committee[0] == "carol"
                assert finals[key] == state.committee[1]
