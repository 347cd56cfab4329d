import json

import pytest

import corpus
from helpers import fresh_variant, load
from ontosep.entailment import verify_strong_concept, verify_weak_concept
from ontosep.model import BOT, KB, TOP, ConceptInclusion, Database, LabeledKB, Ontology
from ontosep.oracle import brute_weak_separable_empty_ontology
from ontosep.reasoner import kb_satisfiable
from ontosep.separability import (INSEPARABLE, SEPARABLE, TASKS, projective_via_reduction,
                                  run_task, strong, weak_nonprojective, weak_projective)

UNSAT = Ontology({ConceptInclusion(TOP, BOT)})


def test_self_loop_task_verdicts():
    lk = load("exm11.okb")
    assert weak_projective(lk).separable
    assert not weak_nonprojective(lk).separable
    assert projective_via_reduction(lk).separable
    assert not strong(lk).separable
    assert weak_nonprojective(fresh_variant(lk)).separable


def test_citizen_example_reports():
    rep = weak_projective(load("citizens_k2.okb"))
    assert rep.status == SEPARABLE
    assert rep.separator["kind"] == "ucq" and rep.separator["verified"]
    assert rep.certificate["negatives"]["b"]["entailed"] is False
    assert "b" in rep.countermodels


def test_strong_votes_separator_is_a_type_disjunction():
    rep = strong(load("votes.okb"))
    assert rep.separable and rep.separator["verified"]
    (pair,) = rep.certificate["pairs"]
    assert pair == {"positive": "a", "negative": "b", "merged_unsatisfiable": True,
                    "types_disjoint": True}
    assert not strong(load("votes_k1.okb")).separable


def test_identical_positive_and_negative_is_inseparable():
    for name in ("exm11.okb", "votes.okb", "citizens_k1.okb"):
        lk = load(name)
        same = LabeledKB(lk.kb, {"a"}, {"a"})
        for task in TASKS + ("projective-via-reduction",):
            assert run_task(same, task).status == INSEPARABLE


def test_unsatisfiable_kb():
    lk = LabeledKB(KB(UNSAT, Database({("A", "a"), ("A", "b")})), {"a"}, {"b"})
    assert not weak_projective(lk).separable
    assert not weak_nonprojective(lk).separable
    assert weak_projective(lk).certificate["reason"] == "knowledge base is unsatisfiable"
    # every concept is entailed everywhere, so strong separation is vacuous
    rep = strong(lk)
    assert rep.separable and rep.separator["verified"]


def test_several_negatives():
    d = Database({("A", "a"), ("B", "b"), ("B", "c")})
    lk = LabeledKB(KB(Ontology(), d), {"a"}, {"b", "c"})
    rep = weak_nonprojective(lk)
    assert rep.separable and rep.separator["verified"]
    assert set(rep.certificate["negatives"]) == {"b", "c"}
    assert strong(lk).status == INSEPARABLE
    assert len(strong(lk).certificate["pairs"]) == 2


def test_unknown_task():
    with pytest.raises(ValueError, match="unknown task"):
        run_task(load("exm11.okb"), "nonsense")


def test_reports_serialize():
    lk = load("citizens_k1.okb")
    for task in TASKS:
        d = run_task(lk, task).to_dict()
        assert json.loads(json.dumps(d)) == d
        assert set(d) == {"task", "status", "separator", "certificate", "stats"}
        assert d["stats"]["time_ms"] >= 0


def test_corpus_invariants():
    for lk in corpus.labeled()[::3]:
        p, n = lk.positives, lk.negatives
        s, wp, wn = strong(lk), weak_projective(lk), weak_nonprojective(lk)
        if s.separable and kb_satisfiable(lk.kb):
            assert wp.separable
        if wn.separable:
            assert wp.separable
        if wn.separator:
            assert verify_weak_concept(lk.kb, wn.formula, p, n)
        if s.separator:
            assert verify_strong_concept(lk.kb, s.formula, p, n)


def test_dropping_negatives_keeps_separability():
    d = Database({("A", "a")}, {("r", "a", "b"), ("r", "c", "c"), ("r", "d", "a")})
    k = KB(Ontology(), d)
    full = LabeledKB(k, {"a"}, {"b", "c", "d"})
    for task in TASKS:
        if run_task(full, task).separable:
            for b in ("b", "c", "d"):
                assert run_task(LabeledKB(k, {"a"}, {b}), task).separable


def test_weak_projective_matches_brute_force_without_ontology():
    checked = 0
    for lk in corpus.labeled():
        if lk.ontology.inclusions:
            continue
        checked += 1
        assert weak_projective(lk).separable == \
            brute_weak_separable_empty_ontology(lk.database, lk.positives, lk.negatives)
    assert checked > 0
