import pytest

from helpers import load
from ontosep.graphs import PointedStructure
from ontosep.model import (BOT, KB, TOP, ConceptInclusion, Database, Ontology, Signature,
                           Structure, check_model)
from ontosep.oracle import (BudgetExhausted, ModelBudget, bisim_game,
                            brute_weak_separable_empty_ontology, count_models,
                            enumerate_models, has_model, sample_models)

UNSAT = Ontology({ConceptInclusion(TOP, BOT)})


def test_unsatisfiable_ontology_has_no_models():
    k = KB(UNSAT, Database({("A", "a")}))
    assert list(enumerate_models(k, ModelBudget(3))) == []
    assert not has_model(k, 3)


def test_single_fact_models_of_size_one():
    k = KB(Ontology(), Database({("A", "a")}))
    models = list(enumerate_models(k, ModelBudget(1)))
    assert len(models) == 1
    (s,) = models
    assert s.domain == {0} and s.concept_ext("A") == {0} and s.constant_map == {"a": 0}


def test_self_loop_example_needs_a_loop_at_size_one():
    k = load("exm11.okb").kb
    models = list(enumerate_models(k, ModelBudget(1)))
    assert models
    for s in models:
        assert s.binary_ext["R"] == {(0, 0)}
    # b and c need not be identified with a once two elements are available
    assert count_models(k, 2) > len(models)


def test_enumerated_structures_are_models():
    k = load("votes.okb").kb
    for s in enumerate_models(k, ModelBudget(2, 5000)):
        assert check_model(s, k)


def test_budget_is_enforced():
    k = KB(Ontology(), Database({("A", "a")}, {("r", "a", "b")}))
    with pytest.raises(BudgetExhausted):
        list(enumerate_models(k, ModelBudget(3, 10)))
    with pytest.raises(ValueError):
        ModelBudget(0)


def test_sampling_is_seeded_and_sound():
    k = load("citizens_k2.okb").kb
    one = sample_models(k, ModelBudget(3, 200), seed=5)
    two = sample_models(k, ModelBudget(3, 200), seed=5)
    as_tuple = lambda s: (s.domain, s.unary_ext, s.binary_ext, s.constant_map)
    assert list(map(as_tuple, one)) == list(map(as_tuple, two))
    assert 0 < len(one) <= 200
    assert all(check_model(s, k) for s in one)


def test_brute_force_separability_without_ontology():
    lk = load("citizens_k1.okb")
    assert brute_weak_separable_empty_ontology(lk.database, lk.positives, lk.negatives)
    loops = Database(binary_atoms={("R", "a", "a"), ("R", "b", "b")})
    assert not brute_weak_separable_empty_ontology(loops, {"a"}, {"b"})
    assert not brute_weak_separable_empty_ontology(lk.database, {"a"}, {"a"})


def test_bisimulation_game():
    loop = Structure(frozenset({0}), {}, {"R": frozenset({(0, 0)})}, {})
    dead = Structure(frozenset({0}), {}, {}, {})
    sig = Signature(frozenset(), {"R"})
    p, q = PointedStructure(loop, (0,)), PointedStructure(dead, (0,))
    assert bisim_game(p, q, sig, 0)
    assert not bisim_game(p, q, sig, 1)
    assert bisim_game(p, p, sig, 5)
