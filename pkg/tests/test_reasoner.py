import random
from collections import defaultdict

import numpy as np
import pytest

import corpus
import randomgen
from helpers import fresh_variant, load
from ontosep.graphs import bisimulation_classes, merge_databases
from ontosep.model import (BOT, KB, TOP, Atomic, ConceptInclusion, Database, Exists, LabeledKB,
                           Not, Ontology, Role, Signature, Structure, structure_of_database)
from ontosep.oracle import ModelBudget, concept_truth, sample_cells, sample_models
from ontosep.reasoner import (ResourceLimit, closure, entails_concept, get_reasoner,
                              is_alci_complete, is_connected_type, is_strongly_incomplete,
                              kb_reasoner, kb_satisfiable, limits, r_coherent,
                              realizable_types, realizable_types_at)
from ontosep.syntax import parse_concept

R = Role("R")
UNSAT = Ontology({ConceptInclusion(TOP, BOT)})
ONTOLOGIES = corpus.ontologies()
IDS = [f"O{i}" for i in range(len(ONTOLOGIES))]


def type_of(s: Structure, e, concepts):
    """Bitset of the closure concepts that hold at e."""
    return sum(1 << i for i, c in enumerate(concepts) if e in s.extension(c))


# -- closure and types

def test_closure_examples():
    cl = closure(load("exm11.okb").kb)
    for text in ("exists R. top", "exists inv(R). top", "top"):
        assert parse_concept(text) in cl
    k = KB(Ontology(), Database({("A", "a")}, {("S", "a", "b")}))
    cl = closure(k)
    for text in ("A", "exists S. top", "exists inv(S). top"):
        assert parse_concept(text) in cl
    assert len(cl.index) == len(set(cl.concepts)) == len(cl)


def test_realizable_type_counts():
    exm11 = load("exm11.okb").kb
    assert len(realizable_types(exm11.ontology, exm11.signature())) == 1
    assert realizable_types(UNSAT, Signature({"A"}, frozenset())) == frozenset()
    two = realizable_types(Ontology(), Signature({"A"}, frozenset()))
    assert sorted(t.labels() for t in two) == [frozenset(), frozenset({"A"})]


def test_coherence_examples():
    (t,) = realizable_types_at(load("exm11.okb").kb, "b")
    assert r_coherent(t, R, t)
    k = KB(Ontology(), Database(binary_atoms={("R", "a", "b")}))
    no_succ = [u for u in realizable_types(k.ontology, k.signature())
               if Not(Exists(R, TOP)) in u]
    assert no_succ
    others = realizable_types(k.ontology, k.signature())
    assert not any(r_coherent(u, R, v) for u in no_succ for v in others)


def test_coherence_is_symmetric_under_inversion():
    for o in corpus.ontologies()[:8]:
        r = get_reasoner(o, Signature({"A", "B"}, {"r"}), (), 20)
        for t in r.types:
            for u in r.types:
                assert r.coherent(t, Role("r"), u) == r.coherent(u, Role("r", True), t)


@pytest.mark.parametrize("o", ONTOLOGIES, ids=IDS)
def test_model_edges_join_coherent_types(o):
    sig = o.signature()
    r = get_reasoner(o, sig, (), 20)
    weights = np.array([1 << i for i in range(len(r.closure))], dtype=object)
    edges = 0
    for lay, cmap, codes in sample_cells(KB(o, Database()), ModelBudget(3, 50_000), per_cell=300):
        truth = concept_truth(r.closure.concepts, lay, codes)
        types = [(truth[:, i, :].T.astype(object) @ weights) for i in range(lay.n)]
        for name in lay.roles:
            role = Role(name)
            for i in range(lay.n):
                for j in range(lay.n):
                    on = ((codes >> np.uint32(lay.edge_bit(name, i, j))) & 1).astype(bool)
                    for t, u in set(zip(types[i][on].tolist(), types[j][on].tolist())):
                        edges += 1
                        assert t in r.type_set and u in r.type_set
                        assert r.coherent(t, role, u)
    assert edges > 0 or not sig.role_names


# -- satisfiability and entailment

def test_satisfiability_examples():
    assert kb_satisfiable(load("exm11.okb").kb)
    votes = load("votes.okb")
    merged = KB(votes.ontology, merge_databases(votes.database, "a", "b"))
    assert not kb_satisfiable(merged)
    assert not kb_satisfiable(KB(UNSAT, Database({("A", "a")})))


def test_entailment_examples():
    k1, k2 = load("citizens_k1.okb").kb, load("citizens_k2.okb").kb
    person = Atomic("Person")
    assert entails_concept(k2, person, "b")
    assert not entails_concept(k1, person, "b")
    assert entails_concept(k1, TOP, "c1")
    with pytest.raises(KeyError):
        entails_concept(k1, TOP, "nobody")


@pytest.mark.parametrize("seed", range(6))
def test_entailment_of_concept_and_negation_exclusive(seed):
    rng = random.Random(seed)
    for k in corpus.kbs()[seed::40]:
        if not kb_satisfiable(k):
            continue
        c = randomgen.concept(rng, 2, ("A", "B"), ("r",))
        for a in sorted(k.database.constants):
            assert not (entails_concept(k, c, a) and entails_concept(k, Not(c), a))


def test_types_at_examples():
    exm11 = load("exm11.okb").kb
    assert len(realizable_types_at(exm11, "b")) == 1
    assert realizable_types_at(KB(UNSAT, Database({("A", "a")})), "a") == frozenset()
    votes = load("votes.okb").kb
    assert not realizable_types_at(votes, "a") & realizable_types_at(votes, "b")


def test_types_at_subset_and_empty_iff_unsat():
    for k in corpus.kbs()[::5]:
        r = kb_reasoner(k)
        sat = kb_satisfiable(k)
        for c in k.database.constants:
            at = r.types_at(k.database, c)
            assert at <= r.type_set
            assert bool(at) == sat


def test_adding_inclusions_never_grows_types():
    sig = Signature({"A", "B"}, {"r"})
    pool = corpus.pool()
    for o in corpus.ontologies():
        for ci in pool:
            bigger = o.with_inclusion(ci)
            small = get_reasoner(o, sig, (ci.lhs, ci.rhs), 20)
            large = get_reasoner(bigger, sig, (), 20)
            as_sets = lambda r: {frozenset(c for c in r.closure.members(t) if not isinstance(c, Not))
                                 for t in r.types}
            assert as_sets(large) <= as_sets(small)


def test_database_types_are_realizable_for_empty_ontology():
    for d in corpus.databases():
        k = KB(Ontology(), d)
        r = kb_reasoner(k)
        s = structure_of_database(d)
        for c in d.constants:
            t = type_of(s, c, r.closure.concepts)
            assert t in r.types_at(d, c)
            has_edge = any(c in (x, y) for _, x, y in d.binary_atoms)
            assert r.is_connected(t) == has_edge


# -- connectedness and completeness

def test_self_loop_example_type_is_connected_and_complete():
    lk = load("exm11.okb")
    (t,) = realizable_types_at(lk.kb, "b")
    assert is_connected_type(t)
    assert is_alci_complete(lk.kb, t)
    assert not is_strongly_incomplete(lk)


def test_fresh_name_makes_connected_types_incomplete():
    lk = fresh_variant(load("exm11.okb"))
    r = kb_reasoner(lk.kb)
    connected = [t for t in r.types if r.is_connected(t)]
    assert connected and not any(r.is_complete(t) for t in connected)
    assert is_strongly_incomplete(lk)


def test_isolated_types_are_not_connected_but_complete():
    k = KB(Ontology(), Database({("A", "a")}))
    for t in realizable_types_at(k, "a"):
        assert not is_connected_type(t)
        assert is_alci_complete(k, t)
    for k in corpus.kbs()[::7]:
        r = kb_reasoner(k)
        assert all(r.is_complete(t) for t in r.types if not r.is_connected(t))


def test_unsatisfiable_kb_is_strongly_incomplete():
    lk = LabeledKB(KB(UNSAT, Database({("A", "a"), ("A", "b")})), {"a"}, {"b"})
    assert is_strongly_incomplete(lk)


@pytest.mark.parametrize("o", ONTOLOGIES, ids=IDS)
def test_complete_types_have_bisimilar_realizations(o):
    sig = o.signature()
    r = get_reasoner(o, sig, (), 20)
    models = sample_models(KB(o, Database()), ModelBudget(3, 600), seed=3, per_cell=200)
    domain, unary, binary, types = set(), defaultdict(set), defaultdict(set), {}
    for m, s in enumerate(models):
        for e in s.domain:
            domain.add((m, e))
            types[(m, e)] = type_of(s, e, r.closure.concepts)
        for a, ext in s.unary_ext.items():
            unary[a] |= {(m, e) for e in ext}
        for x, pairs in s.binary_ext.items():
            binary[x] |= {((m, d), (m, e)) for d, e in pairs}
    union = Structure(frozenset(domain), {a: frozenset(v) for a, v in unary.items()},
                      {x: frozenset(v) for x, v in binary.items()}, {})
    blocks = bisimulation_classes(union, sig)
    seen = defaultdict(set)
    for e, t in types.items():
        assert t in r.type_set
        seen[t].add(blocks[e])
    for t, bs in seen.items():
        if r.is_complete(t):
            assert len(bs) == 1


def test_closure_cap_raises_resource_limit():
    many = Ontology({ConceptInclusion(Atomic(f"A{i}"), Exists(Role(f"r{i}"), Atomic(f"B{i}")))
                     for i in range(8)})
    saved = limits["max_closure"]
    limits["max_closure"] = 6
    try:
        with pytest.raises(ResourceLimit):
            kb_reasoner(KB(many, Database({("A0", "a")})))
    finally:
        limits["max_closure"] = saved
