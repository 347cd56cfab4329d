import random

import pytest

import randomgen
from helpers import load
from ontosep.model import (BOT, BOT_NAME, CQ, KB, TOP, UCQ, And, Atomic, ConceptInclusion,
                           Database, Exists, Forall, LabeledKB, Not, Ontology, Or, Role,
                           Signature, Structure, check_model, concept_to_fo,
                           structure_of_database)
from ontosep.syntax import parse_concept

A, B = Atomic("A"), Atomic("B")
R = Role("R")


def random_structure(rng, n):
    dom = frozenset(range(n))
    unary = {name: frozenset(e for e in dom if rng.random() < 0.5) for name in ("A", "B")}
    binary = {r: frozenset((x, y) for x in dom for y in dom if rng.random() < 0.3)
              for r in ("r", "s")}
    return Structure(dom, unary, binary, {})


def test_inverse_is_an_involution():
    assert R.inv().inv() == R
    assert R.inv() != R
    assert str(R.inv()) == "inv(R)"


def test_derived_constructors_expand_to_core():
    assert Or(A, B) == Not(And(Not(A), Not(B)))
    assert Forall(R, A) == Not(Exists(R, Not(A)))
    assert TOP == Not(BOT)
    assert BOT == And(Atomic(BOT_NAME), Not(Atomic(BOT_NAME)))


def test_first_order_translation():
    assert concept_to_fo(A) == "A(x)"
    assert concept_to_fo(Exists(R.inv(), A)) == "∃y(R(y,x) ∧ A(y))"
    assert concept_to_fo(TOP) == f"¬({BOT_NAME}(x) ∧ ¬{BOT_NAME}(x))"


def test_structure_of_database():
    s = structure_of_database(Database(binary_atoms={("R", "a", "a")}))
    assert s.domain == {"a"}
    assert s.role_pairs(R) == {("a", "a")}
    assert s.constant_map == {"a": "a"}
    s = structure_of_database(Database(), constants=["a"])
    assert s.domain == {"a"} and s.concept_ext("A") == frozenset()
    s = structure_of_database(load("citizens_k1.okb").database)
    assert s.domain == {"a", "b", "c", "c1", "c2"}
    assert s.concept_ext("Person") == {"a"}


def test_check_model_on_self_loop_example():
    k = load("exm11.okb").kb
    assert not check_model(structure_of_database(k.database), k)
    loop = Structure(frozenset({"e"}), {}, {"R": frozenset({("e", "e")})},
                     {"a": "e", "b": "e", "c": "e"})
    assert check_model(loop, k)


def test_check_model_rejects_missing_atoms():
    k = KB(Ontology(), Database({("A", "a")}))
    s = Structure(frozenset({0}), {}, {}, {"a": 0})
    assert not check_model(s, k)


@pytest.mark.parametrize("seed", range(5))
def test_database_is_a_model_of_itself(seed):
    rng = random.Random(seed)
    d = randomgen.database(rng, ("a", "b", "c"), ("A", "B"), ("r",), 5)
    assert check_model(structure_of_database(d), KB(Ontology(), d))


@pytest.mark.parametrize("seed", range(20))
def test_extension_semantics_on_random_structures(seed):
    rng = random.Random(seed)
    s = random_structure(rng, rng.randint(1, 4))
    c = randomgen.concept(rng, 3, ("A", "B"), ("r", "s"))
    d = randomgen.concept(rng, 2, ("A", "B"), ("r", "s"))
    role = randomgen.role(rng, ("r", "s"))
    ext = s.extension
    assert ext(Not(c)) == s.domain - ext(c)
    assert ext(And(c, d)) == ext(c) & ext(d)
    assert ext(Exists(role, c)) == {x for x in s.domain if s.successors(x, role) & ext(c)}
    assert ext(BOT) == frozenset() and ext(TOP) == s.domain


def test_labeled_kb_rejects_empty_or_unknown_examples():
    k = KB(Ontology(), Database({("A", "a")}))
    with pytest.raises(ValueError, match="positive examples must be non-empty"):
        LabeledKB(k, set(), {"a"})
    with pytest.raises(ValueError, match="negative"):
        LabeledKB(k, {"a"}, set())
    with pytest.raises(ValueError, match="not in the database"):
        LabeledKB(k, {"a"}, {"z"})


def test_signature_and_size():
    ci = ConceptInclusion(parse_concept("exists r. A"), parse_concept("B or forall inv(s). A"))
    o = Ontology({ci})
    assert o.signature() == Signature({"A", "B"}, {"r", "s"})
    assert o.size() == ci.size() > 0
    assert o.with_inclusion(ci) == o


def test_database_operations():
    d = Database({("A", "a")}, {("r", "a", "b"), ("r", "c", "c")})
    assert d.constants == {"a", "b", "c"}
    assert d.restrict({"a", "b"}) == Database({("A", "a")}, {("r", "a", "b")})
    assert d.rename({"a": "x"}).constants == {"x", "b", "c"}
    assert set(d.neighbours("b")) == {(Role("r", True), "a")}
    assert d.labels("a") == {"A"}


def test_cq_rootedness_and_radius():
    q = CQ(("x",), {("A", "y")}, {("r", "x", "y"), ("r", "y", "z")})
    assert q.is_rooted() and q.radius() == 2
    assert not CQ(("x",), {("A", "y")}).is_rooted()
    assert UCQ((q, CQ(("x",), {("A", "x")}))).radius() == 2
    with pytest.raises(ValueError):
        CQ(("x",), equalities={("x", "y")})
