"""Immutable data model: roles, ALCI concepts, ontologies, databases, KBs,
finite structures and (unions of) conjunctive queries.

All values are frozen dataclasses, so structural equality and hashing come
for free and any value can serve as a dictionary key (closures index
concepts this way).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, Mapping, Optional, Tuple, Union

# Reserved concept name used to spell bot as (A* and not A*).  It cannot be
# written in the concrete syntax (identifiers are ASCII) and is interpreted
# as the empty set everywhere.
BOT_NAME = "⊥*"


@dataclass(frozen=True)
class Signature:
    concept_names: FrozenSet[str] = frozenset()
    role_names: FrozenSet[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "concept_names", frozenset(self.concept_names))
        object.__setattr__(self, "role_names", frozenset(self.role_names))
        clash = self.concept_names & self.role_names
        if clash:
            raise ValueError(f"symbols used both as concept and role: {sorted(clash)}")

    def __or__(self, other: "Signature") -> "Signature":
        return Signature(self.concept_names | other.concept_names,
                         self.role_names | other.role_names)

    def __contains__(self, name: str) -> bool:
        return name in self.concept_names or name in self.role_names


@dataclass(frozen=True, order=True)
class Role:
    name: str
    inverted: bool = False

    def inv(self) -> "Role":
        return Role(self.name, not self.inverted)

    def __str__(self):
        return f"inv({self.name})" if self.inverted else self.name


# ---------------------------------------------------------------- concepts

class Concept:
    """Base class of the concept AST (Atomic, Not, And, Exists)."""

    __slots__ = ()

    def subconcepts(self) -> Iterator["Concept"]:
        """Yield every subconcept, children before parents, self last."""
        raise NotImplementedError

    def concept_names(self) -> FrozenSet[str]:
        return frozenset(c.name for c in self.subconcepts()
                         if isinstance(c, Atomic) and c.name != BOT_NAME)

    def role_names(self) -> FrozenSet[str]:
        return frozenset(c.role.name for c in self.subconcepts() if isinstance(c, Exists))

    def signature(self) -> Signature:
        return Signature(self.concept_names(), self.role_names())

    def size(self) -> int:
        raise NotImplementedError

    def __str__(self):
        from .syntax import render_concept
        return render_concept(self)


@dataclass(frozen=True)
class Atomic(Concept):
    name: str

    def subconcepts(self):
        yield self

    def size(self):
        return 1


@dataclass(frozen=True)
class Not(Concept):
    arg: Concept

    def subconcepts(self):
        yield from self.arg.subconcepts()
        yield self

    def size(self):
        return 1 + self.arg.size()


@dataclass(frozen=True)
class And(Concept):
    left: Concept
    right: Concept

    def subconcepts(self):
        yield from self.left.subconcepts()
        yield from self.right.subconcepts()
        yield self

    def size(self):
        return 1 + self.left.size() + self.right.size()


@dataclass(frozen=True)
class Exists(Concept):
    role: Role
    arg: Concept

    def subconcepts(self):
        yield from self.arg.subconcepts()
        yield self

    def size(self):
        return 2 + (1 if self.role.inverted else 0) + self.arg.size()


# Abbreviations.  They expand into the four primitives, so rendering can
# recognise them again and re-parsing gives back an equal value.

BOT: Concept = And(Atomic(BOT_NAME), Not(Atomic(BOT_NAME)))
TOP: Concept = Not(BOT)


def Or(left: Concept, right: Concept) -> Concept:
    return Not(And(Not(left), Not(right)))


def Implies(left: Concept, right: Concept) -> Concept:
    return Or(Not(left), right)


def Forall(role: Role, arg: Concept) -> Concept:
    return Not(Exists(role, Not(arg)))


def conjunction(concepts: Iterable[Concept]) -> Concept:
    """Left-nested conjunction; the empty conjunction is top."""
    result = None
    for c in concepts:
        result = c if result is None else And(result, c)
    return TOP if result is None else result


def disjunction(concepts: Iterable[Concept]) -> Concept:
    """Left-nested disjunction; the empty disjunction is bot."""
    result = None
    for c in concepts:
        result = c if result is None else Or(result, c)
    return BOT if result is None else result


@dataclass(frozen=True)
class ConceptInclusion:
    lhs: Concept
    rhs: Concept

    def size(self) -> int:
        return self.lhs.size() + self.rhs.size() + 1


@dataclass(frozen=True)
class Ontology:
    inclusions: FrozenSet[ConceptInclusion] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "inclusions", frozenset(self.inclusions))

    def __iter__(self):
        return iter(sorted(self.inclusions, key=str))

    def __len__(self):
        return len(self.inclusions)

    def signature(self) -> Signature:
        sig = Signature()
        for ci in self.inclusions:
            sig = sig | ci.lhs.signature() | ci.rhs.signature()
        return sig

    def size(self) -> int:
        return sum(ci.size() for ci in self.inclusions)

    def with_inclusion(self, ci: ConceptInclusion) -> "Ontology":
        return Ontology(self.inclusions | {ci})


# ---------------------------------------------------------------- databases

UnaryAtom = Tuple[str, str]
BinaryAtom = Tuple[str, str, str]


@dataclass(frozen=True)
class Database:
    unary_atoms: FrozenSet[UnaryAtom] = frozenset()
    binary_atoms: FrozenSet[BinaryAtom] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "unary_atoms", frozenset(self.unary_atoms))
        object.__setattr__(self, "binary_atoms", frozenset(self.binary_atoms))

    @cached_property
    def constants(self) -> FrozenSet[str]:
        out = {c for _, c in self.unary_atoms}
        for _, c, d in self.binary_atoms:
            out.add(c)
            out.add(d)
        return frozenset(out)

    def signature(self) -> Signature:
        return Signature(frozenset(a for a, _ in self.unary_atoms),
                         frozenset(r for r, _, _ in self.binary_atoms))

    def __len__(self):
        return len(self.unary_atoms) + len(self.binary_atoms)

    def labels(self, c: str) -> FrozenSet[str]:
        return frozenset(a for a, d in self.unary_atoms if d == c)

    def neighbours(self, c: str) -> Iterator[Tuple[Role, str]]:
        """(role, d) for every role step from c to d in the database."""
        for r, x, y in sorted(self.binary_atoms):
            if x == c:
                yield Role(r), y
            if y == c:
                yield Role(r, True), x

    def union(self, other: "Database") -> "Database":
        return Database(self.unary_atoms | other.unary_atoms,
                        self.binary_atoms | other.binary_atoms)

    def rename(self, mapping: Mapping[str, str]) -> "Database":
        m = lambda c: mapping.get(c, c)
        return Database(frozenset((a, m(c)) for a, c in self.unary_atoms),
                        frozenset((r, m(c), m(d)) for r, c, d in self.binary_atoms))

    def restrict(self, constants: Iterable[str]) -> "Database":
        keep = frozenset(constants)
        return Database(frozenset(at for at in self.unary_atoms if at[1] in keep),
                        frozenset(at for at in self.binary_atoms
                                  if at[1] in keep and at[2] in keep))


@dataclass(frozen=True)
class KB:
    ontology: Ontology
    database: Database

    def signature(self) -> Signature:
        return self.ontology.signature() | self.database.signature()


@dataclass(frozen=True)
class LabeledKB:
    kb: KB
    positives: FrozenSet[str]
    negatives: FrozenSet[str]

    def __post_init__(self):
        object.__setattr__(self, "positives", frozenset(self.positives))
        object.__setattr__(self, "negatives", frozenset(self.negatives))
        if not self.positives:
            raise ValueError("positive examples must be non-empty")
        if not self.negatives:
            raise ValueError("negative examples must be non-empty")
        unknown = (self.positives | self.negatives) - self.kb.database.constants
        if unknown:
            raise ValueError(f"examples not in the database: {sorted(unknown)}")

    @property
    def ontology(self) -> Ontology:
        return self.kb.ontology

    @property
    def database(self) -> Database:
        return self.kb.database


# ---------------------------------------------------------------- structures

Element = Union[str, int, tuple]


@dataclass(frozen=True, eq=False)
class Structure:
    """Finite interpretation; constant_map need not be injective."""

    domain: FrozenSet[Element]
    unary_ext: Mapping[str, FrozenSet[Element]]
    binary_ext: Mapping[str, FrozenSet[Tuple[Element, Element]]]
    constant_map: Mapping[str, Element] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "domain", frozenset(self.domain))
        object.__setattr__(self, "unary_ext",
                           {k: frozenset(v) for k, v in self.unary_ext.items()})
        object.__setattr__(self, "binary_ext",
                           {k: frozenset(v) for k, v in self.binary_ext.items()})
        object.__setattr__(self, "constant_map", dict(self.constant_map))

    def concept_ext(self, name: str) -> FrozenSet[Element]:
        if name == BOT_NAME:
            return frozenset()
        return self.unary_ext.get(name, frozenset())

    def role_pairs(self, role: Role) -> FrozenSet[Tuple[Element, Element]]:
        pairs = self.binary_ext.get(role.name, frozenset())
        if role.inverted:
            return frozenset((e, d) for d, e in pairs)
        return pairs

    @cached_property
    def _succ(self) -> Dict[Role, Dict[Element, FrozenSet[Element]]]:
        table: Dict[Role, Dict[Element, set]] = {}
        for name, pairs in self.binary_ext.items():
            fw = table.setdefault(Role(name), {})
            bw = table.setdefault(Role(name, True), {})
            for d, e in pairs:
                fw.setdefault(d, set()).add(e)
                bw.setdefault(e, set()).add(d)
        return {r: {d: frozenset(s) for d, s in m.items()} for r, m in table.items()}

    def successors(self, d: Element, role: Role) -> FrozenSet[Element]:
        return self._succ.get(role, {}).get(d, frozenset())

    def roles(self) -> Tuple[Role, ...]:
        return tuple(sorted(self._succ))

    def labels(self, d: Element) -> FrozenSet[str]:
        return frozenset(a for a, ext in self.unary_ext.items() if d in ext)

    def extension(self, concept: Concept, _memo: Optional[dict] = None) -> FrozenSet[Element]:
        """The set of elements satisfying `concept`."""
        memo = {} if _memo is None else _memo
        if concept in memo:
            return memo[concept]
        if isinstance(concept, Atomic):
            out = self.concept_ext(concept.name) & self.domain
        elif isinstance(concept, Not):
            out = self.domain - self.extension(concept.arg, memo)
        elif isinstance(concept, And):
            out = self.extension(concept.left, memo) & self.extension(concept.right, memo)
        elif isinstance(concept, Exists):
            target = self.extension(concept.arg, memo)
            out = frozenset(d for d, e in self.role_pairs(concept.role) if e in target)
        else:
            raise TypeError(f"not a concept: {concept!r}")
        memo[concept] = out
        return out


def structure_of_database(d: Database, constants: Iterable[str] = ()) -> Structure:
    """The structure whose domain is cons(D) (plus any extra declared
    constants) and whose relations are exactly the atoms of `d`."""
    dom = set(d.constants) | set(constants)
    unary: Dict[str, set] = {}
    binary: Dict[str, set] = {}
    for a, c in d.unary_atoms:
        unary.setdefault(a, set()).add(c)
    for r, c, e in d.binary_atoms:
        binary.setdefault(r, set()).add((c, e))
    return Structure(frozenset(dom), unary, binary, {c: c for c in dom})


def check_model(s: Structure, k: KB) -> bool:
    """Whether `s` satisfies every inclusion of the ontology and every atom of
    the database under its constant map."""
    cmap = s.constant_map
    if not k.database.constants <= set(cmap):
        raise ValueError("constant map does not cover cons(D)")
    for a, c in k.database.unary_atoms:
        if cmap[c] not in s.concept_ext(a):
            return False
    for r, c, d in k.database.binary_atoms:
        if (cmap[c], cmap[d]) not in s.binary_ext.get(r, ()):
            return False
    memo: dict = {}
    for ci in k.ontology.inclusions:
        if not s.extension(ci.lhs, memo) <= s.extension(ci.rhs, memo):
            return False
    return True


# ---------------------------------------------------------------- queries

@dataclass(frozen=True)
class CQ:
    answer_vars: Tuple[str, ...]
    unary_atoms: FrozenSet[UnaryAtom] = frozenset()
    binary_atoms: FrozenSet[BinaryAtom] = frozenset()
    equalities: FrozenSet[Tuple[str, str]] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "answer_vars", tuple(self.answer_vars))
        object.__setattr__(self, "unary_atoms", frozenset(self.unary_atoms))
        object.__setattr__(self, "binary_atoms", frozenset(self.binary_atoms))
        object.__setattr__(self, "equalities",
                           frozenset(tuple(sorted(p)) for p in self.equalities))
        for x, y in self.equalities:
            if x not in self.answer_vars or y not in self.answer_vars:
                raise ValueError(f"equality {x}={y} between non-answer variables")

    @property
    def variables(self) -> FrozenSet[str]:
        out = set(self.answer_vars)
        out.update(v for _, v in self.unary_atoms)
        for _, v, w in self.binary_atoms:
            out.update((v, w))
        return frozenset(out)

    @property
    def existential_vars(self) -> FrozenSet[str]:
        return self.variables - set(self.answer_vars)

    def as_database(self) -> Database:
        return Database(self.unary_atoms, self.binary_atoms)

    def gaifman_distances(self) -> Dict[str, int]:
        """Breadth-first distance of each variable from the answer variables."""
        adj: Dict[str, set] = {v: set() for v in self.variables}
        for _, v, w in self.binary_atoms:
            adj[v].add(w)
            adj[w].add(v)
        for v, w in self.equalities:
            adj[v].add(w)
            adj[w].add(v)
        dist = {v: 0 for v in self.answer_vars}
        frontier = list(self.answer_vars)
        while frontier:
            nxt = []
            for v in frontier:
                for w in adj[v]:
                    if w not in dist:
                        dist[w] = dist[v] + 1
                        nxt.append(w)
            frontier = nxt
        return dist

    def is_rooted(self) -> bool:
        return len(self.gaifman_distances()) == len(self.variables)

    def radius(self) -> int:
        return max(self.gaifman_distances().values(), default=0)

    def size(self) -> int:
        return len(self.unary_atoms) + len(self.binary_atoms) + len(self.equalities)


@dataclass(frozen=True)
class UCQ:
    disjuncts: Tuple[CQ, ...]

    def __post_init__(self):
        object.__setattr__(self, "disjuncts", tuple(self.disjuncts))
        if not self.disjuncts:
            raise ValueError("a UCQ needs at least one disjunct")
        heads = {q.answer_vars for q in self.disjuncts}
        if len(heads) != 1:
            raise ValueError("all disjuncts must share the answer variables")

    @property
    def answer_vars(self) -> Tuple[str, ...]:
        return self.disjuncts[0].answer_vars

    def is_rooted(self) -> bool:
        return all(q.is_rooted() for q in self.disjuncts)

    def radius(self) -> int:
        return max(q.radius() for q in self.disjuncts)


def concept_to_fo(c: Concept) -> str:
    """Render the first-order translation of `c` with free variable x,
    alternating x and y for bound variables."""

    def tr(c: Concept, v: str) -> str:
        w = "y" if v == "x" else "x"
        if isinstance(c, Atomic):
            return f"{c.name}({v})"
        if isinstance(c, Not):
            return f"¬{tr(c.arg, v)}"
        if isinstance(c, And):
            return f"({tr(c.left, v)} ∧ {tr(c.right, v)})"
        if isinstance(c, Exists):
            edge = f"{c.role.name}({w},{v})" if c.role.inverted else f"{c.role.name}({v},{w})"
            return f"∃{w}({edge} ∧ {tr(c.arg, w)})"
        raise TypeError(f"not a concept: {c!r}")

    return tr(c, "x")
