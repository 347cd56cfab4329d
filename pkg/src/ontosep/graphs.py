"""Graph operations on databases and finite structures: Gaifman
reachability, canonical queries, database merging, homomorphisms,
bisimulations and ALCI(Σ)-embeddings."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Set, Tuple

from .model import CQ, UCQ, Database, Element, Role, Signature, Structure


@dataclass(frozen=True)
class PointedDatabase:
    database: Database
    point: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(self.point))
        missing = set(self.point) - self.database.constants
        if missing:
            raise ValueError(f"point constants not in the database: {sorted(missing)}")


@dataclass(frozen=True)
class PointedStructure:
    structure: Structure
    point: Tuple[Element, ...]

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(self.point))
        if not set(self.point) <= self.structure.domain:
            raise ValueError("point elements not in the domain")


def _require(d: Database, *constants: str):
    for c in constants:
        if c not in d.constants:
            raise KeyError(f"unknown constant {c!r}")


def gaifman_distances(d: Database, sources: Iterable[str]) -> Dict[str, int]:
    adj: Dict[str, Set[str]] = {c: set() for c in d.constants}
    for _, c, e in d.binary_atoms:
        adj[c].add(e)
        adj[e].add(c)
    dist = {c: 0 for c in sources}
    queue = deque(dist)
    while queue:
        c = queue.popleft()
        for e in adj[c]:
            if e not in dist:
                dist[e] = dist[c] + 1
                queue.append(e)
    return dist


def connected_restriction(d: Database, a: str) -> Database:
    """The sub-database induced by the constants Gaifman-reachable from `a`."""
    _require(d, a)
    return d.restrict(gaifman_distances(d, [a]))


def components(d: Database) -> List[FrozenSet[str]]:
    seen: Set[str] = set()
    out = []
    for c in sorted(d.constants):
        if c not in seen:
            comp = frozenset(gaifman_distances(d, [c]))
            seen |= comp
            out.append(comp)
    return out


def canonical_cq(d: Database, *point: str) -> CQ:
    """The database read as a CQ whose answer variables stand for `point`.

    Answer variables are x (or x1..xn for longer points); the remaining
    constants become y (or y1..yk in sorted constant order).  Repeated point
    constants yield equalities between answer variables.
    """
    if not point:
        raise ValueError("canonical_cq needs at least one point constant")
    _require(d, *point)
    head = ("x",) if len(point) == 1 else tuple(f"x{i + 1}" for i in range(len(point)))
    var: Dict[str, str] = {}
    eqs = set()
    for i, c in enumerate(point):
        if c in var:
            eqs.add((var[c], head[i]))
        else:
            var[c] = head[i]
    rest = sorted(d.constants - set(point))
    for i, c in enumerate(rest):
        var[c] = "y" if len(rest) == 1 else f"y{i + 1}"
    return CQ(head,
              frozenset((a, var[c]) for a, c in d.unary_atoms),
              frozenset((r, var[c], var[e]) for r, c, e in d.binary_atoms),
              frozenset(eqs))


def canonical_ucq(d: Database, positives: Iterable[str]) -> UCQ:
    """The union over positives a of the canonical CQ of D_con(a), a."""
    return UCQ(tuple(canonical_cq(connected_restriction(d, a), a) for a in sorted(positives)))


def _primed(c: str, taken: Set[str]) -> str:
    name = c + "'"
    while name in taken:
        name += "'"
    return name


def merge_databases(d: Database, a, b) -> Database:
    """D union a disjoint primed copy D', with the copy of b identified with a.

    `a` and `b` are single constants or equal-length tuples.
    """
    a_tup = (a,) if isinstance(a, str) else tuple(a)
    b_tup = (b,) if isinstance(b, str) else tuple(b)
    if len(a_tup) != len(b_tup):
        raise ValueError("merge needs tuples of equal length")
    _require(d, *a_tup, *b_tup)
    taken = set(d.constants)
    copy: Dict[str, str] = {}
    for c in sorted(d.constants):
        copy[c] = _primed(c, taken)
        taken.add(copy[c])
    ident = {}
    for x, y in zip(a_tup, b_tup):
        ident[copy[y]] = x
    renaming = {c: ident.get(p, p) for c, p in copy.items()}
    return d.union(d.rename(renaming))


# ---------------------------------------------------------------- homomorphisms

def find_homomorphism(unary: Iterable[Tuple[str, Hashable]],
                      binary: Iterable[Tuple[str, Hashable, Hashable]],
                      target: Structure,
                      fixed: Mapping[Hashable, Element],
                      variables: Iterable[Hashable] = ()) -> Optional[Dict[Hashable, Element]]:
    """Backtracking search for a map from the variables of the atoms into
    `target` that preserves all atoms and extends `fixed`.

    Variables are bound most-constrained first: the next variable is one
    adjacent to the most bound variables, preferring small candidate sets.
    """
    labels: Dict[Hashable, Set[str]] = {}
    edges: Dict[Hashable, List[Tuple[Role, Hashable]]] = {}
    for v in variables:
        labels.setdefault(v, set())
        edges.setdefault(v, [])
    for a, v in unary:
        labels.setdefault(v, set()).add(a)
        edges.setdefault(v, [])
    for r, v, w in binary:
        labels.setdefault(v, set())
        labels.setdefault(w, set())
        edges.setdefault(v, []).append((Role(r), w))
        edges.setdefault(w, []).append((Role(r, True), v))
    for v in fixed:
        labels.setdefault(v, set())
        edges.setdefault(v, [])

    ext = target.concept_ext
    dom = target.domain

    def label_ok(v, e) -> bool:
        return all(e in ext(a) for a in labels[v])

    def consistent(v, e, assign) -> bool:
        if not label_ok(v, e):
            return False
        for role, w in edges[v]:
            if w in assign and assign[w] not in target.successors(e, role):
                return False
            if w == v and e not in target.successors(e, role):
                return False
        return True

    assign: Dict[Hashable, Element] = {}
    for v, e in fixed.items():
        if e not in dom or not consistent(v, e, assign):
            return None
        assign[v] = e

    free = [v for v in labels if v not in assign]
    # candidate pools for unanchored variables, filtered by labels
    pools = {v: [e for e in sorted(dom, key=repr) if label_ok(v, e)] for v in free}
    if any(not pools[v] for v in free):
        return None

    def candidates(v):
        for role, w in edges[v]:
            if w in assign:
                # inverse step from the bound neighbour
                return [e for e in target.successors(assign[w], role.inv())]
        return pools[v]

    def pick():
        best, best_key = None, None
        for v in free:
            if v in assign:
                continue
            bound = sum(1 for _, w in edges[v] if w in assign)
            key = (-bound, len(candidates(v)) if bound else len(pools[v]))
            if best_key is None or key < best_key:
                best, best_key = v, key
        return best

    def search() -> bool:
        v = pick()
        if v is None:
            return True
        for e in sorted(candidates(v), key=repr):
            if consistent(v, e, assign):
                assign[v] = e
                if search():
                    return True
                del assign[v]
        return False

    return dict(assign) if search() else None


def hom_exists(p: PointedDatabase, s: PointedStructure) -> bool:
    """Whether the database maps homomorphically into the structure with the
    point sent to the point; other constants are unconstrained."""
    if len(p.point) != len(s.point):
        raise ValueError("points of different length")
    fixed: Dict[str, Element] = {}
    for c, e in zip(p.point, s.point):
        if fixed.get(c, e) != e:
            return False
        fixed[c] = e
    db = p.database
    return find_homomorphism(db.unary_atoms, db.binary_atoms, s.structure, fixed,
                             db.constants) is not None


def cq_matches(q: CQ, s: Structure, answer: Tuple[Element, ...]) -> bool:
    """Whether `s` satisfies q at the answer tuple."""
    if len(answer) != len(q.answer_vars):
        raise ValueError("answer tuple of wrong length")
    fixed: Dict[str, Element] = {}
    for v, e in zip(q.answer_vars, answer):
        if fixed.get(v, e) != e:
            return False
        fixed[v] = e
    for x, y in q.equalities:
        if fixed[x] != fixed[y]:
            return False
    return find_homomorphism(q.unary_atoms, q.binary_atoms, s, fixed, q.variables) is not None


def ucq_matches(q: UCQ, s: Structure, answer: Tuple[Element, ...]) -> bool:
    return any(cq_matches(d, s, answer) for d in q.disjuncts)


# ---------------------------------------------------------------- bisimulation

def bisimulation_classes(s: Structure, sigma: Signature) -> Dict[Element, int]:
    """Coarsest Σ-bisimulation on `s` by partition refinement; maps each
    element to a block id."""
    roles = [Role(r) for r in sorted(sigma.role_names)]
    roles += [r.inv() for r in roles]
    names = sorted(sigma.concept_names)
    block = {}
    keys: Dict[tuple, int] = {}
    for d in s.domain:
        key = tuple(d in s.concept_ext(a) for a in names)
        block[d] = keys.setdefault(key, len(keys))
    while True:
        keys = {}
        new = {}
        for d in s.domain:
            key = (block[d],) + tuple(frozenset(block[e] for e in s.successors(d, r))
                                      for r in roles)
            new[d] = keys.setdefault(key, len(keys))
        if len(keys) == len(set(block.values())):
            return new
        block = new


def _disjoint_union(s1: Structure, s2: Structure) -> Structure:
    tag = lambda i, xs: frozenset((i, x) for x in xs)
    unary = {}
    for i, s in ((1, s1), (2, s2)):
        for a, ext in s.unary_ext.items():
            unary[a] = unary.get(a, frozenset()) | tag(i, ext)
    binary = {}
    for i, s in ((1, s1), (2, s2)):
        for r, pairs in s.binary_ext.items():
            binary[r] = binary.get(r, frozenset()) | frozenset(((i, d), (i, e)) for d, e in pairs)
    return Structure(tag(1, s1.domain) | tag(2, s2.domain), unary, binary, {})


def bisimilar(s1: PointedStructure, s2: PointedStructure, sigma: Signature) -> bool:
    """Whether the points are related by some Σ-bisimulation."""
    if len(s1.point) != 1 or len(s2.point) != 1:
        raise ValueError("bisimilarity is defined for single points")
    u = _disjoint_union(s1.structure, s2.structure)
    blocks = bisimulation_classes(u, sigma)
    return blocks[(1, s1.point[0])] == blocks[(2, s2.point[0])]


def embedding_exists(d: Database, a: str, s: PointedStructure, sigma: Signature) -> bool:
    """Whether an ALCI(Σ)-embedding of D_con(a) into `s` relates a to the point.

    Bisimilar elements are interchangeable under (atom), (bisim) and
    (forth), so an embedding exists iff D_con(a) maps homomorphically into
    the quotient of `s` by Σ-bisimilarity; the quotient is computed by
    partition refinement and searched with the homomorphism engine.
    """
    _require(d, a)
    if len(s.point) != 1:
        raise ValueError("embeddings are defined for single points")
    dc = connected_restriction(d, a)
    dsig = dc.signature()
    outside = (dsig.concept_names - sigma.concept_names) | (dsig.role_names - sigma.role_names)
    if outside:
        raise ValueError(f"database symbols outside sigma: {sorted(outside)}")
    st = s.structure
    blocks = bisimulation_classes(st, sigma)
    unary: Dict[str, set] = {}
    for name in sigma.concept_names:
        unary[name] = {blocks[e] for e in st.concept_ext(name) & st.domain}
    binary: Dict[str, set] = {}
    for r, pairs in st.binary_ext.items():
        binary[r] = {(blocks[x], blocks[y]) for x, y in pairs}
    quotient = Structure(frozenset(blocks.values()), unary, binary, {})
    return find_homomorphism(dc.unary_atoms, dc.binary_atoms, quotient,
                             {a: blocks[s.point[0]]}, dc.constants) is not None
