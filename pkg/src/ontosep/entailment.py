"""Certain answers of rooted UCQs over ALCI knowledge bases.

A UCQ with one answer variable fails to be entailed at b iff some forest
model of the KB admits no match sending the answer variable to b.  Only
the part of the forest within distance m of b matters, m being the
largest eccentricity of the answer variable in a disjunct.  So the search
fixes types for the constants near b, grows witness trees out to the
horizon, and checks after every step that no disjunct matches yet.  A
partial forest is a substructure of every completion of it, so a match
found early prunes the branch for good.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Collection, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .graphs import components, find_homomorphism, gaifman_distances, ucq_matches
from .model import (KB, UCQ, Concept, Database, Element, Role, Structure, check_model,
                    structure_of_database)
from .reasoner import KType, Reasoner, ResourceLimit, entails_concept, kb_reasoner

DEFAULT_MAX_NODES = 200_000


class _Forest:
    """Mutable partial forest; quacks like a Structure for the hom engine."""

    def __init__(self, reasoner: Reasoner):
        self.reasoner = reasoner
        self.domain: Set[Element] = set()
        self.types: Dict[Element, int] = {}
        self._ext: Dict[str, Set[Element]] = {}
        self._succ: Dict[Tuple[Element, Role], Set[Element]] = {}

    def add(self, e: Element, t: int):
        self.domain.add(e)
        self.types[e] = t
        for a in self.reasoner.closure.labels(t):
            self._ext.setdefault(a, set()).add(e)

    def remove(self, e: Element):
        self.domain.discard(e)
        for a in self.reasoner.closure.labels(self.types.pop(e)):
            self._ext[a].discard(e)

    def link(self, d: Element, role: Role, e: Element):
        self._succ.setdefault((d, role), set()).add(e)
        self._succ.setdefault((e, role.inv()), set()).add(d)

    def unlink(self, d: Element, role: Role, e: Element):
        self._succ[(d, role)].discard(e)
        self._succ[(e, role.inv())].discard(d)

    def concept_ext(self, name: str):
        return self._ext.get(name, ())

    def successors(self, d: Element, role: Role):
        return self._succ.get((d, role), ())

    def match_image(self, q: UCQ, b: str) -> Optional[Set[Element]]:
        """Elements hit by some match of q with the answer variable at b."""
        for cq in q.disjuncts:
            h = find_homomorphism(cq.unary_atoms, cq.binary_atoms, self,
                                  {cq.answer_vars[0]: b}, cq.variables)
            if h is not None:
                return set(h.values())
        return None


@dataclass
class ForestCountermodel:
    """Constant types plus finite witness trees up to the depth bound.

    Tree nodes are tuples (constant, i1, ..., ik) naming the path from their
    root; `trees` maps each node to the role of its incoming edge and its
    type.
    """

    reasoner: Reasoner = field(repr=False)
    database: Database
    skeleton: Dict[str, KType]
    trees: Dict[tuple, Tuple[Role, KType]]
    depth_bound: int

    def _witnesses(self, types: Dict[Element, int], succ) -> Dict[Element, List[Tuple[Role, int]]]:
        """Type-graph attachments needed by elements whose existentials are
        not yet witnessed inside the forest."""
        r = self.reasoner
        need: Dict[Element, List[Tuple[Role, int]]] = {}
        for e, t in types.items():
            for i, role, lit in r.closure.existentials:
                if not (t >> i) & 1:
                    continue
                if any(lit.holds(types[n]) for n in succ.get((e, role), ())):
                    continue
                u = next(u for u in r.types if r.coherent(t, role, u) and lit.holds(u))
                need.setdefault(e, []).append((role, u))
        return need

    def to_structure(self) -> Structure:
        """A finite model of the KB containing the forest unchanged within
        the depth bound: unmet existentials are attached to a finite type
        graph whose elements are types joined by every coherent edge."""
        r = self.reasoner
        types: Dict[Element, int] = {c: t.bits for c, t in self.skeleton.items()}
        edges: Set[Tuple[str, Element, Element]] = set(self.database.binary_atoms)
        for node, (role, t) in self.trees.items():
            types[node] = t.bits
            parent = node[:-1] if len(node) > 2 else node[0]
            edges.add((role.name, node, parent) if role.inverted else (role.name, parent, node))
        succ: Dict[Tuple[Element, Role], Set[Element]] = {}
        for name, d, e in edges:
            succ.setdefault((d, Role(name)), set()).add(e)
            succ.setdefault((e, Role(name, True)), set()).add(d)
        need = self._witnesses(types, succ)
        # close the attached types under witness selection
        chosen: Set[int] = {u for lst in need.values() for _, u in lst}
        frontier = list(chosen)
        while frontier:
            t = frontier.pop()
            for i, role, lit in r.closure.existentials:
                if (t >> i) & 1 and not any(r.coherent(t, role, u) and lit.holds(u) for u in chosen):
                    u = next(u for u in r.types if r.coherent(t, role, u) and lit.holds(u))
                    chosen.add(u)
                    frontier.append(u)
        tg = {u: ("#", u) for u in chosen}
        for u in chosen:
            types[tg[u]] = u
        for u in chosen:
            for v in chosen:
                for name in r.closure.role_names:
                    if r.coherent(u, Role(name), v):
                        edges.add((name, tg[u], tg[v]))
        for e, lst in need.items():
            for role, u in lst:
                edges.add((role.name, tg[u], e) if role.inverted else (role.name, e, tg[u]))
        unary: Dict[str, Set[Element]] = {}
        for e, t in types.items():
            for a in r.closure.labels(t):
                unary.setdefault(a, set()).add(e)
        binary: Dict[str, Set[Tuple[Element, Element]]] = {}
        for name, d, e in edges:
            binary.setdefault(name, set()).add((d, e))
        return Structure(frozenset(types), unary, binary, {c: c for c in self.skeleton})

    def sketch(self) -> dict:
        """JSON-friendly summary for reports."""
        return {
            "depth_bound": self.depth_bound,
            "constants": {c: t.literals() for c, t in sorted(self.skeleton.items())},
            "tree_nodes": len(self.trees),
        }


class _Search:
    """Depth-first search with conflict-directed backjumping.

    Decisions are the type of each near constant (keyed by the constant)
    and the type of the child witnessing existential i of node e (keyed by
    ("wit", e, i)).  A
    failed branch reports the decisions it depended on; since matches
    persist when the structure grows, a decision absent from that set
    cannot help and its remaining alternatives are skipped.
    """

    def __init__(self, reasoner: Reasoner, db: Database, q: UCQ, b: str,
                 allowed: Optional[Dict[str, Collection[int]]], max_nodes: int):
        self.r = reasoner
        self.db = db
        self.q = q
        self.b = b
        self.allowed = allowed
        self.max_nodes = max_nodes
        self.created = 0
        self.forest = _Forest(reasoner)
        self.m = q.radius()
        comp = next(c for c in components(db) if b in c)
        self.component = comp
        dist = gaifman_distances(db, [b])
        self.dist = dist
        self.near = sorted((c for c in comp if dist[c] <= self.m), key=lambda c: (dist[c], c))
        near = set(self.near)
        self.adj: Dict[str, List[Tuple[Role, str]]] = {c: [] for c in near}
        for r, x, y in db.binary_atoms:
            if x in near and y in near:
                self.adj[x].append((Role(r), y))
                if x != y:
                    self.adj[y].append((Role(r, True), x))
        self.tree: Dict[tuple, Tuple[Role, int]] = {}
        self.result: Optional[Dict[str, int]] = None

    def _tick(self, n=1):
        self.created += n
        if self.created > self.max_nodes:
            raise ResourceLimit(f"countermodel search exceeded {self.max_nodes} nodes")

    @staticmethod
    def _chain(e: Element) -> Set:
        """Decisions that make element e exist with its current type."""
        if not isinstance(e, tuple):
            return {e}
        out = {e[0], ("wit", e[0], e[1])}
        for k in range(2, len(e)):
            out.add(("wit", e[:k], e[k]))
        return out

    def _match_conflict(self) -> Optional[FrozenSet]:
        image = self.forest.match_image(self.q, self.b)
        if image is None:
            return None
        out: Set = set()
        for e in image:
            out |= self._chain(e)
        return frozenset(out)

    # -- constants

    def run(self) -> bool:
        self.doms = self.r.domains(self.db, self.allowed, self.near)
        return self._assign(0, {}) is True

    def _assign(self, i: int, assign: Dict[str, int]):
        if i == len(self.near):
            pins = dict(self.allowed or {})
            pins.update({c: [t] for c, t in assign.items()})
            full = self.r.solve(self.db, pins, self.component)
            if full is None:
                return frozenset(self.near)
            queue = [("node", c, self.m - self.dist[c]) for c in self.near
                     if self.m - self.dist[c] > 0]
            res = self._expand(queue)
            if res is True:
                self.result = full
            return res
        c = self.near[i]
        f = self.forest
        arcs = [(role, d) for role, d in self.adj[c] if d in assign or d == c]
        conflict: Set = {d for _, d in arcs if d != c}
        for t in self.doms[c]:
            if not all(self.r.coherent(t, role, t if d == c else assign[d]) for role, d in arcs):
                continue
            self._tick()
            f.add(c, t)
            for role, d in arcs:
                f.link(c, role, d)
            assign[c] = t
            res = self._match_conflict()
            if res is None:
                res = self._assign(i + 1, assign)
            del assign[c]
            for role, d in arcs:
                f.unlink(c, role, d)
            f.remove(c)
            if res is True:
                return True
            if c not in res:
                return res
            conflict |= res - {c}
        return frozenset(conflict)

    # -- witness trees

    def _unmet(self, e: Element) -> List[Tuple[int, Role, object]]:
        f = self.forest
        t = f.types[e]
        out = []
        for i, role, lit in self.r.closure.existentials:
            if (t >> i) & 1 and not any(lit.holds(f.types[n]) for n in f.successors(e, role)):
                out.append((i, role, lit))
        return out

    def _expand(self, queue: List[tuple]):
        """Work through the queue depth first.  Items are ("node", e, depth
        left), which schedules one witness decision per unmet existential of
        e, and ("wit", e, i, role, lit, depth left), which picks the type of
        the child witnessing existential i.  Sharing one child between two
        existentials never helps: two copies of it admit no match the
        shared child lacks."""
        if not queue:
            return True
        item, rest = queue[0], queue[1:]
        if item[0] == "node":
            _, e, remaining = item
            tasks = [("wit", e, i, role, lit, remaining) for i, role, lit in self._unmet(e)]
            return self._expand(tasks + rest)
        _, e, i, role, lit, remaining = item
        f = self.forest
        me = ("wit", e, i)
        node = (e if isinstance(e, tuple) else (e,)) + (i,)
        conflict: Set = set(self._chain(e))
        if not isinstance(e, tuple):
            # another type of a database neighbour along this role might
            # have witnessed the existential
            conflict |= {d for r2, d in self.adj[e] if r2 == role}
        t = f.types[e]
        for u in self.r.types:
            if not (lit.holds(u) and self.r.coherent(t, role, u)):
                continue
            self._tick()
            f.add(node, u)
            f.link(e, role, node)
            self.tree[node] = (role, u)
            res = self._match_conflict()
            if res is None:
                more = [("node", node, remaining - 1)] if remaining > 1 else []
                res = self._expand(more + rest)
            if res is True:
                return True
            f.unlink(e, role, node)
            f.remove(node)
            del self.tree[node]
            if me not in res:
                return res
            conflict |= res - {me}
        return frozenset(conflict)


def find_countermodel(reasoner: Reasoner, db: Database, q: UCQ, b: str,
                      allowed_at_b: Optional[Collection[int]] = None,
                      max_nodes: int = DEFAULT_MAX_NODES) -> Optional[ForestCountermodel]:
    """A forest model with no match of q at b, or None if q is entailed.

    `allowed_at_b` restricts the type of b, which is how KBs extended by a
    fresh name pinned to one type are handled without building them.
    """
    if len(q.answer_vars) != 1 or not q.is_rooted():
        raise ValueError("only rooted UCQs with a single answer variable are supported")
    if b not in db.constants:
        raise KeyError(f"unknown constant {b!r}")
    allowed = None if allowed_at_b is None else {b: list(allowed_at_b)}
    rest: Dict[str, int] = {}
    for comp in components(db):
        if b in comp:
            continue
        sol = reasoner.solve(db, None, comp)
        if sol is None:
            return None
        rest.update(sol)
    if ucq_matches(q, structure_of_database(db), (b,)):
        return None
    search = _Search(reasoner, db, q, b, allowed, max_nodes)
    if not search.run():
        return None
    full = dict(rest)
    full.update(search.result)
    return ForestCountermodel(
        reasoner, db,
        {c: reasoner.ktype(t) for c, t in full.items()},
        {n: (role, reasoner.ktype(u)) for n, (role, u) in search.tree.items()},
        search.m)


def ucq_entailed(k: KB, q: UCQ, b: str, max_nodes: int = DEFAULT_MAX_NODES) -> bool:
    """Whether every model of k matches q with the answer variable at b."""
    return find_countermodel(kb_reasoner(k), k.database, q, b, max_nodes=max_nodes) is None


def countermodel(k: KB, q: UCQ, b: str, max_nodes: int = DEFAULT_MAX_NODES) -> Optional[ForestCountermodel]:
    return find_countermodel(kb_reasoner(k), k.database, q, b, max_nodes=max_nodes)


def verify_weak_separator(k: KB, q: UCQ, positives: Iterable[str], negatives: Iterable[str],
                          max_nodes: int = DEFAULT_MAX_NODES) -> bool:
    return (all(ucq_entailed(k, q, a, max_nodes) for a in sorted(positives))
            and not any(ucq_entailed(k, q, b, max_nodes) for b in sorted(negatives)))


def verify_weak_concept(k: KB, c: Concept, positives: Iterable[str], negatives: Iterable[str]) -> bool:
    return (all(entails_concept(k, c, a) for a in sorted(positives))
            and not any(entails_concept(k, c, b) for b in sorted(negatives)))


def verify_strong_concept(k: KB, c: Concept, positives: Iterable[str], negatives: Iterable[str]) -> bool:
    from .model import Not
    return (all(entails_concept(k, c, a) for a in sorted(positives))
            and all(entails_concept(k, Not(c), b) for b in sorted(negatives)))


def countermodel_is_valid(k: KB, cm: ForestCountermodel, q: UCQ, b: str) -> bool:
    """Completed structure is a model of k without a match of q at b."""
    s = cm.to_structure()
    return check_model(s, k) and not ucq_matches(q, s, (s.constant_map[b],))
