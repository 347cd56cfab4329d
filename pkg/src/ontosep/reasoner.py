"""Type-based reasoning for ALCI knowledge bases.

Types are bitsets over an indexed closure.  Only non-negated concepts get
an index; ``not C`` is in a type exactly when the bit of ``C`` is clear,
which makes "exactly one of C / not C" hold by construction.

The realizable types of an ontology are computed by type elimination with
a two-sided coherence test between neighbouring types.  KB satisfiability
is a constraint problem assigning realizable types to constants.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import (Collection, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence,
                    Tuple)

import numpy as np

from .graphs import components, merge_databases
from .model import (BOT_NAME, KB, TOP, And, Atomic, Concept, Database, Exists, LabeledKB, Not,
                    Ontology, Role, Signature, conjunction)


# Above this many types (or 63 closure bits) coherence is computed pairwise
# in Python instead of as a numpy matrix.
_MATRIX_LIMIT = 4096


class ResourceLimit(RuntimeError):
    """A configured size or search budget was exceeded."""


@dataclass(frozen=True)
class Literal:
    index: int
    positive: bool

    def holds(self, bits: int) -> bool:
        return ((bits >> self.index) & 1) == self.positive


class Closure:
    """Indexed closure: the concepts of the ontology (plus extras), the
    concept names of the signature, and exists R.top / exists inv(R).top for
    every role name, closed under subconcepts.  Members are stored
    without their outer negation."""

    def __init__(self, concepts: Iterable[Concept], signature: Signature):
        seeds = list(concepts)
        seeds += [Atomic(a) for a in sorted(signature.concept_names)]
        for r in sorted(signature.role_names):
            seeds += [Exists(Role(r), TOP), Exists(Role(r, True), TOP)]
        members: List[Concept] = []
        index: Dict[Concept, int] = {}
        for seed in seeds:
            for c in seed.subconcepts():
                if not isinstance(c, Not) and c not in index:
                    index[c] = len(members)
                    members.append(c)
        self.concepts: Tuple[Concept, ...] = tuple(members)
        self.index = index
        self.signature = signature
        self.role_names = tuple(sorted(signature.role_names
                                       | {c.role.name for c in members if isinstance(c, Exists)}))
        self.roles: Tuple[Role, ...] = tuple(Role(r) for r in self.role_names) + \
            tuple(Role(r, True) for r in self.role_names)
        self.existentials: List[Tuple[int, Role, Literal]] = [
            (i, c.role, self.literal(c.arg)) for i, c in enumerate(members) if isinstance(c, Exists)]
        self.names: List[Tuple[int, str]] = [
            (i, c.name) for i, c in enumerate(members) if isinstance(c, Atomic) and c.name != BOT_NAME]
        self.top_exists = {c.role: i for i, c in enumerate(members)
                           if isinstance(c, Exists) and c.arg == TOP}

    def __len__(self):
        return len(self.concepts)

    def literal(self, c: Concept) -> Literal:
        positive = True
        while isinstance(c, Not):
            c = c.arg
            positive = not positive
        return Literal(self.index[c], positive)

    def __contains__(self, c: Concept) -> bool:
        while isinstance(c, Not):
            c = c.arg
        return c in self.index

    # -- Hintikka sets

    def hintikka_sets(self, limit: Optional[int] = None) -> List[int]:
        """All locally consistent bitsets.  Concept names and existentials are
        free; conjunctions are determined by their conjuncts; the reserved
        bottom name is always false."""
        free = [i for i, c in enumerate(self.concepts)
                if isinstance(c, Exists) or (isinstance(c, Atomic) and c.name != BOT_NAME)]
        if limit is not None and len(free) > limit:
            raise ResourceLimit(f"closure has {len(free)} free concepts (limit {limit})")
        ands = [(i, self.literal(c.left), self.literal(c.right))
                for i, c in enumerate(self.concepts) if isinstance(c, And)]
        out = []
        for combo in range(1 << len(free)):
            bits = 0
            for j, i in enumerate(free):
                if (combo >> j) & 1:
                    bits |= 1 << i
            for i, left, right in ands:
                if left.holds(bits) and right.holds(bits):
                    bits |= 1 << i
            out.append(bits)
        return out

    def up_mask(self, bits: int, role: Role) -> int:
        """Existentials exists role.D whose filler D holds in `bits`: an
        element with an outgoing `role` edge to a `bits`-element must
        contain all of them."""
        mask = 0
        for i, r, lit in self.existentials:
            if r == role and lit.holds(bits):
                mask |= 1 << i
        return mask

    def coherent(self, t1: int, role: Role, t2: int) -> bool:
        """Whether t1 and t2 may sit at the two ends of a `role` edge."""
        return (self.up_mask(t2, role) & ~t1) == 0 and (self.up_mask(t1, role.inv()) & ~t2) == 0

    def members(self, bits: int) -> List[Concept]:
        """The concepts of the type, negated ones included."""
        return [c if (bits >> i) & 1 else Not(c) for i, c in enumerate(self.concepts)]

    def labels(self, bits: int) -> FrozenSet[str]:
        return frozenset(name for i, name in self.names if (bits >> i) & 1)

    def type_concept(self, bits: int) -> Concept:
        """Conjunction of the concept-name and existential literals of the
        type.  It pins the type exactly: every other member is a Boolean
        combination of these."""
        lits = []
        for i, c in enumerate(self.concepts):
            if isinstance(c, Atomic) and c.name == BOT_NAME:
                continue
            if isinstance(c, (Atomic, Exists)):
                lits.append(c if (bits >> i) & 1 else Not(c))
        return conjunction(lits)


@dataclass(frozen=True)
class KType:
    """A realizable type: bitset over a closure."""

    bits: int
    closure: Closure = field(compare=False, hash=False, repr=False)

    def __contains__(self, c: Concept) -> bool:
        lit = self.closure.literal(c)
        return lit.holds(self.bits)

    def concepts(self) -> List[Concept]:
        return self.closure.members(self.bits)

    def labels(self) -> FrozenSet[str]:
        return self.closure.labels(self.bits)

    def as_concept(self) -> Concept:
        return self.closure.type_concept(self.bits)

    def literals(self) -> List[str]:
        from .syntax import render_concept
        out = []
        for i, c in enumerate(self.closure.concepts):
            if isinstance(c, (Atomic, Exists)) and not (isinstance(c, Atomic) and c.name == BOT_NAME):
                text = render_concept(c)
                out.append(text if (self.bits >> i) & 1 else f"not {text}")
        return out


@dataclass(frozen=True)
class CoherenceGraph:
    nodes: FrozenSet[KType]
    edges: FrozenSet[Tuple[KType, Role, KType]]


class Reasoner:
    """Realizable types and coherence for one ontology over one closure."""

    def __init__(self, ontology: Ontology, signature: Signature,
                 extra: Sequence[Concept] = (), max_closure: Optional[int] = None):
        self.ontology = ontology
        seeds = []
        for ci in ontology:
            seeds += [ci.lhs, ci.rhs]
        seeds += list(extra)
        sig = signature | ontology.signature()
        for c in extra:
            sig = sig | c.signature()
        self.closure = cl = Closure(seeds, sig)
        cis = [(cl.literal(ci.lhs), cl.literal(ci.rhs)) for ci in ontology]
        candidates = [t for t in cl.hintikka_sets(max_closure)
                      if all(not lhs.holds(t) or rhs.holds(t) for lhs, rhs in cis)]
        self._up: Dict[Tuple[int, Role], int] = {}
        self.types: Tuple[int, ...] = tuple(sorted(self._eliminate(candidates)))
        self.type_set = frozenset(self.types)
        self.position = {t: j for j, t in enumerate(self.types)}
        self._succ: Dict[Role, Dict[int, int]] = {}
        self._incomplete: Optional[FrozenSet[int]] = None

    # -- coherence with memo

    def up(self, t: int, role: Role) -> int:
        key = (t, role)
        if key not in self._up:
            self._up[key] = self.closure.up_mask(t, role)
        return self._up[key]

    def _vectorized(self, n: int) -> bool:
        return n <= _MATRIX_LIMIT and len(self.closure) <= 63

    def _matrix(self, rows: Sequence[int], cols: Sequence[int], role: Role) -> np.ndarray:
        """Boolean matrix: rows[i] -role-> cols[j] is coherent."""
        r = np.array(rows, dtype=np.uint64)
        c = np.array(cols, dtype=np.uint64)
        up_c = np.array([self.up(u, role) for u in cols], dtype=np.uint64)
        up_r = np.array([self.up(t, role.inv()) for t in rows], dtype=np.uint64)
        return ((up_c[None, :] & ~r[:, None]) == 0) & ((up_r[:, None] & ~c[None, :]) == 0)

    def succ_mask(self, t: int, role: Role) -> int:
        """Bitmask over type positions of the types that are `role`-coherent
        successors of t."""
        table = self._succ.get(role)
        if table is None:
            table = self._succ[role] = {}
            if self._vectorized(len(self.types)) and self.types:
                packed = np.packbits(self._matrix(self.types, self.types, role), axis=1,
                                     bitorder="little")
                for u, row in zip(self.types, packed):
                    table[u] = int.from_bytes(row.tobytes(), "little")
        mask = table.get(t)
        if mask is None:
            mask = 0
            for j, u in enumerate(self.types):
                if self._coherent_raw(t, role, u):
                    mask |= 1 << j
            table[t] = mask
        return mask

    def coherent(self, t1: int, role: Role, t2: int) -> bool:
        j = self.position.get(t2)
        if j is None:
            return self._coherent_raw(t1, role, t2)
        return bool(self.succ_mask(t1, role) >> j & 1)

    def _eliminate(self, candidates: List[int]) -> List[int]:
        if self._vectorized(len(candidates)):
            return self._eliminate_matrix(candidates)
        cl = self.closure
        alive = set(candidates)
        with_lit: Dict[Literal, List[int]] = {}
        for _, _, lit in cl.existentials:
            if lit not in with_lit:
                with_lit[lit] = [t for t in candidates if lit.holds(t)]
        changed = True
        while changed:
            changed = False
            for t in sorted(alive):
                for i, role, lit in cl.existentials:
                    if not (t >> i) & 1:
                        continue
                    if not any(u in alive and self._coherent_raw(t, role, u) for u in with_lit[lit]):
                        alive.discard(t)
                        changed = True
                        break
        return list(alive)

    def _eliminate_matrix(self, candidates: List[int]) -> List[int]:
        cl = self.closure
        if not candidates or not cl.existentials:
            return list(candidates)
        arr = np.array(candidates, dtype=np.uint64)
        mats = {}
        checks = []
        for i, role, lit in cl.existentials:
            if role not in mats:
                mats[role] = self._matrix(candidates, candidates, role).astype(np.float32)
            has = ((arr >> np.uint64(i)) & np.uint64(1)).astype(bool)
            held = ((arr >> np.uint64(lit.index)) & np.uint64(1)).astype(bool) == lit.positive
            checks.append((has, held, mats[role]))
        alive = np.ones(len(candidates), dtype=bool)
        changed = True
        while changed:
            changed = False
            for has, held, mat in checks:
                ok = mat @ (alive & held).astype(np.float32) > 0
                kill = alive & has & ~ok
                if kill.any():
                    alive &= ~kill
                    changed = True
        return [candidates[j] for j in np.flatnonzero(alive)]

    def _coherent_raw(self, t1: int, role: Role, t2: int) -> bool:
        return (self.up(t2, role) & ~t1) == 0 and (self.up(t1, role.inv()) & ~t2) == 0

    def ktype(self, bits: int) -> KType:
        return KType(bits, self.closure)

    def successors(self, t: int, role: Role) -> List[int]:
        return [u for u in self.types if self.coherent(t, role, u)]

    def is_connected(self, t: int) -> bool:
        return any((t >> i) & 1 for i in self.closure.top_exists.values())

    # -- constant type assignment

    def domains(self, db: Database, allowed: Optional[Mapping[str, Collection[int]]] = None,
                constants: Optional[Iterable[str]] = None) -> Dict[str, List[int]]:
        cl = self.closure
        out = {}
        for c in sorted(db.constants if constants is None else constants):
            needed = []
            for a in db.labels(c):
                if Atomic(a) not in cl:
                    raise KeyError(f"concept name {a!r} outside the closure")
                needed.append(cl.literal(Atomic(a)))
            pool = self.types if allowed is None or c not in allowed else \
                [t for t in self.types if t in set(allowed[c])]
            out[c] = [t for t in pool if all(l.holds(t) for l in needed)]
        return out

    def solve(self, db: Database, allowed: Optional[Mapping[str, Collection[int]]] = None,
              constants: Optional[Iterable[str]] = None) -> Optional[Dict[str, int]]:
        """A type assignment for the constants (default: all of cons(D)) that
        respects unary atoms and is coherent along every binary atom among
        them; None if there is none."""
        pruned = self._pruned(db, allowed, constants)
        if pruned is None:
            return None
        doms, arcs = pruned
        consts = set(doms)
        assign: Dict[str, int] = {}

        def pick():
            best = None
            for c in sorted(consts):
                if c in assign:
                    continue
                key = (-sum(1 for _, d in arcs[c] if d in assign), len(doms[c]), c)
                if best is None or key < best[0]:
                    best = (key, c)
            return None if best is None else best[1]

        def search() -> bool:
            c = pick()
            if c is None:
                return True
            for t in doms[c]:
                if all(self.coherent(t, role, assign[d]) for role, d in arcs[c]
                       if d in assign and d != c):
                    assign[c] = t
                    if search():
                        return True
                    del assign[c]
            return False

        return dict(assign) if search() else None

    def _pruned(self, db: Database, allowed, constants):
        """Domains after unary, self-loop and arc-consistency pruning, plus
        the arcs; None once some domain empties."""
        doms = self.domains(db, allowed, constants)
        consts = set(doms)
        arcs: Dict[str, List[Tuple[Role, str]]] = {c: [] for c in consts}
        for r, c, d in db.binary_atoms:
            if c in consts and d in consts:
                arcs[c].append((Role(r), d))
                if c != d:
                    arcs[d].append((Role(r, True), c))
        for c in consts:
            for role, d in arcs[c]:
                if d == c:
                    doms[c] = [t for t in doms[c] if self.coherent(t, role, t)]
        if any(not v for v in doms.values()):
            return None
        if not self._arc_consistent(doms, arcs):
            return None
        return doms, arcs

    @staticmethod
    def _is_forest(arcs) -> bool:
        """Whether the non-loop atoms form a forest (no cycle, no parallel
        atoms); arc consistency is then exact."""
        edges = sum(1 for c in arcs for _, d in arcs[c] if d != c) // 2
        parent = {c: c for c in arcs}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        merges = 0
        for c in arcs:
            for _, d in arcs[c]:
                if d != c and find(c) != find(d):
                    parent[find(c)] = find(d)
                    merges += 1
        return merges == edges

    def _arc_consistent(self, doms, arcs) -> bool:
        queue = [(c, role, d) for c in doms for role, d in arcs[c] if d != c]
        while queue:
            c, role, d = queue.pop()
            dmask = 0
            for u in doms[d]:
                dmask |= 1 << self.position[u]
            keep = [t for t in doms[c] if self.succ_mask(t, role) & dmask]
            if len(keep) != len(doms[c]):
                doms[c] = keep
                if not keep:
                    return False
                queue.extend((e, r2, c) for e in doms for r2, f in arcs[e] if f == c and e != c)
        return True

    def satisfiable(self, db: Database, allowed=None) -> bool:
        for comp in components(db):
            if self.solve(db, allowed, comp) is None:
                return False
        return bool(self.types)

    def types_at(self, db: Database, b: str, allowed=None) -> FrozenSet[int]:
        """Realizable types t such that some model of (O, D) gives b type t."""
        if b not in db.constants:
            raise KeyError(f"unknown constant {b!r}")
        comps = components(db)
        own = next(c for c in comps if b in c)
        if any(self.solve(db, allowed, c) is None for c in comps if c is not own):
            return frozenset()
        pruned = self._pruned(db, allowed, own)
        if pruned is None:
            return frozenset()
        doms, arcs = pruned
        if self._is_forest(arcs):
            return frozenset(doms[b])
        found = set()
        for t in doms[b]:
            if t in found:
                continue
            pinned = dict(allowed or {})
            pinned[b] = [t]
            sol = self.solve(db, pinned, own)
            if sol is not None:
                found.add(t)
        return frozenset(found)

    # -- ALCI-completeness

    def incomplete_types(self) -> FrozenSet[int]:
        """Types from which a coherence path leads to a defect: an edge
        u -R1-> v -R2-> w such that some model realizes v with an
        R1-predecessor of type u and without any R2-successor of type w."""
        if self._incomplete is not None:
            return self._incomplete
        cl = self.closure
        roles = cl.roles
        types = self.types
        starts = 0
        for v in types:
            for r2 in roles:
                ws = self.succ_mask(v, r2)
                if not ws:
                    continue
                # sole witnesses of the existentials exists r2.D of v
                sole: List[Tuple[Literal, int]] = []
                for i, role, lit in cl.existentials:
                    if role != r2 or not (v >> i) & 1:
                        continue
                    wit = [j for j, w in enumerate(types) if ws >> j & 1 and lit.holds(w)]
                    if len(wit) == 1:
                        sole.append((lit, wit[0]))
                fixed = 0
                for _, j in sole:
                    fixed |= 1 << j
                for r1 in roles:
                    preds = self.succ_mask(v, r1.inv())
                    if r2 != r1.inv():
                        if ws & ~fixed:
                            starts |= preds
                        continue
                    for j, u in enumerate(types):
                        if not preds >> j & 1:
                            continue
                        bad = 1 << j
                        for lit, k in sole:
                            if not lit.holds(u):
                                bad |= 1 << k
                        if ws & ~bad:
                            starts |= 1 << j
        # backwards reachability over coherence edges
        incomplete = starts
        frontier = [j for j in range(len(types)) if starts >> j & 1]
        while frontier:
            u = types[frontier.pop()]
            preds = 0
            for r in roles:
                preds |= self.succ_mask(u, r.inv())
            new = preds & ~incomplete
            incomplete |= new
            frontier += [j for j in range(len(types)) if new >> j & 1]
        incomplete = {types[j] for j in range(len(types)) if incomplete >> j & 1}
        self._incomplete = frozenset(incomplete)
        return self._incomplete

    def is_complete(self, t: int) -> bool:
        return t not in self.incomplete_types()

    def coherence_graph(self) -> CoherenceGraph:
        nodes = frozenset(self.ktype(t) for t in self.types)
        edges = frozenset((self.ktype(t), r, self.ktype(u)) for t in self.types
                          for r in self.closure.roles for u in self.types
                          if self.coherent(t, r, u))
        return CoherenceGraph(nodes, edges)


# ---------------------------------------------------------------- public API

# Cap on free closure concepts (concept names and existentials); the
# Hintikka enumeration is exponential in it.  The CLI may change it.
limits = {"max_closure": 20}


@lru_cache(maxsize=256)
def get_reasoner(ontology: Ontology, signature: Signature, extra: Tuple[Concept, ...] = (),
                 max_closure: Optional[int] = None) -> Reasoner:
    return Reasoner(ontology, signature, extra, max_closure)


def kb_reasoner(k: KB, extra: Tuple[Concept, ...] = ()) -> Reasoner:
    return get_reasoner(k.ontology, k.signature(), tuple(extra), limits["max_closure"])


def closure(k: KB) -> Closure:
    return kb_reasoner(k).closure


def realizable_types(o: Ontology, sig: Signature) -> FrozenSet[KType]:
    r = get_reasoner(o, sig, (), limits["max_closure"])
    return frozenset(r.ktype(t) for t in r.types)


def r_coherent(t1: KType, role: Role, t2: KType) -> bool:
    if t1.closure is not t2.closure:
        raise ValueError("types over different closures")
    return t1.closure.coherent(t1.bits, role, t2.bits)


def kb_satisfiable(k: KB) -> bool:
    return kb_reasoner(k).satisfiable(k.database)


def entails_concept(k: KB, c: Concept, a: str) -> bool:
    """K |= C(a): no model gives `a` a type containing not C."""
    if a not in k.database.constants:
        raise KeyError(f"unknown constant {a!r}")
    r = kb_reasoner(k, (c,))
    lit = r.closure.literal(c)
    refuting = [t for t in r.types if not lit.holds(t)]
    if not r.satisfiable(k.database):
        return True
    return not r.types_at(k.database, a, {a: refuting})


def realizable_types_at(k: KB, b: str) -> FrozenSet[KType]:
    r = kb_reasoner(k)
    return frozenset(r.ktype(t) for t in r.types_at(k.database, b))


def is_connected_type(t: KType) -> bool:
    return any((t.bits >> i) & 1 for i in t.closure.top_exists.values())


def is_alci_complete(k: KB, t: KType) -> bool:
    r = kb_reasoner(k)
    if t.closure is not r.closure:
        raise ValueError("type is not over the closure of this KB")
    return r.is_complete(t.bits)


def is_strongly_incomplete(lk: LabeledKB) -> bool:
    """No connected type realizable at a negative example is ALCI-complete."""
    r = kb_reasoner(lk.kb)
    for b in lk.negatives:
        for t in r.types_at(lk.database, b):
            if r.is_connected(t) and r.is_complete(t):
                return False
    return True


def merged_satisfiable(k: KB, a: str, b: str) -> bool:
    """Satisfiability of (O, D with a disjoint copy whose b is identified with a)."""
    return kb_reasoner(k).satisfiable(merge_databases(k.database, a, b))
