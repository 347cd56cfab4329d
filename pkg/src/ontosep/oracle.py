"""Brute-force ground truth: finite models, homomorphisms by exhaustive
search, and the bisimulation game.

Nothing here uses the type machinery of the reasoner.  A structure over
domain {0..n-1} is encoded as an integer: bit ``j*n + i`` says element i
has the j-th concept name, bit ``L + r*n*n + i*n + k`` says (i, k) is in the
r-th role.  Inclusions are evaluated for all codes at once with numpy, in
chunks, and the sets of codes satisfying each inclusion are cached.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .model import (BOT_NAME, KB, And, Atomic, Concept, ConceptInclusion, Database, Exists, Not,
                    Signature, Structure, check_model)
from .graphs import PointedStructure

CHUNK = 1 << 20


class BudgetExhausted(RuntimeError):
    """More models exist than the budget allows; distinct from 'no model'."""


@dataclass(frozen=True)
class ModelBudget:
    max_domain_size: int
    max_models: int = 10_000

    def __post_init__(self):
        if self.max_domain_size < 1:
            raise ValueError("max_domain_size must be positive")


@dataclass(frozen=True)
class _Layout:
    names: Tuple[str, ...]
    roles: Tuple[str, ...]
    n: int

    @property
    def bits(self) -> int:
        return len(self.names) * self.n + len(self.roles) * self.n * self.n

    def label_bit(self, name: str, i: int) -> int:
        return self.names.index(name) * self.n + i

    def edge_bit(self, role: str, i: int, k: int) -> int:
        return len(self.names) * self.n + self.roles.index(role) * self.n * self.n + i * self.n + k


def _evaluate(c: Concept, lay: _Layout, codes: np.ndarray, memo: dict) -> np.ndarray:
    """Truth of c at every element: bool array of shape (n, len(codes))."""
    if c in memo:
        return memo[c]
    n = lay.n
    if isinstance(c, Atomic):
        if c.name == BOT_NAME or c.name not in lay.names:
            out = np.zeros((n, len(codes)), dtype=bool)
        else:
            out = np.stack([(codes >> np.uint32(lay.label_bit(c.name, i))) & np.uint32(1)
                            for i in range(n)]).astype(bool)
    elif isinstance(c, Not):
        out = ~_evaluate(c.arg, lay, codes, memo)
    elif isinstance(c, And):
        out = _evaluate(c.left, lay, codes, memo) & _evaluate(c.right, lay, codes, memo)
    elif isinstance(c, Exists):
        inner = _evaluate(c.arg, lay, codes, memo)
        out = np.zeros((n, len(codes)), dtype=bool)
        if c.role.name in lay.roles:
            for i in range(n):
                for k in range(n):
                    bit = lay.edge_bit(c.role.name, k, i) if c.role.inverted else \
                        lay.edge_bit(c.role.name, i, k)
                    out[i] |= (((codes >> np.uint32(bit)) & np.uint32(1)).astype(bool) & inner[k])
    else:
        raise TypeError(f"not a concept: {c!r}")
    memo[c] = out
    return out


@lru_cache(maxsize=512)
def _inclusion_codes(ci: ConceptInclusion, lay: _Layout) -> np.ndarray:
    """Sorted codes of all structures over the layout satisfying ci."""
    total = 1 << lay.bits
    keep = []
    for lo in range(0, total, CHUNK):
        codes = np.arange(lo, min(total, lo + CHUNK), dtype=np.uint32)
        memo: dict = {}
        ok = np.all(~_evaluate(ci.lhs, lay, codes, memo) | _evaluate(ci.rhs, lay, codes, memo), axis=0)
        keep.append(codes[ok])
    return np.concatenate(keep)


@lru_cache(maxsize=256)
def _ontology_codes(inclusions: FrozenSet[ConceptInclusion], lay: _Layout) -> Optional[np.ndarray]:
    """Codes satisfying all inclusions; None stands for 'every code'."""
    out = None
    for ci in sorted(inclusions, key=str):
        codes = _inclusion_codes(ci, lay)
        out = codes if out is None else np.intersect1d(out, codes, assume_unique=True)
    return out


SUBSAMPLE = 1 << 16


@lru_cache(maxsize=256)
def _ontology_subsample(inclusions: FrozenSet[ConceptInclusion], lay: _Layout) -> Optional[np.ndarray]:
    """A fixed seeded subset of the ontology's codes, for cheap sampling."""
    base = _ontology_codes(inclusions, lay)
    if base is None or len(base) <= SUBSAMPLE:
        return base
    return np.sort(np.random.default_rng(0).choice(base, SUBSAMPLE, replace=False))


def constant_maps(constants: Sequence[str], n: int) -> Iterator[Dict[str, int]]:
    """Maps of the constants into {0..n-1} up to renaming of elements: the
    images, in constant order, form a restricted growth string."""
    constants = list(constants)

    def rec(i: int, used: int, acc: Dict[str, int]):
        if i == len(constants):
            yield dict(acc)
            return
        for e in range(min(used + 1, n)):
            acc[constants[i]] = e
            yield from rec(i + 1, max(used, e + 1), acc)
        del acc[constants[i]]

    yield from rec(0, 0, {})


def _required(d: Database, lay: _Layout, cmap: Dict[str, int]) -> int:
    req = 0
    for a, c in d.unary_atoms:
        req |= 1 << lay.label_bit(a, cmap[c])
    for r, c, e in d.binary_atoms:
        req |= 1 << lay.edge_bit(r, cmap[c], cmap[e])
    return req


def _decode(code: int, lay: _Layout, cmap: Dict[str, int]) -> Structure:
    n = lay.n
    unary = {a: frozenset(i for i in range(n) if code >> lay.label_bit(a, i) & 1) for a in lay.names}
    binary = {r: frozenset((i, k) for i in range(n) for k in range(n)
                           if code >> lay.edge_bit(r, i, k) & 1) for r in lay.roles}
    return Structure(frozenset(range(n)), unary, binary, cmap)


def _layout(k: KB, n: int) -> _Layout:
    sig = k.signature()
    return _Layout(tuple(sorted(sig.concept_names)), tuple(sorted(sig.role_names)), n)


class _Cell:
    """Models of one domain size under one constant map, as codes.  With an
    empty ontology the codes are the required bits plus any free bits and
    are generated on demand instead of filtered from a table."""

    def __init__(self, lay: _Layout, cmap: Dict[str, int], req: int, base: Optional[np.ndarray],
                 pool: Optional[np.ndarray] = None):
        self.lay, self.cmap, self.req, self.base = lay, cmap, req, base
        self.pool = base if pool is None else pool
        self.free = [b for b in range(lay.bits) if not req >> b & 1]
        self._codes: Optional[np.ndarray] = None

    def __len__(self):
        if self.base is None:
            return 1 << len(self.free)
        return len(self.codes())

    def codes(self) -> np.ndarray:
        if self.base is None:
            return _spread(self.req, self.free, np.arange(1 << len(self.free), dtype=np.uint32))
        if self._codes is None:
            self._codes = self.base[(self.base & np.uint32(self.req)) == self.req]
        return self._codes

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.base is None:
            total = 1 << len(self.free)
            if total <= size:
                return self.codes()
            picks = rng.choice(total, size, replace=False).astype(np.uint32)
            return np.sort(_spread(self.req, self.free, picks))
        codes = self.pool[(self.pool & np.uint32(self.req)) == self.req]
        if not len(codes):
            codes = self.codes()
        if len(codes) <= size:
            return codes
        return np.sort(rng.choice(codes, size, replace=False))


def _spread(req: int, free: List[int], idx: np.ndarray) -> np.ndarray:
    """Codes with the required bits set and the free bits taken from idx."""
    out = np.full(len(idx), req, dtype=np.uint32)
    for j, b in enumerate(free):
        out |= ((idx >> np.uint32(j)) & np.uint32(1)) << np.uint32(b)
    return out


def _cells(k: KB, n: int) -> Iterator[_Cell]:
    lay = _layout(k, n)
    if lay.bits > 30:
        raise ValueError(f"{lay.bits} bits per structure is beyond brute force")
    inclusions = frozenset(k.ontology.inclusions)
    base = _ontology_codes(inclusions, lay)
    pool = _ontology_subsample(inclusions, lay)
    for cmap in constant_maps(sorted(k.database.constants), n):
        yield _Cell(lay, cmap, _required(k.database, lay, cmap), base, pool)


def enumerate_models(k: KB, budget: ModelBudget) -> Iterator[Structure]:
    """Every model over {0..n-1}, n up to the bound, for every constant map
    up to element renaming.  Raises BudgetExhausted once more than
    max_models would be produced."""
    produced = 0
    for n in range(1, budget.max_domain_size + 1):
        for cell in _cells(k, n):
            for code in cell.codes():
                if produced >= budget.max_models:
                    raise BudgetExhausted(f"more than {budget.max_models} models")
                s = _decode(int(code), cell.lay, cell.cmap)
                if not check_model(s, k):
                    raise AssertionError("enumerated structure is not a model")
                produced += 1
                yield s


def sample_cells(k: KB, budget: ModelBudget, seed: int = 0, per_cell: int = 8):
    """Seeded sample of model codes: every model of size at most 2, then up
    to `per_cell` per (domain size, constant map) for larger sizes.  Yields
    (layout, constant map, codes); at most max_models codes in total."""
    rng = np.random.default_rng(seed)
    left = budget.max_models
    for n in range(1, budget.max_domain_size + 1):
        for cell in _cells(k, n):
            codes = cell.codes() if n <= 2 else cell.sample(rng, per_cell)
            codes = codes[:left]
            left -= len(codes)
            if len(codes):
                yield cell.lay, cell.cmap, codes
            if left <= 0:
                return


def sample_models(k: KB, budget: ModelBudget, seed: int = 0, per_cell: int = 8) -> List[Structure]:
    return [_decode(int(code), lay, cmap)
            for lay, cmap, codes in sample_cells(k, budget, seed, per_cell) for code in codes]


def concept_truth(concepts: Sequence[Concept], lay: _Layout, codes: np.ndarray) -> np.ndarray:
    """Truth values, shape (len(concepts), n, len(codes))."""
    memo: dict = {}
    return np.stack([_evaluate(c, lay, codes, memo) for c in concepts]) if concepts else \
        np.zeros((0, lay.n, len(codes)), dtype=bool)


def hom_truth(d: Database, a: str, lay: _Layout, codes: np.ndarray, target: int) -> np.ndarray:
    """Per code: does some homomorphism map d into the structure with a sent
    to element `target`?  Tries every map of the other constants."""
    others = sorted(d.constants - {a})
    out = np.zeros(len(codes), dtype=bool)
    for image in itertools.product(range(lay.n), repeat=len(others)):
        h = dict(zip(others, image))
        h[a] = target
        ok = np.ones(len(codes), dtype=bool)
        for x, c in d.unary_atoms:
            if x not in lay.names:
                ok[:] = False
                break
            ok &= ((codes >> np.uint32(lay.label_bit(x, h[c]))) & np.uint32(1)).astype(bool)
        for r, c, e in d.binary_atoms:
            if r not in lay.roles:
                ok[:] = False
                break
            ok &= ((codes >> np.uint32(lay.edge_bit(r, h[c], h[e]))) & np.uint32(1)).astype(bool)
        out |= ok
    return out


def has_model(k: KB, max_domain_size: int) -> bool:
    """Whether some model with at most `max_domain_size` elements exists."""
    for n in range(1, max_domain_size + 1):
        for cell in _cells(k, n):
            if len(cell):
                return True
    return False


def count_models(k: KB, max_domain_size: int) -> int:
    return sum(len(cell) for n in range(1, max_domain_size + 1) for cell in _cells(k, n))


# ---------------------------------------------------------------- homomorphisms

def brute_hom_exists(d: Database, a: str, s: Structure, target) -> bool:
    """Exhaustive check for a homomorphism of d sending a to target."""
    consts = sorted(d.constants)
    dom = sorted(s.domain, key=repr)
    for image in itertools.product(dom, repeat=len(consts)):
        h = dict(zip(consts, image))
        if h[a] != target:
            continue
        if all(h[c] in s.concept_ext(x) for x, c in d.unary_atoms) and \
                all((h[c], h[e]) in s.binary_ext.get(r, ()) for r, c, e in d.binary_atoms):
            return True
    return False


def _reachable(d: Database, a: str) -> Database:
    seen = {a}
    changed = True
    while changed:
        changed = False
        for _, c, e in d.binary_atoms:
            if (c in seen) != (e in seen):
                seen |= {c, e}
                changed = True
    return Database(frozenset(x for x in d.unary_atoms if x[1] in seen),
                    frozenset(x for x in d.binary_atoms if x[1] in seen))


def brute_weak_separable_empty_ontology(d: Database, positives, negatives) -> bool:
    """With no ontology the database itself is a minimal model, so b is a
    non-answer of the positives' canonical UCQ iff no D_con(a) maps to b."""
    unary: Dict[str, set] = {}
    binary: Dict[str, set] = {}
    for x, c in d.unary_atoms:
        unary.setdefault(x, set()).add(c)
    for r, c, e in d.binary_atoms:
        binary.setdefault(r, set()).add((c, e))
    s = Structure(d.constants, unary, binary, {c: c for c in d.constants})
    return all(not any(brute_hom_exists(_reachable(d, a), a, s, b) for a in positives)
               for b in negatives)


# ---------------------------------------------------------------- bisimulation game

def bisim_game(s1: PointedStructure, s2: PointedStructure, sigma: Signature, rounds: int) -> bool:
    """Whether Duplicator survives `rounds` rounds of the Σ-bisimulation game
    from the two points (explicit minimax with memoization)."""
    a, b = s1.structure, s2.structure
    names = sorted(sigma.concept_names)
    from .model import Role
    roles = [Role(r) for r in sorted(sigma.role_names)]
    roles += [r.inv() for r in roles]
    memo: Dict[Tuple, bool] = {}

    def atoms_agree(d, e) -> bool:
        return all((d in a.concept_ext(x)) == (e in b.concept_ext(x)) for x in names)

    def win(d, e, k) -> bool:
        key = (d, e, k)
        if key in memo:
            return memo[key]
        ok = atoms_agree(d, e)
        if ok and k > 0:
            for r in roles:
                sa, sb = a.successors(d, r), b.successors(e, r)
                if not all(any(win(d2, e2, k - 1) for e2 in sb) for d2 in sa) or \
                        not all(any(win(d2, e2, k - 1) for d2 in sa) for e2 in sb):
                    ok = False
                    break
        memo[key] = ok
        return ok

    return win(s1.point[0], s2.point[0], rounds)
