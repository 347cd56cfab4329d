"""Deciding separability of labeled KBs and producing verified separators."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

from .entailment import (DEFAULT_MAX_NODES, ForestCountermodel, find_countermodel,
                         verify_strong_concept, verify_weak_concept, verify_weak_separator)
from .graphs import canonical_ucq, merge_databases
from .model import (KB, UCQ, Atomic, Concept, ConceptInclusion, LabeledKB, Not, conjunction,
                    disjunction)
from .reasoner import kb_reasoner
from .syntax import render_concept, render_ucq

SEPARABLE = "separable"
INSEPARABLE = "inseparable"
TASKS = ("weak-projective", "weak-nonprojective", "strong")


class InconsistentVerdicts(RuntimeError):
    """Two characterizations that must agree returned different answers."""


@dataclass
class SeparabilityReport:
    task: str
    status: str
    separator: Optional[Dict[str, Any]] = None
    certificate: Dict[str, Any] = field(default_factory=dict)
    stats: Dict[str, Any] = field(default_factory=dict)
    formula: Union[Concept, UCQ, None] = field(default=None, repr=False)
    countermodels: Dict[str, ForestCountermodel] = field(default_factory=dict, repr=False)

    @property
    def separable(self) -> bool:
        return self.status == SEPARABLE

    def to_dict(self) -> Dict[str, Any]:
        return {"task": self.task, "status": self.status, "separator": self.separator,
                "certificate": self.certificate, "stats": self.stats}


def _stats(r, start: float) -> Dict[str, Any]:
    return {"types": len(r.types), "closure": len(r.closure),
            "time_ms": round((time.perf_counter() - start) * 1000, 3)}


def _unsat_report(task: str, r, start: float) -> SeparabilityReport:
    return SeparabilityReport(task, INSEPARABLE, None,
                              {"reason": "knowledge base is unsatisfiable"}, _stats(r, start))


def weak_projective(lk: LabeledKB, max_nodes: int = DEFAULT_MAX_NODES) -> SeparabilityReport:
    """Separable iff the canonical UCQ of the positives is not entailed at
    any negative; that UCQ is then the separator."""
    start = time.perf_counter()
    k, d = lk.kb, lk.database
    r = kb_reasoner(k)
    if not r.satisfiable(d):
        return _unsat_report("weak-projective", r, start)
    q = canonical_ucq(d, lk.positives)
    per_b: Dict[str, Any] = {}
    cms: Dict[str, ForestCountermodel] = {}
    for b in sorted(lk.negatives):
        cm = find_countermodel(r, d, q, b, max_nodes=max_nodes)
        per_b[b] = {"entailed": cm is None}
        if cm is not None:
            per_b[b]["countermodel"] = cm.sketch()
            cms[b] = cm
    ok = all(not v["entailed"] for v in per_b.values())
    separator = None
    if ok:
        separator = {"kind": "ucq", "text": render_ucq(q),
                     "verified": verify_weak_separator(k, q, lk.positives, lk.negatives, max_nodes)}
    return SeparabilityReport("weak-projective", SEPARABLE if ok else INSEPARABLE, separator,
                              {"query": render_ucq(q), "negatives": per_b}, _stats(r, start),
                              q if ok else None, cms)


def weak_nonprojective(lk: LabeledKB, max_nodes: int = DEFAULT_MAX_NODES,
                       task: str = "weak-nonprojective") -> SeparabilityReport:
    """Separable iff every negative b has a witness type t realizable at b
    such that the canonical UCQ of the positives fails in some model giving
    b type t, and t is not a connected ALCI-complete type realizable at a
    positive.  Witnesses not realizable at any positive yield the concept
    separator "not (type of b)"; otherwise only the certificate is given."""
    start = time.perf_counter()
    k, d = lk.kb, lk.database
    r = kb_reasoner(k)
    if not r.satisfiable(d):
        return _unsat_report(task, r, start)
    q = canonical_ucq(d, lk.positives)
    at_p = set()
    for a in lk.positives:
        at_p |= r.types_at(d, a)
    per_b: Dict[str, Any] = {}
    cms: Dict[str, ForestCountermodel] = {}
    simple: Dict[str, int] = {}
    for b in sorted(lk.negatives):
        at_b = r.types_at(d, b)
        allowed = [t for t in sorted(at_b)
                   if not (r.is_connected(t) and r.is_complete(t) and t in at_p)]
        cm = find_countermodel(r, d, q, b, allowed, max_nodes) if allowed else None
        unshared = sorted(at_b - at_p)
        if unshared:
            simple[b] = unshared[0]
            if cm is None:
                raise InconsistentVerdicts(
                    f"type unrealizable at the positives exists for {b} but no witness was found")
        entry: Dict[str, Any] = {"separable": cm is not None}
        if cm is not None:
            cms[b] = cm
            entry["witness_type"] = cm.skeleton[b].literals()
            entry["countermodel"] = cm.sketch()
        per_b[b] = entry
    ok = all(v["separable"] for v in per_b.values())
    separator, formula = None, None
    if ok and len(simple) == len(per_b):
        formula = conjunction(Not(r.closure.type_concept(simple[b])) for b in sorted(simple))
        separator = {"kind": "concept", "text": render_concept(formula),
                     "verified": verify_weak_concept(k, formula, lk.positives, lk.negatives)}
    cert = {"negatives": per_b}
    if ok and separator is None:
        cert["note"] = "separable by certificate; no concept separator synthesized"
    return SeparabilityReport(task, SEPARABLE if ok else INSEPARABLE, separator, cert,
                              _stats(r, start), formula, cms)


def _fresh_name(lk: LabeledKB) -> str:
    taken = lk.kb.signature()
    taken = taken.concept_names | taken.role_names
    i = 0
    while f"Fresh{i}" in taken:
        i += 1
    return f"Fresh{i}"


def projective_via_reduction(lk: LabeledKB, max_nodes: int = DEFAULT_MAX_NODES) -> SeparabilityReport:
    """Non-projective separability after adding a tautology over a fresh
    concept name, which coincides with projective separability."""
    a = Atomic(_fresh_name(lk))
    o = lk.ontology.with_inclusion(ConceptInclusion(a, a))
    extended = LabeledKB(KB(o, lk.database), lk.positives, lk.negatives)
    return weak_nonprojective(extended, max_nodes, task="projective-via-reduction")


def strong(lk: LabeledKB) -> SeparabilityReport:
    """Separable iff merging any positive with any negative is
    unsatisfiable, equivalently iff they share no realizable type.  The
    separator is the disjunction of the types realizable at positives."""
    start = time.perf_counter()
    k, d = lk.kb, lk.database
    r = kb_reasoner(k)
    at_p = set()
    pairs: List[Dict[str, Any]] = []
    types_at = {c: r.types_at(d, c) for c in sorted(lk.positives | lk.negatives)}
    for a in sorted(lk.positives):
        at_p |= types_at[a]
        for b in sorted(lk.negatives):
            merged_unsat = not r.satisfiable(merge_databases(d, a, b))
            disjoint = not (types_at[a] & types_at[b])
            if merged_unsat != disjoint:
                raise InconsistentVerdicts(f"merge test and type test disagree on ({a}, {b})")
            pairs.append({"positive": a, "negative": b, "merged_unsatisfiable": merged_unsat,
                          "types_disjoint": disjoint})
    ok = all(p["merged_unsatisfiable"] for p in pairs)
    separator, formula = None, None
    if ok:
        formula = disjunction(r.closure.type_concept(t) for t in sorted(at_p))
        separator = {"kind": "concept", "text": render_concept(formula),
                     "verified": verify_strong_concept(k, formula, lk.positives, lk.negatives)}
    return SeparabilityReport("strong", SEPARABLE if ok else INSEPARABLE, separator,
                              {"pairs": pairs}, _stats(r, start), formula)


def run_task(lk: LabeledKB, task: str, max_nodes: int = DEFAULT_MAX_NODES) -> SeparabilityReport:
    if task == "weak-projective":
        return weak_projective(lk, max_nodes)
    if task == "weak-nonprojective":
        return weak_nonprojective(lk, max_nodes)
    if task == "projective-via-reduction":
        return projective_via_reduction(lk, max_nodes)
    if task == "strong":
        return strong(lk)
    raise ValueError(f"unknown task {task!r}")
