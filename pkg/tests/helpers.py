"""Paths and loaders shared by the tests."""

from pathlib import Path

from ontosep.model import KB, Atomic, ConceptInclusion, LabeledKB
from ontosep.syntax import parse_labeled_kb

KBS = Path(__file__).resolve().parent.parent / "kbs"


def load(name: str):
    return parse_labeled_kb((KBS / name).read_text())


def fresh_variant(lk):
    """Same labeled KB with a tautology over a new concept name added."""
    a = Atomic("Fresh")
    return LabeledKB(KB(lk.ontology.with_inclusion(ConceptInclusion(a, a)), lk.database),
                     lk.positives, lk.negatives)
