"""Separability of labeled ALCI knowledge bases."""

from .model import (BOT, TOP, CQ, KB, UCQ, And, Atomic, Concept, ConceptInclusion, Database,
                    Exists, Forall, Implies, LabeledKB, Not, Ontology, Or, Role, Signature,
                    Structure, check_model)
from .syntax import ParseError, parse_concept, parse_formula, parse_labeled_kb, parse_ucq
from .separability import (SeparabilityReport, projective_via_reduction, strong,
                           weak_nonprojective, weak_projective)

__all__ = [
    "BOT", "TOP", "CQ", "KB", "UCQ", "And", "Atomic", "Concept", "ConceptInclusion", "Database",
    "Exists", "Forall", "Implies", "LabeledKB", "Not", "Ontology", "Or", "Role", "Signature",
    "Structure", "check_model", "ParseError", "parse_concept", "parse_formula",
    "parse_labeled_kb", "parse_ucq", "SeparabilityReport", "projective_via_reduction", "strong",
    "weak_nonprojective", "weak_projective",
]
