"""Concrete syntax for labeled KBs, concepts and UCQs.

Grammar of ``.okb`` files::

    file    := section+
    section := "ontology" "{" ci* "}" | "database" "{" atom* "}"
             | "positive" "{" const ("," const)* "}"
             | "negative" "{" const ("," const)* "}"
    ci      := concept "<=" concept
    atom    := name "(" const ")" | name "(" const "," const ")"
    concept := "top" | "bot" | name | "not" concept | concept "and" concept
             | concept "or" concept | ("exists"|"forall") role "." concept
             | "(" concept ")"
    role    := name | "inv" "(" name ")"

Precedence from tightest to loosest: ``not``, ``exists``/``forall`` (whose
body is a single unary-level concept), ``and``, ``or``.  Binary operators
associate to the left.  ``#`` starts a comment.

UCQs are written ``q(x) :- A(x), r(x,y) | q(x) :- ...``; the body ``true``
denotes the empty conjunction.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from .model import (BOT, BOT_NAME, CQ, KB, TOP, UCQ, And, Atomic, Concept, ConceptInclusion,
                    Database, Exists, Forall, LabeledKB, Not, Ontology, Or, Role)

KEYWORDS = {"ontology", "database", "positive", "negative", "top", "bot", "not", "and",
            "or", "exists", "forall", "inv", "true"}


class ParseError(ValueError):
    """Syntax error at a 1-based (line, column) position."""

    def __init__(self, message: str, line: int, column: int, expected: Optional[str] = None):
        self.message = message
        self.line = line
        self.column = column
        self.expected = expected
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{line}:{column}: {message}{hint}")


class SemanticError(ParseError):
    """Well-formed input that does not describe a valid labeled KB."""


@dataclass(frozen=True)
class Token:
    kind: str  # 'name', 'punct', 'eof'
    text: str
    line: int
    column: int


MAX_NESTING = 200

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct><=|:-|[{}(),.|=])
""", re.VERBOSE)


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind in ("name", "punct"):
            tokens.append(Token(kind, chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: Union[str, bytes]):
        if isinstance(text, (bytes, bytearray)):
            try:
                text = bytes(text).decode("utf-8")
            except UnicodeDecodeError as e:
                prefix = bytes(text)[:e.start].decode("utf-8", errors="replace")
                line = prefix.count("\n") + 1
                col = len(prefix) - (prefix.rfind("\n") + 1) + 1
                raise ParseError("input is not valid UTF-8", line, col) from None
        self.tokens = tokenize(text)
        self.i = 0
        self.depth = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str, expected: Optional[str] = None, tok: Optional[Token] = None):
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.column, expected)

    def at(self, text: str) -> bool:
        return self.tok.kind != "eof" and self.tok.text == text

    def take(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", repr(text))
        tok = self.tok
        self.i += 1
        return tok

    def name(self, what: str = "identifier") -> Token:
        tok = self.tok
        if tok.kind != "name" or tok.text in KEYWORDS:
            found = tok.text or "end of input"
            raise self.error(f"unexpected {found!r}", what)
        self.i += 1
        return tok

    def expect_eof(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}", "end of input")

    # -- concepts

    def concept(self) -> Concept:
        left = self.conjunction()
        while self.at("or"):
            self.i += 1
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Concept:
        left = self.unary()
        while self.at("and"):
            self.i += 1
            left = And(left, self.unary())
        return left

    def unary(self) -> Concept:
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise self.error(f"concept nested deeper than {MAX_NESTING} levels")
        try:
            return self._unary()
        finally:
            self.depth -= 1

    def _unary(self) -> Concept:
        tok = self.tok
        if self.at("not"):
            self.i += 1
            return Not(self.unary())
        if self.at("exists") or self.at("forall"):
            self.i += 1
            role = self.role()
            self.take(".")
            body = self.unary()
            return Exists(role, body) if tok.text == "exists" else Forall(role, body)
        if self.at("top"):
            self.i += 1
            return TOP
        if self.at("bot"):
            self.i += 1
            return BOT
        if self.at("("):
            self.i += 1
            c = self.concept()
            self.take(")")
            return c
        name = self.name("concept")
        self.concept_uses.append(name)
        return Atomic(name.text)

    def role(self) -> Role:
        if self.at("inv"):
            self.i += 1
            self.take("(")
            name = self.name("role name")
            self.take(")")
            self.role_uses.append(name)
            return Role(name.text, True)
        name = self.name("role")
        self.role_uses.append(name)
        return Role(name.text)

    concept_uses: List[Token]
    role_uses: List[Token]

    # -- queries

    def cq(self) -> CQ:
        self.name("query name")
        self.take("(")
        head = [self.name("variable").text]
        while self.at(","):
            self.i += 1
            head.append(self.name("variable").text)
        self.take(")")
        self.take(":-")
        unary, binary, eqs = set(), set(), set()
        if self.at("true"):
            self.i += 1
        else:
            while True:
                first = self.name("atom")
                if self.at("="):
                    self.i += 1
                    second = self.name("variable")
                    eqs.add((first.text, second.text))
                else:
                    self.take("(")
                    v = self.name("variable").text
                    if self.at(","):
                        self.i += 1
                        w = self.name("variable").text
                        self.take(")")
                        binary.add((first.text, v, w))
                        self.role_uses.append(first)
                    else:
                        self.take(")")
                        unary.add((first.text, v))
                        self.concept_uses.append(first)
                if not self.at(","):
                    break
                self.i += 1
        try:
            return CQ(tuple(head), unary, binary, eqs)
        except ValueError as e:
            raise self.error(str(e)) from None

    def ucq(self) -> UCQ:
        cqs = [self.cq()]
        while self.at("|"):
            self.i += 1
            cqs.append(self.cq())
        try:
            return UCQ(tuple(cqs))
        except ValueError as e:
            raise self.error(str(e)) from None


def _new_parser(text) -> _Parser:
    p = _Parser(text)
    p.concept_uses = []
    p.role_uses = []
    return p


def _check_arity(p: _Parser):
    roles = {t.text for t in p.role_uses}
    for tok in p.concept_uses:
        if tok.text in roles:
            raise SemanticError(f"{tok.text!r} is used both as a concept name and as a role",
                                tok.line, tok.column)


def parse_concept(text: Union[str, bytes]) -> Concept:
    p = _new_parser(text)
    c = p.concept()
    p.expect_eof()
    _check_arity(p)
    return c


def parse_ucq(text: Union[str, bytes]) -> UCQ:
    p = _new_parser(text)
    q = p.ucq()
    p.expect_eof()
    _check_arity(p)
    return q


def parse_formula(text: Union[str, bytes]) -> Union[Concept, UCQ]:
    """A UCQ if the text contains ':-', otherwise a concept."""
    raw = text.decode("utf-8", errors="replace") if isinstance(text, (bytes, bytearray)) else text
    return parse_ucq(text) if ":-" in raw else parse_concept(text)


def parse_labeled_kb(text: Union[str, bytes]) -> LabeledKB:
    p = _new_parser(text)
    inclusions = set()
    unary, binary = set(), set()
    examples = {"positive": [], "negative": []}
    seen = {"positive": None, "negative": None}
    if p.tok.kind == "eof":
        raise p.error("empty input", "a section")
    while p.tok.kind != "eof":
        head = p.tok
        if head.text not in ("ontology", "database", "positive", "negative") or head.kind != "name":
            raise p.error(f"unexpected {head.text!r}",
                          "'ontology', 'database', 'positive' or 'negative'")
        p.i += 1
        p.take("{")
        if head.text == "ontology":
            while not p.at("}"):
                lhs = p.concept()
                p.take("<=")
                rhs = p.concept()
                inclusions.add(ConceptInclusion(lhs, rhs))
        elif head.text == "database":
            while not p.at("}"):
                name = p.name("atom")
                p.take("(")
                c = p.name("constant")
                if p.at(","):
                    p.i += 1
                    d = p.name("constant")
                    p.take(")")
                    binary.add((name.text, c.text, d.text))
                    p.role_uses.append(name)
                else:
                    p.take(")")
                    unary.add((name.text, c.text))
                    p.concept_uses.append(name)
        else:
            seen[head.text] = seen[head.text] or head
            if p.at("}"):
                raise SemanticError(f"{head.text} examples must be non-empty",
                                    p.tok.line, p.tok.column)
            examples[head.text].append(p.name("constant"))
            while p.at(","):
                p.i += 1
                examples[head.text].append(p.name("constant"))
        p.take("}")
    _check_arity(p)
    db = Database(unary, binary)
    for kind in ("positive", "negative"):
        if seen[kind] is None:
            tok = p.tok
            raise SemanticError(f"missing {kind} section; {kind} examples must be non-empty",
                                tok.line, tok.column)
        for tok in examples[kind]:
            if tok.text not in db.constants:
                raise SemanticError(f"unknown constant {tok.text!r} (not in the database)",
                                    tok.line, tok.column)
    return LabeledKB(KB(Ontology(inclusions), db),
                     frozenset(t.text for t in examples["positive"]),
                     frozenset(t.text for t in examples["negative"]))


# ---------------------------------------------------------------- printing

# precedence levels: 0 = or, 1 = and, 2 = unary
def _render(c: Concept, level: int) -> str:
    if c == BOT:
        return "bot"
    if c == TOP:
        return "top"
    if isinstance(c, Atomic):
        if c.name == BOT_NAME:
            raise ValueError("the reserved bottom symbol has no concrete syntax on its own")
        return c.name
    if isinstance(c, Not):
        inner = c.arg
        if isinstance(inner, And) and isinstance(inner.left, Not) and isinstance(inner.right, Not) \
                and inner != BOT:
            text = f"{_render(inner.left.arg, 0)} or {_render(inner.right.arg, 1)}"
            return text if level == 0 else f"({text})"
        if isinstance(inner, Exists) and isinstance(inner.arg, Not):
            return f"forall {inner.role}. {_render(inner.arg.arg, 2)}"
        return f"not {_render(inner, 2)}"
    if isinstance(c, And):
        text = f"{_render(c.left, 1)} and {_render(c.right, 2)}"
        return text if level <= 1 else f"({text})"
    if isinstance(c, Exists):
        return f"exists {c.role}. {_render(c.arg, 2)}"
    raise TypeError(f"not a concept: {c!r}")


def render_concept(c: Concept) -> str:
    return _render(c, 0)


def render_cq(q: CQ, head: str = "q") -> str:
    items = [f"{a}({v})" for a, v in sorted(q.unary_atoms)]
    items += [f"{r}({v},{w})" for r, v, w in sorted(q.binary_atoms)]
    items += [f"{x} = {y}" for x, y in sorted(q.equalities)]
    body = ", ".join(items) if items else "true"
    return f"{head}({','.join(q.answer_vars)}) :- {body}"


def render_ucq(q: UCQ) -> str:
    return " | ".join(render_cq(cq) for cq in q.disjuncts)


def render_database(d: Database) -> str:
    atoms = [f"{a}({c})" for a, c in sorted(d.unary_atoms)]
    atoms += [f"{r}({c},{e})" for r, c, e in sorted(d.binary_atoms)]
    return " ".join(atoms)


def render_labeled_kb(lk: LabeledKB) -> str:
    lines = ["ontology {"]
    lines += [f"  {render_concept(ci.lhs)} <= {render_concept(ci.rhs)}" for ci in lk.ontology]
    lines.append("}")
    lines.append("database {")
    lines += [f"  {a}({c})" for a, c in sorted(lk.database.unary_atoms)]
    lines += [f"  {r}({c},{e})" for r, c, e in sorted(lk.database.binary_atoms)]
    lines.append("}")
    lines.append(f"positive {{ {', '.join(sorted(lk.positives))} }}")
    lines.append(f"negative {{ {', '.join(sorted(lk.negatives))} }}")
    return "\n".join(lines) + "\n"


def render_report(report) -> str:
    """JSON text for a SeparabilityReport (or its dict form)."""
    data = report if isinstance(report, dict) else report.to_dict()
    return json.dumps(data, indent=2, ensure_ascii=False)


REPORT_SCHEMA = {
    "type": "object",
    "required": ["task", "status", "separator", "certificate", "stats"],
    "properties": {
        "task": {"enum": ["weak-projective", "weak-nonprojective", "strong",
                          "projective-via-reduction"]},
        "status": {"enum": ["separable", "inseparable"]},
        "separator": {
            "oneOf": [
                {"type": "null"},
                {"type": "object", "required": ["kind", "text"],
                 "properties": {"kind": {"enum": ["ucq", "concept"]},
                                "text": {"type": "string"},
                                "verified": {"type": "boolean"}}},
            ]
        },
        "certificate": {"type": "object"},
        "stats": {
            "type": "object",
            "required": ["types", "closure", "time_ms"],
            "properties": {"types": {"type": "integer"}, "closure": {"type": "integer"},
                           "time_ms": {"type": "number"}},
        },
    },
}
