"""Command-line front end.

Exit codes: 0 every task separable (or verification passed), 1 some task
inseparable (or verification failed), 2 input or usage error, 3 an
emitted separator failed re-verification or the oracle contradicted the
reasoner, 4 resource limit.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from . import reasoner
from .entailment import (DEFAULT_MAX_NODES, verify_strong_concept, verify_weak_concept,
                         verify_weak_separator)
from .model import UCQ, LabeledKB
from .oracle import BudgetExhausted, ModelBudget, enumerate_models, has_model
from .reasoner import ResourceLimit, entails_concept, kb_satisfiable
from .separability import TASKS, run_task
from .syntax import ParseError, parse_formula, parse_labeled_kb, render_concept, render_ucq

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_MISMATCH, EXIT_LIMIT = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_INPUT)


def _load(path: str) -> LabeledKB:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise _InputError(f"{path}: {e.strerror or e}") from e
    try:
        return parse_labeled_kb(data)
    except ParseError as e:
        raise _InputError(f"{path}:{e}") from e


class _InputError(Exception):
    pass


def _text_report(path: str, rep) -> str:
    lines = [f"[{rep.task}] {path}: {rep.status}"]
    if rep.separator:
        tag = "verified" if rep.separator.get("verified") else "NOT verified"
        lines.append(f"  separator ({rep.separator['kind']}, {tag}): {rep.separator['text']}")
    for b, info in sorted(rep.certificate.get("negatives", {}).items()):
        if "witness_type" in info:
            lines.append(f"  {b}: witness type {{{', '.join(info['witness_type'])}}}")
        elif "entailed" in info:
            lines.append(f"  {b}: query {'entailed' if info['entailed'] else 'not entailed'}")
        else:
            lines.append(f"  {b}: no witness type")
    for p in rep.certificate.get("pairs", []):
        lines.append(f"  ({p['positive']}, {p['negative']}): merged KB "
                     f"{'unsatisfiable' if p['merged_unsatisfiable'] else 'satisfiable'}")
    if "reason" in rep.certificate:
        lines.append(f"  {rep.certificate['reason']}")
    if "note" in rep.certificate:
        lines.append(f"  {rep.certificate['note']}")
    return "\n".join(lines)


def _reverify(lk: LabeledKB, rep, max_nodes: int) -> bool:
    f = rep.formula
    if f is None:
        return True
    k, p, n = lk.kb, lk.positives, lk.negatives
    if rep.task == "strong":
        return verify_strong_concept(k, f, p, n)
    if isinstance(f, UCQ):
        return verify_weak_separator(k, f, p, n, max_nodes)
    return verify_weak_concept(k, f, p, n)


def cmd_check(args) -> int:
    tasks = TASKS if args.task == "all" else (args.task,)
    code = EXIT_OK
    for path in args.files:
        lk = _load(path)
        oracle = None
        if args.oracle_domain:
            found = has_model(lk.kb, args.oracle_domain)
            oracle = {"domain_bound": args.oracle_domain, "model_found": found}
            if found and not kb_satisfiable(lk.kb):
                print(f"{path}: oracle found a model of a KB judged unsatisfiable", file=sys.stderr)
                code = max(code, EXIT_MISMATCH)
        for task in tasks:
            rep = run_task(lk, task, args.max_nodes)
            out = rep.to_dict()
            if oracle is not None:
                out["oracle"] = oracle
            if args.format == "json":
                print(json.dumps({"input": path, **out}, ensure_ascii=False))
            else:
                print(_text_report(path, rep))
            if args.verify and rep.separator is not None:
                if not rep.separator.get("verified") or not _reverify(lk, rep, args.max_nodes):
                    print(f"{path}: {task} separator failed verification", file=sys.stderr)
                    code = max(code, EXIT_MISMATCH)
            if not rep.separable and code == EXIT_OK:
                code = EXIT_FAIL
    return code


def cmd_verify(args) -> int:
    lk = _load(args.file)
    text = args.formula
    if text is None:
        try:
            text = Path(args.formula_file).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise _InputError(f"{args.formula_file}: {e}") from e
    try:
        f = parse_formula(text)
    except ParseError as e:
        raise _InputError(f"formula:{e}") from e
    k = lk.kb
    ok = True
    if isinstance(f, UCQ):
        if args.mode == "strong":
            raise _InputError("strong verification needs a concept")
        from .entailment import ucq_entailed
        try:
            verdict = {c: ucq_entailed(k, f, c, args.max_nodes) if kb_satisfiable(k) else True
                       for c in sorted(lk.positives | lk.negatives)}
        except ValueError as e:
            raise _InputError(str(e)) from e
        shown = render_ucq(f)
    else:
        from .model import Not
        verdict = {c: entails_concept(k, f, c) for c in sorted(lk.positives)}
        for b in sorted(lk.negatives):
            verdict[b] = entails_concept(k, Not(f) if args.mode == "strong" else f, b)
        shown = render_concept(f)
    print(f"formula: {shown}")
    for a in sorted(lk.positives):
        good = verdict[a]
        ok &= good
        print(f"  positive {a}: {'entailed' if verdict[a] else 'not entailed'}"
              f" [{'ok' if good else 'FAIL'}]")
    for b in sorted(lk.negatives):
        good = verdict[b] if args.mode == "strong" else not verdict[b]
        ok &= good
        what = "negation entailed" if args.mode == "strong" else "entailed"
        print(f"  negative {b}: {what if verdict[b] else 'not ' + what}"
              f" [{'ok' if good else 'FAIL'}]")
    print("separates" if ok else "does not separate")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    lk = _load(args.file)
    budget = ModelBudget(args.max_domain, args.max_models)
    count, exhausted = 0, False
    try:
        for s in enumerate_models(lk.kb, budget):
            count += 1
            if args.show:
                print(sorted(s.domain), {k: sorted(v) for k, v in s.unary_ext.items()},
                      {k: sorted(v) for k, v in s.binary_ext.items()}, s.constant_map)
    except BudgetExhausted:
        exhausted = True
    print(json.dumps({"max_domain": args.max_domain, "models": count,
                      "budget_exhausted": exhausted, "reasoner_satisfiable": kb_satisfiable(lk.kb)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ontosep", description="Separability of labeled ALCI knowledge bases.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def limits(sp):
        sp.add_argument("--max-closure", type=int, default=reasoner.limits["max_closure"],
                        help="cap on free closure concepts (default %(default)s)")
        sp.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES,
                        help="cap on countermodel search nodes (default %(default)s)")

    c = sub.add_parser("check", help="decide separability tasks")
    c.add_argument("--task", choices=TASKS + ("all",), default="all")
    c.add_argument("--format", choices=("text", "json"), default="text")
    c.add_argument("--verify", action="store_true", help="re-verify every emitted separator")
    c.add_argument("--oracle-domain", type=int, metavar="N",
                   help="cross-check satisfiability by brute force up to N elements")
    limits(c)
    c.add_argument("files", nargs="+", metavar="FILE")
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("verify", help="check whether a formula separates")
    v.add_argument("--mode", choices=("weak", "strong"), default="weak")
    g = v.add_mutually_exclusive_group(required=True)
    g.add_argument("--formula", help="concept or UCQ text")
    g.add_argument("--formula-file", metavar="PATH")
    limits(v)
    v.add_argument("file", metavar="FILE")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="enumerate small models by brute force")
    o.add_argument("--max-domain", type=int, default=2)
    o.add_argument("--max-models", type=int, default=1000)
    o.add_argument("--show", action="store_true")
    o.add_argument("file", metavar="FILE")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    saved = reasoner.limits["max_closure"]
    if hasattr(args, "max_closure"):
        reasoner.limits["max_closure"] = args.max_closure
    try:
        return args.func(args)
    except _InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimit as e:
        print(f"resource limit: {e}", file=sys.stderr)
        return EXIT_LIMIT
    finally:
        reasoner.limits["max_closure"] = saved


if __name__ == "__main__":
    sys.exit(main())
