"""Render formulae in the same concrete syntax the parser accepts."""

from __future__ import annotations

from .syntax import (
    And, Always, Atom, Bottom, Exists, Forall, Formula, Iff, Implies, Next, Not, Or,
    Sometime, Top, Unless, Until,
)

# binding strength, higher binds tighter
_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4, Until: 5, Unless: 5}
_PREFIX = {Next: "next", Always: "always", Sometime: "sometime"}
_OPS = {Iff: " <-> ", Implies: " -> ", Or: " | ", And: " & ", Until: " until ", Unless: " unless "}


def _prec(f: Formula) -> int:
    if isinstance(f, (Forall, Exists)):
        return 0
    return _PREC.get(type(f), 9)


def _wrap(s: str, yes: bool) -> str:
    return f"({s})" if yes else s


def to_text(f: Formula) -> str:
    if isinstance(f, Atom):
        if not f.args:
            return f.pred
        return f"{f.pred}({','.join(t.name for t in f.args)})"
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Not):
        return "~" + _wrap(to_text(f.body), _prec(f.body) < 9)
    if type(f) in _PREFIX:
        return f"{_PREFIX[type(f)]} " + _wrap(to_text(f.body), _prec(f.body) < 9)
    if isinstance(f, (Forall, Exists)):
        q = "forall" if isinstance(f, Forall) else "exists"
        return f"{q} {f.var}. {to_text(f.body)}"
    p = _prec(f)
    op = _OPS[type(f)]
    if isinstance(f, (And, Or)):
        return op.join(_wrap(to_text(c), _prec(c) <= p) for c in f.items)
    # right-associative binary operators
    left = _wrap(to_text(f.left), _prec(f.left) <= p)
    right = _wrap(to_text(f.right), _prec(f.right) < p)
    return left + op + right


def problem_to_text(p) -> str:
    """A problem file that parses back to ``p``; empty sections are omitted."""
    sections = [
        ("universal", [to_text(f) for f in p.universal]),
        ("initial", [to_text(f) for f in p.initial]),
        ("step", [f"{to_text(s.lhs)} => next {to_text(s.rhs)}" for s in p.step]),
        ("eventuality", [f"sometime {to_text(e.body)}" for e in p.eventuality]),
    ]
    out = []
    for name, items in sections:
        if items:
            out.append(name + " {")
            out += [f"  {item};" for item in items]
            out.append("}")
    return "\n".join(out) + "\n"
