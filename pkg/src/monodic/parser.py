"""Recursive-descent parser for formulae and problem files.

Formula syntax::

    P(x,c)   p   true   false   ~f   f & g   f | g   f -> g   f <-> g
    forall v. f   exists v. f   next f   always f   sometime f
    f until g   f unless g

Binding strength, tightest first: ``~`` and the temporal prefixes, then
``until``/``unless``, ``&``, ``|``, ``->``, ``<->``.  Quantifier bodies extend
as far to the right as possible.  A name used as a term is a variable when a
quantifier binds it and a constant otherwise.

Problem files are made of sections::

    initial     { formula; ... }
    universal   { formula; ... }
    step        { P(x) => next ~Q(x); p => next q; ... }
    eventuality { sometime ~L(x); sometime l; ... }
    extended    { formula over next; ... }
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .problem import (
    EventualityClause, ExtendedProblem, ProblemError, StepClause, TemporalProblem, X,
)
from .syntax import (
    FALSE, TRUE, Always, And, Atom, Const, Exists, Forall, Formula, Iff, Implies, Next, Not, Or,
    Sometime, Unless, Until, Var, rename_free, free_vars,
)

KEYWORDS = {"forall", "exists", "next", "always", "sometime", "until", "unless", "true", "false"}
SECTIONS = ("initial", "universal", "step", "eventuality", "extended")

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>[#%][^\n]*)"
    r"|(?P<op><->|->|=>|[~&|().,;{}])"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<bad>.)"
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out = []
    line, start = 1, 0
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        col = m.start() - start + 1
        if kind == "nl":
            line += 1
            start = m.end()
            continue
        if kind in ("ws", "comment"):
            continue
        if kind == "bad":
            ch = m.group()
            if ch == "=":
                raise ParseError("equality is not supported", line, col)
            raise ParseError(f"unknown operator {ch!r}", line, col)
        out.append(Token(kind, m.group(), line, col))
    out.append(Token("eof", "", line, len(text) - start + 1))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.arity: dict = {}
        self.bound: list = []
        self.implicit: frozenset = frozenset()

    # -- helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col)

    def at(self, *texts: str) -> bool:
        return self.tok.text in texts and self.tok.kind in ("op", "name")

    def take(self, text: str) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        t = self.tok
        self.i += 1
        return t

    def name(self) -> Token:
        t = self.tok
        if t.kind != "name" or t.text in KEYWORDS:
            raise self.error(f"expected a name, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    # -- formula grammar
    def formula(self) -> Formula:
        left = self.implication()
        if self.at("<->"):
            self.i += 1
            return Iff(left, self.formula())
        return left

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.at("->"):
            self.i += 1
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        items = [self.conjunction()]
        while self.at("|"):
            self.i += 1
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self) -> Formula:
        items = [self.until()]
        while self.at("&"):
            self.i += 1
            items.append(self.until())
        return items[0] if len(items) == 1 else And(tuple(items))

    def until(self) -> Formula:
        left = self.unary()
        if self.at("until", "unless"):
            op = self.tok.text
            self.i += 1
            right = self.until()
            return Until(left, right) if op == "until" else Unless(left, right)
        return left

    def unary(self) -> Formula:
        t = self.tok
        if self.at("~"):
            self.i += 1
            return Not(self.unary())
        if self.at("next", "always", "sometime"):
            self.i += 1
            body = self.unary()
            return {"next": Next, "always": Always, "sometime": Sometime}[t.text](body)
        if self.at("forall", "exists"):
            self.i += 1
            var = self.name().text
            self.take(".")
            self.bound.append(var)
            try:
                body = self.formula()
            finally:
                self.bound.pop()
            return (Forall if t.text == "forall" else Exists)(var, body)
        return self.primary()

    def primary(self) -> Formula:
        t = self.tok
        if self.at("("):
            self.i += 1
            f = self.formula()
            self.take(")")
            return f
        if self.at("true"):
            self.i += 1
            return TRUE
        if self.at("false"):
            self.i += 1
            return FALSE
        if t.kind != "name" or t.text in KEYWORDS:
            if t.kind == "op" and t.text not in "(),;{}":
                raise self.error(f"unexpected operator {t.text!r}")
            raise self.error(f"expected a formula, found {t.text or 'end of input'!r}")
        self.i += 1
        args = []
        if self.at("("):
            self.i += 1
            while True:
                a = self.name()
                if self.at("("):
                    raise self.error("function symbols are not supported")
                args.append(Var(a.text) if a.text in self.bound or a.text in self.implicit else Const(a.text))
                if self.at(","):
                    self.i += 1
                    continue
                self.take(")")
                break
        known = self.arity.setdefault(t.text, len(args))
        if known != len(args):
            raise self.error(f"arity mismatch for {t.text}: used with {known} and {len(args)} arguments", t)
        return Atom(t.text, tuple(args))

    # -- problem files
    def literal(self) -> Formula:
        f = self.unary()
        if isinstance(f, Not) and isinstance(f.body, Atom) or isinstance(f, Atom):
            return f
        raise self.error("expected a literal")

    def clause_literal(self, start: Token) -> Formula:
        """A literal whose single argument, if any, is the clause variable."""
        self.implicit = frozenset(self._names_until(";"))
        try:
            lit = self.literal()
        finally:
            self.implicit = frozenset()
        vs = free_vars(lit)
        if len(vs) > 1:
            raise self.error("clause literal has more than one variable", start)
        atom = lit.body if isinstance(lit, Not) else lit
        if len(atom.args) > 1:
            raise self.error("clause literal must be unary or propositional", start)
        for v in vs:
            lit = rename_free(lit, v, X)
        return lit

    def _names_until(self, stop: str):
        j = self.i
        while self.toks[j].kind != "eof" and self.toks[j].text != stop:
            if self.toks[j].kind == "name" and self.toks[j].text not in KEYWORDS:
                yield self.toks[j].text
            j += 1

    def problem(self) -> tuple:
        parts = {k: [] for k in SECTIONS}
        while self.tok.kind != "eof":
            t = self.name()
            if t.text not in SECTIONS:
                raise self.error(f"unknown section {t.text!r}", t)
            self.take("{")
            while not self.at("}"):
                start = self.tok
                if t.text == "step":
                    lhs = self.clause_literal(start)
                    self.take("=>")
                    self.take("next")
                    rhs = self.clause_literal(start)
                    try:
                        parts["step"].append(StepClause(lhs, rhs))
                    except ProblemError as e:
                        raise self.error(str(e), start) from None
                elif t.text == "eventuality":
                    self.take("sometime")
                    lit = self.clause_literal(start)
                    try:
                        parts["eventuality"].append(EventualityClause(lit))
                    except ProblemError as e:
                        raise self.error(str(e), start) from None
                else:
                    f = self.formula()
                    if free_vars(f):
                        raise self.error("formula must be closed", start)
                    parts[t.text].append(f)
                self.take(";")
            self.take("}")
        return parts


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return f


_SECTION_START = re.compile(r"^\s*(?:[#%][^\n]*\n\s*)*(" + "|".join(SECTIONS) + r")\s*\{")


def looks_like_problem(text: str) -> bool:
    return bool(_SECTION_START.match(text))


def parse_problem(text: str, semantics="constant") -> TemporalProblem | ExtendedProblem:
    """Parse a problem file; returns an :class:`ExtendedProblem` if it has an extended part."""
    p = _Parser(text)
    parts = p.problem()
    try:
        base = TemporalProblem(
            universal=tuple(parts["universal"]),
            initial=tuple(parts["initial"]),
            step=tuple(parts["step"]),
            eventuality=tuple(parts["eventuality"]),
            semantics=semantics,
        )
        if parts["extended"]:
            return ExtendedProblem(base, tuple(parts["extended"]))
    except ProblemError as e:
        raise ParseError(str(e), 1, 1) from None
    return base


def parse(text: str, semantics="constant"):
    """Formula or problem, decided by whether the text starts with a section."""
    if looks_like_problem(text):
        return parse_problem(text, semantics)
    return parse_formula(text)
