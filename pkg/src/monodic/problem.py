"""Temporal problems in divided separated normal form."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable

from .syntax import (
    Always, Atom, Const, Formula, Next, Not, Signature, Sometime, Var, conj, forall, implies,
    instantiate, is_temporal_free, free_vars,
)

X = "x"  # the one free variable of non-ground clauses


class Semantics(str, Enum):
    CONSTANT = "constant"
    EXPANDING = "expanding"


class ProblemError(ValueError):
    pass


def is_literal(f: Formula) -> bool:
    return isinstance(f, Atom) or (isinstance(f, Not) and isinstance(f.body, Atom))


def literal_atom(f: Formula) -> Atom:
    return f.body if isinstance(f, Not) else f


def is_positive(f: Formula) -> bool:
    return isinstance(f, Atom)


def literal_name(f: Formula) -> str:
    """Readable tag for a literal, used when inventing predicate names."""
    a = literal_atom(f)
    return ("not" if isinstance(f, Not) else "") + a.pred


def is_unary_literal(f: Formula) -> bool:
    a = literal_atom(f)
    return len(a.args) == 1 and a.args[0] == Var(X)


def is_prop_literal(f: Formula) -> bool:
    return not literal_atom(f).args


def at_const(lit: Formula, c: str) -> Formula:
    return instantiate(lit, X, c)


@dataclass(frozen=True)
class StepClause:
    lhs: Formula
    rhs: Formula

    def __post_init__(self):
        for side in (self.lhs, self.rhs):
            if not is_literal(side):
                raise ProblemError(f"step clause side must be a literal: {side}")
        if is_prop_literal(self.lhs) != is_prop_literal(self.rhs):
            raise ProblemError(f"step clause mixes ground and non-ground literals: {self}")
        if not self.ground and not (is_unary_literal(self.lhs) and is_unary_literal(self.rhs)):
            raise ProblemError(f"non-ground step clause must use unary literals over {X}: {self}")

    @property
    def ground(self) -> bool:
        return is_prop_literal(self.lhs)

    def as_formula(self) -> Formula:
        f = implies(self.lhs, Next(self.rhs))
        return f if self.ground else forall(X, f)

    def __str__(self) -> str:
        return f"{self.lhs} => next {self.rhs}"


@dataclass(frozen=True)
class EventualityClause:
    body: Formula

    def __post_init__(self):
        if not is_literal(self.body):
            raise ProblemError(f"eventuality must be a literal: {self.body}")
        if not (is_prop_literal(self.body) or is_unary_literal(self.body)):
            raise ProblemError(f"eventuality must be a propositional or unary literal over {X}")

    @property
    def ground(self) -> bool:
        return is_prop_literal(self.body)

    def as_formula(self) -> Formula:
        return forall(X, Sometime(self.body))

    def __str__(self) -> str:
        return f"sometime {self.body}"


def _dedup(items: Iterable) -> tuple:
    return tuple(dict.fromkeys(items))


@dataclass(frozen=True)
class TemporalProblem:
    universal: tuple = ()
    initial: tuple = ()
    step: tuple = ()
    eventuality: tuple = ()
    semantics: Semantics = Semantics.CONSTANT
    extra_constants: frozenset = frozenset()

    def __post_init__(self):
        for name in ("universal", "initial", "step", "eventuality"):
            object.__setattr__(self, name, _dedup(getattr(self, name)))
        object.__setattr__(self, "semantics", Semantics(self.semantics))
        object.__setattr__(self, "extra_constants", frozenset(self.extra_constants))
        for f in self.universal + self.initial:
            if not is_temporal_free(f):
                raise ProblemError(f"universal/initial formulae must be temporal-free: {f}")
            if free_vars(f):
                raise ProblemError(f"universal/initial formulae must be closed: {f}")
        lhs = [s.lhs for s in self.step]
        if len(set(lhs)) != len(lhs):
            raise ProblemError("two step clauses share a left-hand side")
        self.signature  # arity consistency check

    @property
    def signature(self) -> Signature:
        sig = Signature.of(
            list(self.universal) + list(self.initial)
            + [s.as_formula() for s in self.step] + [e.as_formula() for e in self.eventuality]
        )
        return Signature(sig.predicates, sig.constants | self.extra_constants)

    @property
    def constants(self) -> list:
        return sorted(self.signature.constants)

    def ground_steps(self) -> list:
        return [s for s in self.step if s.ground]

    def nonground_steps(self) -> list:
        return [s for s in self.step if not s.ground]

    def ground_eventualities(self) -> list:
        return [e for e in self.eventuality if e.ground]

    def nonground_eventualities(self) -> list:
        return [e for e in self.eventuality if not e.ground]

    def temporal_predicates(self) -> list:
        """Unary predicates occurring in the step or eventuality parts."""
        out = set()
        for s in self.step:
            if not s.ground:
                out.update({literal_atom(s.lhs).pred, literal_atom(s.rhs).pred})
        for e in self.eventuality:
            if not e.ground:
                out.add(literal_atom(e.body).pred)
        return sorted(out)

    def temporal_propositions(self) -> list:
        out = set()
        for s in self.step:
            if s.ground:
                out.update({literal_atom(s.lhs).pred, literal_atom(s.rhs).pred})
        for e in self.eventuality:
            if e.ground:
                out.add(literal_atom(e.body).pred)
        return sorted(out)

    def associated_formula(self) -> Formula:
        parts = list(self.initial)
        parts += [Always(u) for u in self.universal]
        parts += [Always(s.as_formula()) for s in self.step]
        parts += [Always(e.as_formula()) for e in self.eventuality]
        return conj(*parts)

    def with_universal(self, extra: Iterable[Formula]) -> "TemporalProblem":
        return replace(self, universal=self.universal + tuple(extra))

    def with_semantics(self, semantics) -> "TemporalProblem":
        return replace(self, semantics=Semantics(semantics))

    def size(self) -> int:
        from .syntax import size

        parts = list(self.universal) + list(self.initial)
        parts += [s.as_formula() for s in self.step] + [e.as_formula() for e in self.eventuality]
        return sum(size(f) for f in parts)


@dataclass(frozen=True)
class ExtendedProblem:
    """A problem plus extra initial-time formulae that may nest ``next``."""

    base: TemporalProblem
    extended: tuple = ()

    def __post_init__(self):
        from .syntax import Unless, Until, subformulae

        for f in self.extended:
            if free_vars(f):
                raise ProblemError(f"extended formulae must be closed: {f}")
            for g in subformulae(f):
                if isinstance(g, (Always, Sometime, Until, Unless)):
                    raise ProblemError(f"only 'next' may occur in the extended part: {f}")


@dataclass(frozen=True)
class LedgerEntry:
    name: str
    arity: int
    definition: Formula
    origin: str

    def __str__(self) -> str:
        return f"{self.name}/{self.arity} [{self.origin}] {self.definition}"


@dataclass
class RenamingLedger:
    """Names introduced by transformations, with what each one stands for."""

    entries: list = field(default_factory=list)
    taken: set = field(default_factory=set)
    counter: int = 0

    def reserve(self, names: Iterable[str]) -> None:
        self.taken.update(names)

    def fresh(self, base: str) -> str:
        if base not in self.taken:
            self.taken.add(base)
            return base
        i = 1
        while f"{base}_{i}" in self.taken:
            i += 1
        self.taken.add(f"{base}_{i}")
        return f"{base}_{i}"

    def surrogate(self) -> str:
        while True:
            self.counter += 1
            name = f"_S{self.counter}"
            if name not in self.taken:
                self.taken.add(name)
                return name

    def record(self, name: str, arity: int, definition: Formula, origin: str) -> None:
        self.entries.append(LedgerEntry(name, arity, definition, origin))

    def __iter__(self):
        return iter(self.entries)

    def lines(self) -> list:
        return [str(e) for e in self.entries]


def ground_instances(lit: Formula, constants: Iterable[str]) -> list:
    return [at_const(lit, c) for c in constants]


def as_const(name: str) -> Const:
    return Const(name)
