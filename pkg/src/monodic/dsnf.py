"""Reduction of monodic formulae to temporal problems, and problem-level reductions."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .clauses import all_derived_step_clauses
from .normal import classify, nnf
from .problem import (
    X, EventualityClause, ExtendedProblem, RenamingLedger, Semantics, StepClause, TemporalProblem,
    at_const, is_literal, literal_atom, literal_name,
)
from .syntax import (
    FALSE, TEMPORAL, TRUE, Always, And, Atom, Bottom, Exists, Forall, Formula, Iff, Next, Not, Or,
    Sometime, Top, Unless, Until, atom, conj, disj, exists, forall, free_vars, implies, neg, prop,
    Signature, children, rebuild, rename_free, size, subformulae,
)


class DsnfError(ValueError):
    pass


class ReductionLimit(RuntimeError):
    pass


@dataclass(frozen=True)
class DsnfResult:
    problem: TemporalProblem
    ledger: RenamingLedger
    input_size: int
    output_size: int

    @property
    def ratio(self) -> float:
        return self.output_size / max(1, self.input_size)

    def __iter__(self):
        return iter((self.problem, self.ledger))


def _is_clause_literal(f: Formula) -> bool:
    return is_literal(f) and literal_atom(f).args in ((), (_X_TERM,))


_X_TERM = atom("P", X).args[0]


def _close(f: Formula) -> Formula:
    return forall(X, f)


class _Builder:
    def __init__(self, ledger: RenamingLedger):
        self.ledger = ledger
        self.universal: list = []
        self.pending: dict = {}  # step lhs -> list of rhs bodies
        self.events: list = []
        self.renamed: dict = {}  # FO formula -> literal
        self.surrogates: dict = {}  # temporal formula over x -> surrogate

    def fresh(self, base: str, arity: int, definition: Formula, origin: str) -> Formula:
        name = self.ledger.fresh(base)
        self.ledger.record(name, arity, definition, origin)
        return atom(name, X) if arity else prop(name)

    def add_universal(self, f: Formula) -> None:
        f = _close(f)
        if f != TRUE:
            self.universal.append(f)

    # -- renaming
    def walk(self, g: Formula) -> Formula:
        if isinstance(g, (Atom, Top, Bottom, Not)):
            return g
        if isinstance(g, And):
            return conj(*(self.walk(c) for c in g.items))
        if isinstance(g, Or):
            return disj(*(self.walk(c) for c in g.items))
        if isinstance(g, (Forall, Exists)):
            return type(g)(g.var, self.walk(g.body))
        if isinstance(g, TEMPORAL):
            return self.name_temporal(rebuild(g, tuple(self.walk(c) for c in children(g))))
        raise DsnfError(f"unexpected node after negation normal form: {g}")

    def name_temporal(self, node: Formula) -> Formula:
        fv = sorted(free_vars(node))
        if len(fv) > 1:
            raise DsnfError(f"temporal subformula with more than one free variable: {node}")
        canon = rename_free(node, fv[0], X) if fv else node
        sur = self.surrogates.get(canon)
        if sur is None:
            name = self.ledger.surrogate()
            sur = atom(name, X) if fv else prop(name)
            self.ledger.record(name, len(fv), implies(sur, canon), "surrogate")
            self.surrogates[canon] = sur
            self.define(sur, canon)
        return rename_free(sur, X, fv[0]) if fv else sur

    def lit(self, f: Formula) -> Formula:
        """A clause literal standing for the first-order formula ``f``."""
        if _is_clause_literal(f):
            return f
        hit = self.renamed.get(f)
        if hit is None:
            hit = self.fresh("_Q", 1 if X in free_vars(f) else 0, f, "first-order renaming")
            self.add_universal(implies(hit, f))
            self.renamed[f] = hit
        return hit

    def lift(self, lhs: Formula) -> Formula:
        """Ground stand-in for ``exists x lhs``, used when a clause has a ground right side."""
        g = self.fresh("_G", 0, exists(X, lhs), "ground lift")
        self.add_universal(implies(lhs, g))
        return g

    # -- definitional forms
    def define(self, lhs: Formula, t: Formula) -> None:
        if isinstance(t, Next):
            self.step(lhs, t.body)
        elif isinstance(t, Sometime):
            self.conditional_eventuality(lhs, t.body)
        elif isinstance(t, Always):
            arity = 1 if X in free_vars(lhs) else 0
            r = self.fresh("_R", arity, Always(t.body), "always fixpoint")
            self.add_universal(implies(lhs, r))
            self.add_universal(implies(r, t.body))
            self.step(r, r)
        elif isinstance(t, (Until, Unless)):
            a, b = self.lit(t.left), self.lit(t.right)
            if isinstance(t, Until):
                self.conditional_eventuality(lhs, b)
            arity = 1 if X in free_vars(lhs) else 0
            s = self.fresh("_U", arity, t, "until fixpoint")
            self.add_universal(implies(lhs, disj(a, b)))
            self.add_universal(implies(lhs, disj(s, b)))
            self.step(s, disj(a, b))
            self.step(s, disj(s, b))
        else:
            raise DsnfError(f"not a temporal formula: {t}")

    def step(self, lhs: Formula, body: Formula) -> None:
        self.pending.setdefault(lhs, []).append(body)

    def conditional_eventuality(self, lhs: Formula, body: Formula) -> None:
        if body == TRUE:
            return
        if body == FALSE:
            self.add_universal(neg(lhs))
            return
        l = self.lit(body)
        if X in free_vars(lhs) and X not in free_vars(l):
            lhs = self.lift(lhs)
        arity = 1 if X in free_vars(l) else 0
        w = self.fresh(f"_waitfor_{literal_name(l)}", arity, Sometime(l), "waitfor")
        self.add_universal(implies(conj(lhs, neg(l)), w))
        self.step(w, disj(l, w))
        self.events.append(EventualityClause(neg(w)))

    def finish(self) -> list:
        steps = []
        for lhs, bodies in self.pending.items():
            body = conj(*bodies)
            if body == TRUE:
                continue
            if body == FALSE:
                self.add_universal(neg(lhs))
                continue
            m = self.lit(body)
            if X in free_vars(lhs) and X not in free_vars(m):
                lhs = self.lift(lhs)
            steps.append(StepClause(lhs, m))
        return steps


def to_dsnf(phi: Formula, semantics=Semantics.CONSTANT, ledger: Optional[RenamingLedger] = None) -> DsnfResult:
    """Satisfiability-preserving reduction of a closed monodic formula to a temporal problem."""
    if free_vars(phi):
        raise DsnfError("the formula must be closed")
    if not classify(phi).is_monodic:
        raise DsnfError("the formula is not monodic")
    ledger = ledger or RenamingLedger()
    ledger.reserve(n for n, _ in Signature.of([phi]).predicates)
    ledger.reserve(Signature.of([phi]).constants)
    b = _Builder(ledger)
    top = b.walk(nnf(phi))
    steps = b.finish()
    problem = TemporalProblem(
        universal=tuple(b.universal),
        initial=() if top == TRUE else (top,),
        step=tuple(steps),
        eventuality=tuple(b.events),
        semantics=semantics,
    )
    return DsnfResult(problem, ledger, size(phi), problem.size())


def problem_to_dsnf(p: TemporalProblem, ledger: Optional[RenamingLedger] = None) -> TemporalProblem:
    """Already a problem: only reserve its names in the ledger."""
    if ledger is not None:
        ledger.reserve(n for n, _ in p.signature.predicates)
    return p


# ---------------------------------------------------------------- flooding


def _ledger_for(p: TemporalProblem, ledger: Optional[RenamingLedger]) -> RenamingLedger:
    ledger = ledger or RenamingLedger()
    ledger.reserve(n for n, _ in p.signature.predicates)
    ledger.reserve(p.signature.constants)
    return ledger


def _flood_definitions(p: TemporalProblem) -> set:
    """Ground literals already standing behind a ground eventuality."""
    ground = {literal_atom(e.body).pred for e in p.ground_eventualities() if not isinstance(e.body, Not)}
    out = set()
    for u in p.universal:
        if isinstance(u, Iff) and isinstance(u.left, Atom) and not u.left.args and u.left.pred in ground:
            out.add(u.right)
    return out


def flood_constants(p: TemporalProblem, ledger: Optional[RenamingLedger] = None) -> TemporalProblem:
    """Add a renamed ground eventuality for every constant instance of a non-ground one."""
    consts = p.constants
    if not consts or not p.nonground_eventualities():
        return p
    ledger = _ledger_for(p, ledger)
    done = _flood_definitions(p)
    universal, events = list(p.universal), list(p.eventuality)
    for e in p.nonground_eventualities():
        for c in consts:
            inst = at_const(e.body, c)
            if inst in done:
                continue
            name = ledger.fresh(f"_ev_{literal_name(e.body)}_{c}")
            ledger.record(name, 0, inst, "constant flooding")
            universal.append(Iff(prop(name), inst))
            events.append(EventualityClause(prop(name)))
            done.add(inst)
    return replace(p, universal=tuple(universal), eventuality=tuple(events))


def is_flooded(p: TemporalProblem) -> bool:
    done = _flood_definitions(p)
    return all(at_const(e.body, c) in done for e in p.nonground_eventualities() for c in p.constants)


# ---------------------------------------------------------------- nested next


def _map_preds(f: Formula, fn) -> Formula:
    if isinstance(f, Atom):
        return Atom(fn(f.pred), f.args)
    if isinstance(f, (Top, Bottom)):
        return f
    return rebuild(f, tuple(_map_preds(c, fn) for c in children(f)))


def next_depth(f: Formula) -> int:
    if isinstance(f, Next):
        return 1 + next_depth(f.body)
    return max((next_depth(c) for c in children(f)), default=0)


def _unfold_next(f: Formula, names: dict, depth: int = 0) -> Formula:
    if isinstance(f, Next):
        return _unfold_next(f.body, names, depth + 1)
    if isinstance(f, Atom):
        return Atom(names[f.pred][depth], f.args)
    if isinstance(f, (Top, Bottom)):
        return f
    return rebuild(f, tuple(_unfold_next(c, names, depth) for c in children(f)))


def _vars(arity: int) -> list:
    return [X] if arity == 1 else [f"x{i + 1}" for i in range(arity)]


def _generic(pred: str, arity: int) -> Formula:
    return atom(pred, *_vars(arity)) if arity else prop(pred)


def reduce_extended(xp: ExtendedProblem, ledger: Optional[RenamingLedger] = None) -> TemporalProblem:
    """Encode the first few states described by nested ``next`` into the initial part."""
    base = xp.base
    for f in xp.extended:
        for g in subformulae(f):
            if isinstance(g, (Always, Sometime, Until, Unless)):
                raise DsnfError(f"only 'next' may occur in the extended part: {f}")
    k = max((next_depth(f) for f in xp.extended), default=0)
    sig = base.signature.merge(Signature.of(xp.extended))
    ledger = _ledger_for(base, ledger)
    ledger.reserve(n for n, _ in sig.predicates)
    names = {}
    for pred, arity in sig.predicates:
        names[pred] = [ledger.fresh(f"{pred}_t{i}") for i in range(k + 1)]
        for i, n in enumerate(names[pred]):
            ledger.record(n, arity, _generic(pred, arity), f"copy of {pred} at state {i}")

    def shift(f, i):
        return _map_preds(f, lambda q: names[q][i])

    initial = [shift(f, 0) for f in base.initial]
    for u in base.universal:
        initial += [shift(u, i) for i in range(k + 1)]
    for s in base.step:
        for i in range(k):
            initial.append(_close(implies(shift(s.lhs, i), shift(s.rhs, i + 1))))
    initial += [_unfold_next(f, names) for f in xp.extended]
    for pred, arity in sig.predicates:
        link = Iff(_generic(pred, arity), _generic(names[pred][k], arity))
        for v in reversed(_vars(arity) if arity else []):
            link = Forall(v, link)
        initial.append(link)
    return replace(base, initial=tuple(initial))


# ---------------------------------------------------------------- grounding


def grounding_clauses(p: TemporalProblem, limit: int = 1 << 12) -> list:
    """The derived step clauses that replace the non-ground step clauses."""
    derived = all_derived_step_clauses(p)
    if len(derived) > limit:
        raise ReductionLimit(f"{len(derived)} derived step clauses exceed the limit of {limit}")
    return derived


def reduce_ground_eventuality(p: TemporalProblem, ledger: Optional[RenamingLedger] = None,
                              limit: int = 1 << 12) -> TemporalProblem:
    """With only ground eventualities, trade non-ground step clauses for ground ones."""
    if p.nonground_eventualities():
        raise DsnfError("all eventualities must be ground")
    if not p.nonground_steps():
        return p
    ledger = _ledger_for(p, ledger)
    universal = list(p.universal)
    steps = list(p.ground_steps())
    for d in grounding_clauses(p, limit):
        a = ledger.surrogate()
        b = ledger.surrogate()
        ledger.record(a, 0, d.lhs, f"derived lhs ({d.origin})")
        ledger.record(b, 0, d.rhs, f"derived rhs ({d.origin})")
        universal += [Iff(prop(a), d.lhs), Iff(prop(b), d.rhs)]
        steps.append(StepClause(prop(a), prop(b)))
    return replace(p, universal=tuple(universal), step=tuple(steps))


def reduce_ground_next_time(p: TemporalProblem, ledger: Optional[RenamingLedger] = None) -> TemporalProblem:
    """With only ground step clauses, weaken each non-ground eventuality to its existential form."""
    if p.nonground_steps():
        raise DsnfError("all step clauses must be ground")
    if not p.nonground_eventualities():
        return p
    ledger = _ledger_for(p, ledger)
    flooded = flood_constants(p, ledger)
    universal = list(flooded.universal)
    events = [e for e in flooded.eventuality if e.ground]
    for e in p.nonground_eventualities():
        name = ledger.fresh(f"_some_{literal_name(e.body)}")
        body = exists(X, e.body)
        ledger.record(name, 0, body, "existential eventuality")
        universal.append(Iff(prop(name), body))
        events.append(EventualityClause(prop(name)))
    return replace(p, universal=tuple(universal), eventuality=tuple(events))
