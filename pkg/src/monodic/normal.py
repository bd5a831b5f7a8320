"""Negation normal form and syntactic classification."""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    TEMPORAL, Always, And, Atom, Bottom, Exists, Forall, Formula, Iff, Implies, Next, Not, Or,
    Sometime, Top, FALSE, TRUE, Unless, Until, free_vars, subformulae,
)


def nnf(f: Formula) -> Formula:
    """Push negations onto atoms; eliminates ``->`` and ``<->``."""
    if isinstance(f, (Atom, Top, Bottom)):
        return f
    if isinstance(f, Not):
        return _neg(f.body)
    if isinstance(f, And):
        return And(tuple(nnf(c) for c in f.items))
    if isinstance(f, Or):
        return Or(tuple(nnf(c) for c in f.items))
    if isinstance(f, Implies):
        return Or((_neg(f.left), nnf(f.right)))
    if isinstance(f, Iff):
        return nnf(And((Implies(f.left, f.right), Implies(f.right, f.left))))
    if isinstance(f, (Forall, Exists)):
        return type(f)(f.var, nnf(f.body))
    if isinstance(f, (Next, Always, Sometime)):
        return type(f)(nnf(f.body))
    if isinstance(f, (Until, Unless)):
        return type(f)(nnf(f.left), nnf(f.right))
    raise TypeError(f"not a formula: {f!r}")


def _neg(f: Formula) -> Formula:
    """nnf of the negation of ``f``."""
    if isinstance(f, Atom):
        return Not(f)
    if isinstance(f, Top):
        return FALSE
    if isinstance(f, Bottom):
        return TRUE
    if isinstance(f, Not):
        return nnf(f.body)
    if isinstance(f, And):
        return Or(tuple(_neg(c) for c in f.items))
    if isinstance(f, Or):
        return And(tuple(_neg(c) for c in f.items))
    if isinstance(f, Implies):
        return And((nnf(f.left), _neg(f.right)))
    if isinstance(f, Iff):
        return _neg(And((Implies(f.left, f.right), Implies(f.right, f.left))))
    if isinstance(f, Forall):
        return Exists(f.var, _neg(f.body))
    if isinstance(f, Exists):
        return Forall(f.var, _neg(f.body))
    if isinstance(f, Next):
        return Next(_neg(f.body))
    if isinstance(f, Always):
        return Sometime(_neg(f.body))
    if isinstance(f, Sometime):
        return Always(_neg(f.body))
    if isinstance(f, Until):
        # not (a until b)  ==  ~b unless (~a & ~b)
        nb = _neg(f.right)
        return Unless(nb, And((_neg(f.left), nb)))
    if isinstance(f, Unless):
        nb = _neg(f.right)
        return Until(nb, And((_neg(f.left), nb)))
    raise TypeError(f"not a formula: {f!r}")


def is_nnf(f: Formula) -> bool:
    for g in subformulae(f):
        if isinstance(g, (Implies, Iff)):
            return False
        if isinstance(g, Not) and not isinstance(g.body, Atom):
            return False
    return True


@dataclass(frozen=True)
class FormulaClass:
    is_monodic: bool
    is_closed: bool
    is_monadic: bool
    is_ground: bool


def temporal_subformulae(f: Formula) -> list:
    return [g for g in subformulae(f) if isinstance(g, TEMPORAL)]


def classify(f: Formula) -> FormulaClass:
    temporal = temporal_subformulae(f)
    closed = not free_vars(f)
    monadic = all(len(g.args) <= 1 for g in subformulae(f) if isinstance(g, Atom))
    return FormulaClass(
        is_monodic=all(len(free_vars(g)) <= 1 for g in temporal),
        is_closed=closed,
        is_monadic=monadic,
        is_ground=closed and all(not free_vars(g) for g in temporal),
    )
