"""Derived, merged and full merged step clauses; colour schemes.

Closed sides of clauses quantify over ``y`` so they read cleanly next to the
clause variable ``x``.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .oracle import AbstractStructure
from .problem import X, Semantics, StepClause, TemporalProblem, at_const, literal_atom
from .syntax import (
    TRUE, Formula, Next, Not, atom, conj, disj, exists, forall, implies, instantiate, prop,
    rename_free,
)

Y = "y"


class SchemeLimitExceeded(RuntimeError):
    def __init__(self, limit: int):
        super().__init__(f"more than {limit} colour schemes")
        self.limit = limit


def _at(lit: Formula, var: str) -> Formula:
    return rename_free(lit, X, var)


def _mode(p: TemporalProblem) -> bool:
    """True when the universally quantified derived forms are sound."""
    return p.semantics == Semantics.CONSTANT


# ---------------------------------------------------------------- derived clauses


@dataclass(frozen=True)
class Origin:
    kind: str  # "forall", "exists", "const", "ground"
    const: Optional[str] = None

    def __str__(self) -> str:
        return f"{self.kind}({self.const})" if self.const else self.kind


@dataclass(frozen=True)
class DerivedStepClause:
    lhs: Formula
    rhs: Formula
    origin: Origin
    premises: tuple = ()  # the original step clauses it was built from

    def as_formula(self) -> Formula:
        return implies(self.lhs, Next(self.rhs))

    def __str__(self) -> str:
        return f"{self.lhs} => next {self.rhs}"


def derive_step_clauses(p: TemporalProblem, subset: Iterable[StepClause]) -> list:
    """The derived forms of a non-empty set of non-ground step clauses."""
    subset = tuple(subset)
    if not subset:
        raise ValueError("derived step clauses need a non-empty premise set")
    for s in subset:
        if s.ground or s not in p.step:
            raise ValueError(f"not a non-ground step clause of the problem: {s}")
    out = []
    for s in subset:
        for c in p.constants:
            out.append(DerivedStepClause(at_const(s.lhs, c), at_const(s.rhs, c), Origin("const", c), (s,)))
    out.append(DerivedStepClause(
        exists(Y, conj(*(_at(s.lhs, Y) for s in subset))),
        exists(Y, conj(*(_at(s.rhs, Y) for s in subset))),
        Origin("exists"), subset,
    ))
    if _mode(p):
        out.append(DerivedStepClause(
            forall(Y, disj(*(_at(s.lhs, Y) for s in subset))),
            forall(Y, disj(*(_at(s.rhs, Y) for s in subset))),
            Origin("forall"), subset,
        ))
    return out


def all_derived_step_clauses(p: TemporalProblem) -> list:
    """Derived clauses of every non-empty subset, in subset bitmask order."""
    ng = p.nonground_steps()
    out = []
    for mask in range(1, 1 << len(ng)):
        subset = [s for i, s in enumerate(ng) if mask >> i & 1]
        for d in derive_step_clauses(p, subset):
            if d.origin.kind == "const" and len(subset) > 1:
                continue  # constant instances depend on one clause only
            out.append(d)
    return out


@dataclass(frozen=True)
class MergedDerivedStepClause:
    lhs: Formula
    rhs: Formula
    parts: tuple = ()

    def as_formula(self) -> Formula:
        return implies(self.lhs, Next(self.rhs))

    def __str__(self) -> str:
        return f"{self.lhs} => next {self.rhs}"


def merge(clauses: Iterable) -> MergedDerivedStepClause:
    """Conjoin derived clauses and ground step clauses side by side."""
    clauses = tuple(clauses)
    lhs, rhs = [], []
    for c in clauses:
        if isinstance(c, StepClause):
            if not c.ground:
                raise ValueError(f"only ground step clauses merge directly: {c}")
        lhs.append(c.lhs)
        rhs.append(c.rhs)
    return MergedDerivedStepClause(conj(*lhs), conj(*rhs), clauses)


@dataclass(frozen=True)
class FullMergedStepClause:
    """``forall x (A & A(x) => next (B & B(x)))``."""

    merged: MergedDerivedStepClause
    a: Formula = TRUE  # A(x)
    b: Formula = TRUE  # B(x)

    @property
    def lhs(self) -> Formula:
        return conj(self.merged.lhs, self.a)

    @property
    def rhs(self) -> Formula:
        return conj(self.merged.rhs, self.b)

    @property
    def degenerate(self) -> bool:
        return self.lhs == TRUE and self.rhs == TRUE

    def as_formula(self) -> Formula:
        return forall(X, implies(self.lhs, Next(self.rhs)))

    def __str__(self) -> str:
        return f"{self.lhs} => next {self.rhs}"


def full_merge(m: MergedDerivedStepClause, originals: Iterable[StepClause] = ()) -> FullMergedStepClause:
    originals = tuple(originals)
    for s in originals:
        if s.ground:
            raise ValueError(f"full merging takes non-ground step clauses: {s}")
    return FullMergedStepClause(m, conj(*(s.lhs for s in originals)), conj(*(s.rhs for s in originals)))


def all_full_merged(p: TemporalProblem, limit: int = 1 << 14) -> Iterator[FullMergedStepClause]:
    """Every full merged clause built from a non-empty merge.

    Exponential; meant for cross-checking the canonical clauses on small problems.
    """
    parts = all_derived_step_clauses(p) + p.ground_steps()
    ng = p.nonground_steps()
    if (1 << len(parts)) * (1 << len(ng)) > limit:
        raise SchemeLimitExceeded(limit)
    for mask in range(1, 1 << len(parts)):
        m = merge(c for i, c in enumerate(parts) if mask >> i & 1)
        for omask in range(1 << len(ng)):
            yield full_merge(m, [s for i, s in enumerate(ng) if omask >> i & 1])


# ---------------------------------------------------------------- colours


@dataclass(frozen=True)
class PredicateColour:
    """A total, consistent choice of ``P(x)`` or ``~P(x)`` per predicate."""

    predicates: tuple
    true: frozenset

    def literals(self, var: str = X) -> list:
        return [atom(q, var) if q in self.true else Not(atom(q, var)) for q in self.predicates]

    def formula(self, var: str = X) -> Formula:
        return conj(*self.literals(var))

    def holds(self, lit: Formula) -> bool:
        a = literal_atom(lit)
        return (a.pred in self.true) != isinstance(lit, Not)

    def __str__(self) -> str:
        return "[" + ",".join(q if q in self.true else "~" + q for q in self.predicates) + "]"


@dataclass(frozen=True)
class PropositionalColour:
    props: tuple
    true: frozenset

    def literals(self) -> list:
        return [prop(q) if q in self.true else Not(prop(q)) for q in self.props]

    def formula(self) -> Formula:
        return conj(*self.literals())

    def holds(self, lit: Formula) -> bool:
        return (literal_atom(lit).pred in self.true) != isinstance(lit, Not)

    def __str__(self) -> str:
        return "[" + ",".join(q if q in self.true else "~" + q for q in self.props) + "]"


def predicate_colours(preds) -> list:
    """All colours, the all-positive one first."""
    preds = tuple(preds)
    return [
        PredicateColour(preds, frozenset(q for q, v in zip(preds, bits) if v))
        for bits in itertools.product((True, False), repeat=len(preds))
    ]


def propositional_colours(props) -> list:
    props = tuple(props)
    return [
        PropositionalColour(props, frozenset(q for q, v in zip(props, bits) if v))
        for bits in itertools.product((True, False), repeat=len(props))
    ]


@dataclass(frozen=True)
class ColourScheme:
    gammas: tuple  # PredicateColour, in enumeration order
    theta: PropositionalColour
    rho: tuple = ()  # (constant, PredicateColour)

    def colour_of(self, c: str) -> PredicateColour:
        return dict(self.rho)[c]

    def structure(self) -> AbstractStructure:
        preds = self.gammas[0].predicates
        return AbstractStructure(
            preds, frozenset(g.true for g in self.gammas), self.theta.true,
            tuple((c, g.true) for c, g in self.rho), self.theta.props,
        )

    def __str__(self) -> str:
        parts = ["{" + " ".join(str(g) for g in self.gammas) + "}"]
        if self.theta.props:
            parts.append(str(self.theta))
        parts += [f"{c}:{g}" for c, g in self.rho]
        return " ".join(parts)


def scheme_vocabulary(p: TemporalProblem) -> tuple:
    return tuple(p.temporal_predicates()), tuple(p.temporal_propositions()), tuple(p.constants)


def count_schemes(p: TemporalProblem) -> int:
    preds, props, consts = scheme_vocabulary(p)
    ncol = 1 << len(preds)
    total = sum(
        len(g) ** len(consts) for g in _subsets(range(ncol))
    ) if consts else (1 << ncol) - 1
    return total << len(props)


def _subsets(items) -> Iterator[tuple]:
    items = list(items)
    for mask in range(1, 1 << len(items)):
        yield tuple(x for i, x in enumerate(items) if mask >> i & 1)


def colour_schemes(p: TemporalProblem, limit: Optional[int] = None) -> Iterator[ColourScheme]:
    """Propositional colour outermost, then colour sets in bitmask order, then constant maps."""
    preds, props, consts = scheme_vocabulary(p)
    if limit is not None and count_schemes(p) > limit:
        raise SchemeLimitExceeded(limit)
    colours = predicate_colours(preds)
    for theta in propositional_colours(props):
        for gammas in _subsets(colours):
            for choice in itertools.product(gammas, repeat=len(consts)):
                yield ColourScheme(gammas, theta, tuple(zip(consts, choice)))


# ---------------------------------------------------------------- categorical formulae


def _step_maps(p: TemporalProblem) -> tuple:
    ng = {s.lhs: s.rhs for s in p.nonground_steps()}
    gr = {s.lhs: s.rhs for s in p.ground_steps()}
    return ng, gr


def colour_sides(g: PredicateColour, p: TemporalProblem, var: str = X) -> tuple:
    """``(A_g, B_g)`` over ``var``: the step clauses whose lhs is in the colour."""
    ng, _ = _step_maps(p)
    hit = [(l, r) for l, r in ng.items() if g.holds(l)]
    return conj(*(_at(l, var) for l, _ in hit)), conj(*(_at(r, var) for _, r in hit))


def theta_sides(t: PropositionalColour, p: TemporalProblem) -> tuple:
    _, gr = _step_maps(p)
    hit = [(l, r) for l, r in gr.items() if t.holds(l)]
    return conj(*(l for l, _ in hit)), conj(*(r for _, r in hit))


@dataclass(frozen=True)
class CategoricalTriple:
    f: Formula
    a: Formula
    b: Formula


def _closed_sides(pairs, theta_side, const_sides, constant: bool) -> Formula:
    parts = [exists(Y, s) for s in pairs]
    parts.append(theta_side)
    parts += const_sides
    if constant:
        parts.append(forall(Y, disj(*pairs)))
    return conj(*parts)


def categorical(c: ColourScheme, p: TemporalProblem) -> CategoricalTriple:
    f = conj(
        *(exists(Y, g.formula(Y)) for g in c.gammas),
        c.theta.formula(),
        *(_const_formula(g.formula(), k) for k, g in c.rho),
        forall(Y, disj(*(g.formula(Y) for g in c.gammas))),
    )
    sides = [colour_sides(g, p, Y) for g in c.gammas]
    ta, tb = theta_sides(c.theta, p)
    ca = [_const_formula(colour_sides(g, p)[0], k) for k, g in c.rho]
    cb = [_const_formula(colour_sides(g, p)[1], k) for k, g in c.rho]
    constant = _mode(p)
    a = _closed_sides([s[0] for s in sides], ta, ca, constant)
    b = _closed_sides([s[1] for s in sides], tb, cb, constant)
    return CategoricalTriple(f, a, b)


def _const_formula(f: Formula, c: str) -> Formula:
    return instantiate(f, X, c)


def canonical_full(c: ColourScheme, g: PredicateColour, p: TemporalProblem) -> FullMergedStepClause:
    if g not in c.gammas:
        raise ValueError(f"colour {g} is not realised in scheme {c}")
    t = categorical(c, p)
    a, b = colour_sides(g, p)
    return FullMergedStepClause(MergedDerivedStepClause(t.a, t.b), a, b)


# ---------------------------------------------------------------- canonical clauses by projection


def _keys(lhs_lits) -> list:
    """Every way a colour can meet the given left-hand-side literals.

    Predicates are independent; a predicate with both polarities as left-hand
    sides always meets exactly one of them.
    """
    by_pred: dict = {}
    for l in lhs_lits:
        by_pred.setdefault(literal_atom(l).pred, []).append(l)
    options = []
    for q in sorted(by_pred):
        ls = sorted(by_pred[q])
        options.append(ls if len(ls) == 2 else [ls[0], None])
    out = []
    for pick in itertools.product(*options):
        out.append(tuple(sorted(l for l in pick if l is not None)))
    return sorted(out, key=lambda k: (len(k), k))


@dataclass(frozen=True)
class CanonicalClause:
    """A canonical full merged clause with the scheme projection it came from."""

    clause: FullMergedStepClause
    scheme: tuple  # (colour keys, theta key, constant keys)
    key: tuple  # the colour key of the clause variable, None for merged-only


def canonical_clauses(p: TemporalProblem, limit: int = 1 << 16) -> tuple:
    """All distinct canonical merged and canonical full merged clauses.

    Canonical clauses only depend on which step-clause left-hand sides each
    colour contains, so schemes are enumerated over that projection.
    Returns ``(merged, full)``.
    """
    ng, gr = _step_maps(p)
    constant = _mode(p)
    keys = _keys(list(ng))
    tkeys = _keys(list(gr))
    consts = p.constants

    @functools.lru_cache(maxsize=None)
    def a_of(k, var):
        return conj(*(_at(l, var) for l in k))

    @functools.lru_cache(maxsize=None)
    def b_of(k, var):
        return conj(*(_at(ng[l], var) for l in k))

    @functools.lru_cache(maxsize=None)
    def at_c(f, c):
        return _const_formula(f, c)

    merged: dict = {}
    full: dict = {}
    count = 0
    for tk in tkeys:
        ta, tb = conj(*tk), conj(*(gr[l] for l in tk))
        for ks in _subsets(keys):
            for ck in itertools.product(ks, repeat=len(consts)):
                count += 1
                if count > limit:
                    raise SchemeLimitExceeded(limit)
                ca = [at_c(a_of(k, X), c) for c, k in zip(consts, ck)]
                cb = [at_c(b_of(k, X), c) for c, k in zip(consts, ck)]
                a = _closed_sides([a_of(k, Y) for k in ks], ta, ca, constant)
                b = _closed_sides([b_of(k, Y) for k in ks], tb, cb, constant)
                m = MergedDerivedStepClause(a, b)
                proj = (ks, tk, ck)
                merged.setdefault((a, b), CanonicalClause(FullMergedStepClause(m), proj, None))
                for k in ks:
                    fc = FullMergedStepClause(m, a_of(k, X), b_of(k, X))
                    full.setdefault((fc.lhs, fc.rhs), CanonicalClause(fc, proj, k))
    return list(merged.values()), list(full.values())
