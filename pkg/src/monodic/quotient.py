"""Side conditions answered over the finitely many reducts of a universal part.

A closed sentence over the temporal vocabulary (step and eventuality
predicates, propositions, constants) is satisfiable together with ``U`` iff it
holds in one of the reducts of models of ``U`` to that vocabulary.  The
reducts are computed once with the SAT-based oracle; afterwards every query
is a bitmask evaluation, and every new universal formula over the vocabulary
simply removes reducts.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .oracle import OracleBudgetExceeded, OracleContext
from .syntax import (
    Atom, Bottom, Exists, Forall, Formula, Iff, Implies, Not, Or, And, Signature, Top, Var,
    forall, free_vars, neg, subformulae,
)


class OutsideVocabulary(ValueError):
    pass


class SchemeSpace:
    """Reducts as vertices; (reduct, realised colour) pairs as points."""

    def __init__(self, structures: list, preds, props, consts):
        self.structures = structures
        self.preds, self.props, self.consts = tuple(preds), frozenset(props), tuple(consts)
        self.colours = [sorted(s.realized, key=sorted) for s in structures]
        self.vrange = []
        self.point_colour = []
        for cols in self.colours:
            start = len(self.point_colour)
            self.point_colour += cols
            self.vrange.append(((1 << len(cols)) - 1) << start)
        self.nv = len(structures)
        self.all_v = (1 << self.nv) - 1
        self.all_p = (1 << len(self.point_colour)) - 1
        self.memo: dict = {}

    def lift(self, vmask: int) -> int:
        out = 0
        for i, r in enumerate(self.vrange):
            if vmask >> i & 1:
                out |= r
        return out

    def project(self, pmask: int) -> int:
        out = 0
        for i, r in enumerate(self.vrange):
            if pmask & r:
                out |= 1 << i
        return out

    def covers(self, f: Formula) -> bool:
        for g in _atoms(f):
            if not g.args:
                if g.pred not in self.props:
                    return False
            elif len(g.args) > 1 or g.pred not in self.preds:
                return False
            elif not isinstance(g.args[0], Var) and g.args[0].name not in self.consts:
                return False
        return True

    def eval(self, f: Formula) -> tuple:
        """``("v", vertex mask)`` for sentences, ``("p", point mask)`` for one free variable."""
        hit = self.memo.get(f)
        if hit is None:
            hit = self._eval(f)
            self.memo[f] = hit
        return hit

    def _as(self, r: tuple, kind: str) -> int:
        if r[0] == kind:
            return r[1]
        return self.lift(r[1])

    def _eval(self, f: Formula) -> tuple:
        fv = free_vars(f)
        if len(fv) > 1:
            raise OutsideVocabulary(f"more than one free variable: {f}")
        kind = "p" if fv else "v"
        full = self.all_p if fv else self.all_v
        if isinstance(f, Top):
            return ("v", self.all_v)
        if isinstance(f, Bottom):
            return ("v", 0)
        if isinstance(f, Atom):
            if not f.args:
                return ("v", sum(1 << i for i, s in enumerate(self.structures) if f.pred in s.props))
            t = f.args[0]
            if isinstance(t, Var):
                return ("p", sum(1 << j for j, c in enumerate(self.point_colour) if f.pred in c))
            return ("v", sum(
                1 << i for i, s in enumerate(self.structures) if f.pred in dict(s.constants)[t.name]
            ))
        if isinstance(f, Not):
            return (kind, full & ~self._as(self.eval(f.body), kind))
        if isinstance(f, And):
            m = full
            for c in f.items:
                m &= self._as(self.eval(c), kind)
                if not m:
                    break
            return (kind, m)
        if isinstance(f, Or):
            m = 0
            for c in f.items:
                m |= self._as(self.eval(c), kind)
            return (kind, m)
        if isinstance(f, Implies):
            a, b = self._as(self.eval(f.left), kind), self._as(self.eval(f.right), kind)
            return (kind, (full & ~a) | b)
        if isinstance(f, Iff):
            a, b = self._as(self.eval(f.left), kind), self._as(self.eval(f.right), kind)
            return (kind, full & ~(a ^ b))
        if isinstance(f, (Exists, Forall)):
            if fv:
                raise OutsideVocabulary(f"quantifier under a free variable: {f}")
            r = self.eval(f.body)
            if r[0] == "v":
                return r
            if isinstance(f, Exists):
                return ("v", self.project(r[1]))
            return ("v", self.all_v & ~self.project(self.all_p & ~r[1]))
        raise OutsideVocabulary(f"not a first-order formula: {f}")


def _atoms(f: Formula):
    return (g for g in subformulae(f) if isinstance(g, Atom))


def reduct_bound(preds, props, consts) -> int:
    """Upper bound on the number of reducts to a vocabulary."""
    ncol = 1 << len(preds)
    if ncol > 16:
        return 1 << 64
    return ((1 << ncol) - 1) * (ncol ** len(consts)) << len(props)


class QuotientOracle:
    """Growing universal part answering closed and one-variable queries.

    Small vocabularies go through :class:`SchemeSpace`; past ``max_reducts``
    every query is a call on one incremental :class:`OracleContext`.
    """

    def __init__(self, universal: Iterable[Formula], preds, props, consts, stats: Optional[dict] = None,
                 max_reducts: int = 4096):
        self.universal = list(universal)
        self.preds, self.props, self.consts = tuple(preds), tuple(props), tuple(consts)
        self.stats = stats if stats is not None else {}
        self.max_reducts = max_reducts
        self._ctx: Optional[OracleContext] = None
        self.space: Optional[SchemeSpace] = None
        if reduct_bound(self.preds, self.props, self.consts) <= max_reducts:
            self._project()

    def _project(self):
        ctx = OracleContext(self.universal, stats=self.stats)
        self.space = SchemeSpace(ctx.project(self.preds, self.props, self.consts), self.preds, self.props,
                                 self.consts)
        ctx.close()
        self.alive = self.space.all_v

    @property
    def vocabulary(self) -> Signature:
        return Signature(
            tuple(sorted([(p, 1) for p in self.preds] + [(p, 0) for p in self.props])), frozenset(self.consts)
        )

    def _fallback(self) -> OracleContext:
        if self._ctx is None:
            self._ctx = OracleContext(self.universal, vocabulary=self.vocabulary, stats=self.stats)
        return self._ctx

    def _tick(self):
        self.stats["queries"] = self.stats.get("queries", 0) + 1
        budget = self.stats.get("budget")
        if budget is not None and self.stats["queries"] > budget:
            raise OracleBudgetExceeded(budget)

    def _fast(self, f: Formula) -> Optional[bool]:
        sp = self.space
        if sp is None or not sp.covers(f):
            return None
        try:
            return bool(sp._as(sp.eval(f), "v") & self.alive)
        except OutsideVocabulary:
            return None

    def satisfiable(self, f: Formula) -> bool:
        r = self._fast(f)
        if r is not None:
            self._tick()
            return r
        return self._fallback().satisfiable(f)

    def satisfiable_members(self, formulas) -> list:
        formulas = list(formulas)
        out = [self._fast(f) for f in formulas]
        rest = [i for i, r in enumerate(out) if r is None]
        if len(rest) < len(formulas):
            self._tick()
        if rest:
            for i, r in zip(rest, self._fallback().satisfiable_members([formulas[i] for i in rest])):
                out[i] = r
        return out

    def entails(self, goal: Formula) -> bool:
        return not self.satisfiable(neg(goal))

    def implies_open(self, a: Formula, b: Formula) -> bool:
        """``U |= forall x (a -> b)`` for formulae with at most the free variable ``x``."""
        sp = self.space
        if sp is not None and sp.covers(a) and sp.covers(b):
            try:
                pa, pb = sp._as(sp.eval(a), "p"), sp._as(sp.eval(b), "p")
            except OutsideVocabulary:
                pass
            else:
                self._tick()
                return not (pa & ~pb & self._alive_points())
        f: Formula = Implies(a, b)
        for v in sorted(free_vars(f)):
            f = forall(v, f)
        return self.entails(f)

    def _alive_points(self) -> int:
        key = ("alive-points", self.alive)
        hit = self.space.memo.get(key)
        if hit is None:
            hit = self.space.lift(self.alive)
            self.space.memo[key] = hit
        return hit

    def consistent(self) -> bool:
        if self.space is not None:
            return self.alive != 0
        return self._fallback().satisfiable(Top())

    def add(self, f: Formula) -> None:
        self.universal.append(f)
        if self._ctx is not None:
            self._ctx.assert_(f)
        if self.space is None:
            return
        if self.space.covers(f):
            try:
                self.alive &= self.space._as(self.space.eval(f), "v")
                return
            except OutsideVocabulary:
                pass
        self._project()

    def alive_structures(self) -> list:
        if self.space is None:
            return []
        return [s for i, s in enumerate(self.space.structures) if self.alive >> i & 1]

    def close(self):
        if self._ctx is not None:
            self._ctx.close()
            self._ctx = None
