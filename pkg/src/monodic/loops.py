"""Breadth-first loop search for eventuality resolution.

A full merged clause is a set of parts: derived step clauses (and ground step
clauses) on the merged side, original non-ground clauses on the ``x`` side.
Adding parts strengthens both sides, so the clauses meeting a search
iteration's condition are closed under supersets and their left-hand sides
only matter through the minimal qualifying part sets.  Those are enumerated
with a map solver over part-selection variables, blocking supersets of every
minimal set found and subsets of every maximal failing set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from pysat.solvers import Solver

from .clauses import (
    CanonicalClause, FullMergedStepClause, all_derived_step_clauses, full_merge, merge, scheme_vocabulary,
)
from .problem import X, EventualityClause, TemporalProblem
from .quotient import QuotientOracle
from .syntax import FALSE, TRUE, And, Formula, conj, disj, exists, forall, neg


class LoopLimit(RuntimeError):
    def __init__(self, limit: int):
        super().__init__(f"loop search did not converge within {limit} iterations")
        self.limit = limit


@dataclass(frozen=True)
class LoopSearchState:
    """``N_i`` after pruning and the formula ``H_i`` built from it."""

    iteration: int
    formula: Formula
    clauses: tuple  # CanonicalClause
    candidates: int  # size of N_i before pruning


@dataclass(frozen=True)
class Loop:
    eventuality: EventualityClause
    formula: Formula
    clauses: tuple
    iterations: tuple = ()

    @property
    def ground(self) -> bool:
        return self.eventuality.ground

    @property
    def degenerate(self) -> bool:
        return self.formula == TRUE

    def conclusion(self) -> Formula:
        return neg(self.formula) if self.ground else forall(X, neg(self.formula))


@dataclass(frozen=True)
class NoLoop:
    eventuality: EventualityClause
    iterations: tuple = ()


def _conjuncts(f: Formula) -> frozenset:
    if f == TRUE:
        return frozenset()
    return frozenset(f.items) if isinstance(f, And) else frozenset((f,))


def prune_candidates(clauses, implies: Optional[Callable] = None, oracle_limit: int = 64) -> list:
    """Drop clauses whose left-hand side implies another one's.

    ``implies(a, b)`` decides ``forall x (a -> b)``; without it only
    syntactic conjunct containment is used, as it is above ``oracle_limit``
    candidates.  Among equivalent left-hand sides the earliest survives, so
    the disjunction of what is kept is equivalent to that of the input.
    """
    clauses = list(clauses)
    lhs = [_lhs(c) for c in clauses]
    parts = [_conjuncts(a) for a in lhs]
    use_oracle = implies is not None and len(clauses) <= oracle_limit
    memo: dict = {}

    def le(i, j):
        r = memo.get((i, j))
        if r is None:
            r = parts[i] >= parts[j] or (use_oracle and bool(implies(lhs[i], lhs[j])))
            memo[(i, j)] = r
        return r

    kept = []
    for i in range(len(clauses)):
        if not any(j != i and le(i, j) and (j < i or not le(j, i)) for j in range(len(clauses))):
            kept.append(clauses[i])
    return kept


def _lhs(c) -> Formula:
    return c.clause.lhs if isinstance(c, CanonicalClause) else c.lhs


def _oracle_for(p: TemporalProblem, oracle) -> QuotientOracle:
    if oracle is not None:
        return oracle
    return QuotientOracle(p.universal, *scheme_vocabulary(p))


class ClauseLattice:
    """Full merged clauses as bitmasks over derived parts followed by original clauses."""

    def __init__(self, p: TemporalProblem, ground: bool = False):
        self.derived = all_derived_step_clauses(p) + p.ground_steps()
        self.originals = [] if ground else p.nonground_steps()
        self.n = len(self.derived) + len(self.originals)
        self.nd = len(self.derived)
        self.memo: dict = {}

    def clause(self, mask: int) -> FullMergedStepClause:
        hit = self.memo.get(mask)
        if hit is None:
            m = merge(d for i, d in enumerate(self.derived) if mask >> i & 1)
            hit = full_merge(m, [s for i, s in enumerate(self.originals) if mask >> (self.nd + i) & 1])
            self.memo[mask] = hit
        return hit

    def minimal(self, qualifies: Callable) -> list:
        """Minimal masks (with at least one derived part) whose clause qualifies, in mask order."""
        if not self.nd:
            return []
        full = (1 << self.n) - 1
        out = []
        solver = Solver(name="m22")
        try:
            solver.add_clause(list(range(1, self.nd + 1)))
            solver.set_phases(list(range(1, self.n + 1)))
            while solver.solve():
                seed = sum(1 << (v - 1) for v in solver.get_model() if v > 0)
                if qualifies(self.clause(seed)):
                    for i in range(self.n):
                        smaller = seed & ~(1 << i)
                        if seed >> i & 1 and smaller & ((1 << self.nd) - 1) and qualifies(self.clause(smaller)):
                            seed = smaller
                    out.append(seed)
                    solver.add_clause([-(i + 1) for i in range(self.n) if seed >> i & 1])
                else:
                    for i in range(self.n):
                        bigger = seed | 1 << i
                        if bigger != seed and not qualifies(self.clause(bigger)):
                            seed = bigger
                    if seed == full:
                        break
                    solver.add_clause([i + 1 for i in range(self.n) if not seed >> i & 1])
        finally:
            solver.delete()
        return [self.clause(m) for m in sorted(out)]


def _search(p, ev, q, clauses, prune, max_iter, ground, skip_vacuous):
    lit = ev.body
    lattice = ClauseLattice(p, ground) if clauses is None else None
    pool = None if clauses is None else list(clauses)
    h: Formula = TRUE
    history = []
    if ground:
        def implies(a, b):
            return q.entails(disj(neg(a), b))
    else:
        implies = q.implies_open
    for i in range(max_iter):
        target = conj(neg(lit), h)
        if implies(TRUE, target):
            # the degenerate clause true => next true qualifies
            history.append(LoopSearchState(i + 1, TRUE, (), 1))
            return Loop(ev, TRUE, (), tuple(history))
        bad = neg(target)

        def query(c):
            if ground:
                return conj(_rhs(c), bad)
            fm = c.clause if isinstance(c, CanonicalClause) else c
            return conj(fm.merged.rhs, exists(X, conj(fm.b, bad)))

        if lattice is not None:
            found = lattice.minimal(lambda c: not q.satisfiable(query(c)))
        else:
            sat = q.satisfiable_members([query(c) for c in pool])
            found = [c for c, s in zip(pool, sat) if not s]
            pool = found
        if skip_vacuous:
            found = [c for c in found if q.satisfiable(_merged_rhs(c))]
        if not found:
            history.append(LoopSearchState(i + 1, FALSE, (), 0))
            return NoLoop(ev, tuple(history))
        kept = prune_candidates(found, implies) if prune else found
        nxt = disj(*(_lhs(c) for c in kept))
        history.append(LoopSearchState(i + 1, nxt, tuple(kept), len(found)))
        if implies(h, nxt):
            return Loop(ev, nxt, tuple(kept), tuple(history))
        h = nxt
    raise LoopLimit(max_iter)


def bfs_loop(p: TemporalProblem, ev: EventualityClause, oracle: Optional[QuotientOracle] = None,
             clauses=None, prune: bool = True, max_iter: int = 64, skip_vacuous: bool = False):
    """Search a loop in the non-ground eventuality ``ev`` w.r.t. the oracle's universal part.

    Candidates are all full merged clauses unless ``clauses`` restricts them.
    With ``skip_vacuous`` clauses whose merged right-hand side contradicts
    ``U`` are left out; step resolution already refutes their left-hand
    sides, so the loop formula only changes by what ``U`` will rule out.
    Returns :class:`Loop` or :class:`NoLoop`; a degenerate loop (formula
    ``true``) means ``U |= forall x ~L(x)``.
    """
    if ev.ground:
        raise ValueError(f"bfs_loop takes a non-ground eventuality: {ev}")
    if ev not in p.eventuality:
        raise ValueError(f"eventuality not in the problem: {ev}")
    return _search(p, ev, _oracle_for(p, oracle), clauses, prune, max_iter, False, skip_vacuous)


def bfs_loop_ground(p: TemporalProblem, ev: EventualityClause, oracle: Optional[QuotientOracle] = None,
                    clauses=None, prune: bool = True, max_iter: int = 64, skip_vacuous: bool = False):
    """The propositional variant over merged derived clauses."""
    if not ev.ground:
        raise ValueError(f"bfs_loop_ground takes a ground eventuality: {ev}")
    if ev not in p.eventuality:
        raise ValueError(f"eventuality not in the problem: {ev}")
    return _search(p, ev, _oracle_for(p, oracle), clauses, prune, max_iter, True, skip_vacuous)


def _merged_rhs(c) -> Formula:
    fm = c.clause if isinstance(c, CanonicalClause) else c
    return fm.merged.rhs


def _rhs(c) -> Formula:
    return c.clause.rhs if isinstance(c, CanonicalClause) else c.rhs


def side_conditions(loop: Loop) -> list:
    """The closed sentences that must be unsatisfiable with ``U`` for ``loop`` to be a loop."""
    lit, h = loop.eventuality.body, loop.formula
    out = []
    for c in loop.clauses:
        rhs = _rhs(c)
        if loop.ground:
            out += [conj(rhs, lit), conj(rhs, neg(h))]
        else:
            out += [exists(X, conj(rhs, lit)), exists(X, conj(rhs, neg(h)))]
    if not loop.clauses:
        out.append(exists(X, lit) if not loop.ground else lit)
    return out
