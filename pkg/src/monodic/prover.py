"""Temporal resolution: derivations, traces and their replay."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .clauses import SchemeLimitExceeded, canonical_clauses, scheme_vocabulary
from .dsnf import flood_constants
from .loops import Loop, LoopLimit, bfs_loop, bfs_loop_ground, side_conditions
from .normal import nnf
from .oracle import OracleBudgetExceeded, OracleContext, equivalent
from .parser import parse_formula
from .printer import to_text
from .problem import X, TemporalProblem
from .quotient import QuotientOracle
from .syntax import (
    TRUE, Always, And, Exists, Forall, Formula, Implies, Next, Or, conj, disj, exists, forall, free_vars, neg,
    size,
)


class Verdict(str, Enum):
    UNSATISFIABLE = "unsatisfiable"
    SATURATED = "saturated"
    RESOURCE_LIMIT = "resource-limit"


RULES = ("StepRes", "InitTerm", "EvRes", "EvTerm", "GroundEvRes", "GroundEvTerm", "Induction")


@dataclass(frozen=True)
class SideCondition:
    """``U_k`` (plus ``I`` when ``initial``) together with ``query`` has this satisfiability."""

    query: Formula
    satisfiable: bool
    initial: bool = False

    def record(self) -> dict:
        return {"query": to_text(self.query), "with_initial": self.initial, "satisfiable": self.satisfiable}


@dataclass(frozen=True)
class RuleApplication:
    rule: str
    premises: tuple
    conclusion: Optional[Formula]
    universal_index: int  # side conditions are relative to U_k
    side_conditions: tuple = ()
    loop: Optional[Formula] = None
    display: Optional[Formula] = None

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule}")

    @property
    def extends_universal(self) -> bool:
        return self.rule in ("StepRes", "EvRes", "GroundEvRes")

    def record(self, index: int) -> dict:
        out = {
            "step": index,
            "rule": self.rule,
            "premises": list(self.premises),
            "conclusion": None if self.conclusion is None else to_text(self.conclusion),
            "universal_index": self.universal_index,
            "side_conditions": [s.record() for s in self.side_conditions],
        }
        if self.loop is not None:
            out["loop"] = to_text(self.loop)
        if self.display is not None:
            out["display"] = to_text(self.display)
        return out

    def __str__(self) -> str:
        shown = self.display if self.display is not None else self.conclusion
        head = f"{self.rule}({', '.join(self.premises)})"
        return head if shown is None else f"{head} -> {shown}"


@dataclass
class Derivation:
    problem: TemporalProblem
    steps: list = field(default_factory=list)
    conclusions: list = field(default_factory=list)
    verdict: Verdict = Verdict.SATURATED
    reason: str = ""
    stats: dict = field(default_factory=dict)

    def universal(self, k: Optional[int] = None) -> tuple:
        """``U_k``: the input universal part plus the first ``k`` conclusions."""
        k = len(self.conclusions) if k is None else k
        return self.problem.universal + tuple(self.conclusions[:k])

    @property
    def universal_parts(self) -> list:
        return [self.universal(k) for k in range(len(self.conclusions) + 1)]

    @property
    def unsatisfiable(self) -> bool:
        return self.verdict is Verdict.UNSATISFIABLE

    def describe(self) -> str:
        if self.verdict is Verdict.SATURATED and not self.problem.signature.is_monadic():
            return "no refutation found"
        return self.verdict.value

    def records(self) -> list:
        out = [s.record(i) for i, s in enumerate(self.steps)]
        out.append({"verdict": self.verdict.value, "reason": self.reason})
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records())

    def text(self) -> str:
        lines = [f"{i + 1}. {s}" for i, s in enumerate(self.steps)]
        lines.append(f"verdict: {self.describe()}" + (f" ({self.reason})" if self.reason else ""))
        return "\n".join(lines)


class _Unsat(Exception):
    pass


def simplify_for_display(f: Formula, limit: int = 48) -> Formula:
    """Greedy removal of conjuncts and disjuncts, kept only when equivalent to ``f``."""
    best = nnf(f)
    tried = 0
    changed = True
    while changed and tried < limit:
        changed = False
        for cand in _shrinkings(best):
            tried += 1
            if equivalent(cand, f):
                best, changed = cand, True
                break
            if tried >= limit:
                break
    return best if size(best) < size(f) else f


def _shrinkings(f: Formula):
    if isinstance(f, (And, Or)):
        join = conj if isinstance(f, And) else disj
        for i in range(len(f.items)):
            yield join(*(g for j, g in enumerate(f.items) if j != i))
        for i, g in enumerate(f.items):
            for h in _shrinkings(g):
                yield join(*f.items[:i], h, *f.items[i + 1:])
    elif isinstance(f, (Forall, Exists)):
        for h in _shrinkings(f.body):
            yield type(f)(f.var, h) if f.var in free_vars(h) else h


class _Engine:
    def __init__(self, p: TemporalProblem, d: Derivation, max_schemes: int, display: bool, induction: bool):
        self.p, self.d = p, d
        self.display, self.induction = display, induction
        self.q = QuotientOracle(p.universal, *scheme_vocabulary(p), stats=d.stats)
        self.init = OracleContext(p.universal + p.initial, vocabulary=p.signature, stats=d.stats)
        self.merged = canonical_clauses(p, limit=max_schemes)[0]
        self.labels = {e: f"e{i + 1}" for i, e in enumerate(p.eventuality)}

    @property
    def k(self) -> int:
        return len(self.d.conclusions)

    def emit(self, step: RuleApplication):
        self.d.steps.append(step)
        if step.rule in ("InitTerm", "EvTerm", "GroundEvTerm"):
            self.d.verdict = Verdict.UNSATISFIABLE
            raise _Unsat()

    def add(self, rule: str, premises: tuple, conclusion: Formula, conditions: tuple, loop=None):
        shown = simplify_for_display(conclusion) if self.display and size(conclusion) <= 64 else None
        step = RuleApplication(rule, premises, conclusion, self.k, conditions, loop,
                               shown if shown is not None and shown != conclusion else None)
        self.d.steps.append(step)
        self.d.conclusions.append(conclusion)
        self.q.add(conclusion)
        self.init.assert_(conclusion)

    def terminations(self):
        if not self.init.satisfiable(TRUE):
            self.emit(RuleApplication("InitTerm", ("U", "I"), None, self.k, (SideCondition(TRUE, False, True),)))
        for e in self.p.eventuality:
            lit = e.body
            if e.ground:
                if self.q.entails(neg(lit)):
                    self.emit(RuleApplication("GroundEvTerm", (self.labels[e],), None, self.k,
                                              (SideCondition(lit, False),)))
            elif self.q.implies_open(TRUE, neg(lit)):
                self.emit(RuleApplication("EvTerm", (self.labels[e],), None, self.k,
                                          (SideCondition(exists(X, lit), False),)))

    def step_resolution(self) -> bool:
        cands = [c for c in self.merged if c.clause.rhs != TRUE]
        sat = self.q.satisfiable_members([c.clause.rhs for c in cands])
        hits = sorted((i for i, s in enumerate(sat) if not s), key=lambda i: (size(cands[i].clause.lhs), i))
        added = False
        for i in hits:
            m = cands[i].clause.merged
            concl = neg(m.lhs)
            if self.q.entails(concl):
                continue
            self.add("StepRes", (str(m),), concl, (SideCondition(m.rhs, False),))
            added = True
        return added

    def eventuality_resolution(self) -> bool:
        evs = self.p.nonground_eventualities() + self.p.ground_eventualities()
        for e in evs:
            if e.ground:
                res = bfs_loop_ground(self.p, e, self.q, skip_vacuous=True)
            else:
                res = bfs_loop(self.p, e, self.q, skip_vacuous=True)
            if not isinstance(res, Loop):
                continue
            concl = res.conclusion()
            if self.q.entails(concl):
                continue
            conds = tuple(SideCondition(s, False) for s in side_conditions(res))
            premises = (self.labels[e],) + tuple(str(c) for c in res.clauses)
            if self.induction:
                lit = e.body
                body = Implies(res.formula, Next(Always(neg(lit))))
                self.d.steps.append(RuleApplication(
                    "Induction", premises, body if e.ground else forall(X, body), self.k, conds, res.formula))
            self.add("GroundEvRes" if e.ground else "EvRes", premises, concl, conds, res.formula)
            return True
        return False


def prove(p: TemporalProblem, flood: bool = True, max_iter: int = 1000, max_schemes: int = 1 << 16,
          oracle_budget: Optional[int] = None, display: bool = True, induction: bool = False) -> Derivation:
    """Run temporal resolution to refutation or saturation.

    Each round runs the termination checks, then tries one eventuality
    resolution, then a step-resolution sweep over the canonical merged
    clauses; a round that adds nothing ends in saturation.
    """
    if flood:
        p = flood_constants(p)
    stats: dict = {}
    if oracle_budget is not None:
        stats["budget"] = oracle_budget
    d = Derivation(p, stats=stats)
    engine = None
    try:
        engine = _Engine(p, d, max_schemes, display, induction)
        for _ in range(max_iter):
            engine.terminations()
            if engine.eventuality_resolution():
                continue
            if engine.step_resolution():
                continue
            d.verdict = Verdict.SATURATED
            break
        else:
            d.verdict, d.reason = Verdict.RESOURCE_LIMIT, f"no fixpoint within {max_iter} rounds"
    except _Unsat:
        pass
    except (SchemeLimitExceeded, OracleBudgetExceeded, LoopLimit) as exc:
        d.verdict, d.reason = Verdict.RESOURCE_LIMIT, str(exc)
    finally:
        if engine is not None:
            engine.q.close()
            engine.init.close()
    return d


# ---------------------------------------------------------------- replay


@dataclass(frozen=True)
class ReplayFailure:
    step: int
    query: Formula
    recorded: bool


def replay(d: Derivation) -> list:
    """Re-ask every side condition with a fresh general oracle; returns the mismatches."""
    return _replay(d.problem, [(i, s.universal_index, s.side_conditions) for i, s in enumerate(d.steps)],
                   d.conclusions)


def replay_records(p: TemporalProblem, records: list) -> list:
    """Replay a parsed record stream against the problem it was produced from."""
    steps, conclusions = [], []
    for r in records:
        if "rule" not in r:
            continue
        conds = tuple(
            SideCondition(parse_formula(s["query"]), s["satisfiable"], s["with_initial"]) for s in r["side_conditions"]
        )
        steps.append((r["step"], r["universal_index"], conds))
        if r["rule"] in ("StepRes", "EvRes", "GroundEvRes"):
            conclusions.append(parse_formula(r["conclusion"]))
    return _replay(p, steps, conclusions)


def _replay(p: TemporalProblem, steps, conclusions) -> list:
    failures = []
    for i, k, conds in steps:
        if k > len(conclusions):
            failures.append(ReplayFailure(i, TRUE, True))
            continue
        u = p.universal + tuple(conclusions[:k])
        for s in conds:
            ctx = OracleContext(u + (p.initial if s.initial else ()), vocabulary=p.signature)
            if ctx.satisfiable(s.query) != s.satisfiable:
                failures.append(ReplayFailure(i, s.query, s.satisfiable))
            ctx.close()
    return failures


def parse_trace(text: str) -> list:
    return [json.loads(line) for line in text.splitlines() if line.strip()]
