"""Satisfiability of closed monadic first-order sentences.

Without equality, a monadic structure is determined up to elementary
equivalence by the set of *colours* it realises (a colour fixes the truth
value of every unary predicate), the truth values of the propositions and the
colour of each constant.  :class:`AbstractStructure` is that quotient.

Satisfiability is decided by compiling a sentence set into a propositional
formula whose variables say "colour chi is realised", "constant c satisfies
P" and "proposition p holds", and handing it to a SAT solver.  The compiler
is the only place the colour abstraction lives; the SAT solver is a black box.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional, Protocol

from pysat.solvers import Solver

from .syntax import (
    TEMPORAL, And, Atom, Bottom, Const, Exists, Forall, Formula, Iff, Implies, Not, Or, Signature,
    Top, Var, atoms_of, is_first_order, conj, disj, exists, forall, neg, subformulae, free_vars,
)


class OracleError(ValueError):
    pass


class FragmentUnsupported(OracleError):
    """Raised for sentences outside the monadic fragment."""

    def __init__(self, predicate: str, arity: int):
        super().__init__(f"fragment unsupported: predicate {predicate} has arity {arity}")
        self.predicate = predicate
        self.arity = arity


class UnknownSymbol(OracleError):
    pass


# ---------------------------------------------------------------- structures


@dataclass(frozen=True)
class AbstractStructure:
    """Realised colours, a propositional valuation and a constant map.

    A colour is the frozenset of unary predicates it makes true.
    """

    predicates: tuple
    realized: frozenset
    props: frozenset = frozenset()
    constants: tuple = ()  # sorted (name, colour) pairs
    prop_names: tuple = ()

    def __post_init__(self):
        if not self.realized:
            raise OracleError("an abstract structure realises at least one colour")
        for c, col in self.constants:
            if col not in self.realized:
                raise OracleError(f"constant {c} mapped to an unrealised colour")

    def colour_of(self, c: str) -> frozenset:
        for name, col in self.constants:
            if name == c:
                return col
        raise UnknownSymbol(f"unknown constant {c}")

    def describe(self) -> str:
        def col(c):
            return "[" + ",".join(p if p in c else "~" + p for p in self.predicates) + "]"

        parts = ["{" + " ".join(sorted(col(c) for c in self.realized)) + "}"]
        if self.prop_names:
            parts.append(" ".join(p if p in self.props else "~" + p for p in self.prop_names))
        parts += [f"{c}:{col(v)}" for c, v in self.constants]
        return " ".join(parts)


def evaluate(s: AbstractStructure, phi: Formula, env: Optional[dict] = None) -> bool:
    """Truth of ``phi`` in ``s``; quantifiers range over realised colours."""
    env = env or {}
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Bottom):
        return False
    if isinstance(phi, Atom):
        if not phi.args:
            if phi.pred not in s.prop_names and phi.pred not in s.props:
                raise UnknownSymbol(f"unknown proposition {phi.pred}")
            return phi.pred in s.props
        if len(phi.args) > 1:
            raise FragmentUnsupported(phi.pred, len(phi.args))
        if phi.pred not in s.predicates:
            raise UnknownSymbol(f"unknown predicate {phi.pred}")
        t = phi.args[0]
        if isinstance(t, Var):
            if t.name not in env:
                raise OracleError(f"free variable {t.name}")
            return phi.pred in env[t.name]
        return phi.pred in s.colour_of(t.name)
    if isinstance(phi, Not):
        return not evaluate(s, phi.body, env)
    if isinstance(phi, And):
        return all(evaluate(s, c, env) for c in phi.items)
    if isinstance(phi, Or):
        return any(evaluate(s, c, env) for c in phi.items)
    if isinstance(phi, Implies):
        return (not evaluate(s, phi.left, env)) or evaluate(s, phi.right, env)
    if isinstance(phi, Iff):
        return evaluate(s, phi.left, env) == evaluate(s, phi.right, env)
    if isinstance(phi, Forall):
        return all(evaluate(s, phi.body, {**env, phi.var: c}) for c in s.realized)
    if isinstance(phi, Exists):
        return any(evaluate(s, phi.body, {**env, phi.var: c}) for c in s.realized)
    raise OracleError(f"temporal operator in first-order query: {phi}")


# ---------------------------------------------------------------- compiler


def check_monadic(formulas: Iterable[Formula]) -> None:
    for f in formulas:
        for g in atoms_of(f):
            if len(g.args) > 1:
                raise FragmentUnsupported(g.pred, len(g.args))
        if not is_first_order(f):
            raise OracleError(f"temporal operator in first-order query: {f}")
        if free_vars(f):
            raise OracleError(f"query sentence is not closed: {f}")


class _Encoding:
    """Propositional image of the colour abstraction over a fixed vocabulary."""

    def __init__(self, sig: Signature):
        self.preds = tuple(sig.unary())
        self.pindex = {p: i for i, p in enumerate(self.preds)}
        self.prop_names = tuple(sig.propositions())
        self.consts = tuple(sorted(sig.constants))
        self.nvars = 0
        self.clauses: list = []
        self.ncol = 1 << len(self.preds)
        self.realised = [self._new() for _ in range(self.ncol)]
        self.prop = {p: self._new() for p in self.prop_names}
        self.cbit = {c: [self._new() for _ in self.preds] for c in self.consts}
        self.clauses.append(list(self.realised))
        for c in self.consts:
            for chi in range(self.ncol):
                # c has colour chi  ->  chi is realised
                cl = [(-b if chi >> i & 1 else b) for i, b in enumerate(self.cbit[c])]
                self.clauses.append(cl + [self.realised[chi]])
        self.gates: dict = {}
        self.memo: dict = {}

    def _new(self) -> int:
        self.nvars += 1
        return self.nvars

    # gates over literals; True/False are constants
    def AND(self, xs) -> object:
        lits = set()
        for x in xs:
            if x is True:
                continue
            if x is False:
                return False
            if -x in lits:
                return False
            lits.add(x)
        if not lits:
            return True
        if len(lits) == 1:
            return next(iter(lits))
        key = tuple(sorted(lits))
        g = self.gates.get(key)
        if g is None:
            g = self._new()
            self.gates[key] = g
            for l in key:
                self.clauses.append([-g, l])
            self.clauses.append([g] + [-l for l in key])
        return g

    @staticmethod
    def NOT(x):
        if x is True:
            return False
        if x is False:
            return True
        return -x

    def OR(self, xs):
        return self.NOT(self.AND([self.NOT(x) for x in xs]))

    def compile(self, f: Formula, env: tuple = ()) -> object:
        fv = free_vars(f)
        env = tuple(sorted(p for p in env if p[0] in fv))
        key = (f, env)
        r = self.memo.get(key)
        if r is None:
            r = self._compile(f, dict(env))
            self.memo[key] = r
        return r

    def _compile(self, f: Formula, env: dict):
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Atom):
            if not f.args:
                if f.pred not in self.prop:
                    raise UnknownSymbol(f.pred)
                return self.prop[f.pred]
            if len(f.args) > 1:
                raise FragmentUnsupported(f.pred, len(f.args))
            i = self.pindex.get(f.pred)
            if i is None:
                raise UnknownSymbol(f.pred)
            t = f.args[0]
            if isinstance(t, Var):
                return bool(env[t.name] >> i & 1)
            if t.name not in self.cbit:
                raise UnknownSymbol(t.name)
            return self.cbit[t.name][i]
        if isinstance(f, Not):
            return self.NOT(self.compile(f.body, tuple(env.items())))
        e = tuple(env.items())
        if isinstance(f, And):
            return self.AND([self.compile(c, e) for c in f.items])
        if isinstance(f, Or):
            return self.OR([self.compile(c, e) for c in f.items])
        if isinstance(f, Implies):
            return self.OR([self.NOT(self.compile(f.left, e)), self.compile(f.right, e)])
        if isinstance(f, Iff):
            a, b = self.compile(f.left, e), self.compile(f.right, e)
            return self.AND([self.OR([self.NOT(a), b]), self.OR([a, self.NOT(b)])])
        if isinstance(f, (Forall, Exists)):
            kind = And if isinstance(f, Exists) else Or
            if isinstance(f.body, kind):
                out = [c for c in f.body.items if f.var not in free_vars(c)]
                if out:
                    keep = [c for c in f.body.items if f.var in free_vars(c)]
                    join = conj if kind is And else disj
                    quant = exists if kind is And else forall
                    return self.compile(join(*out, quant(f.var, join(*keep))), e)
            parts = []
            inner = {k: v for k, v in env.items() if k != f.var}
            for chi in range(self.ncol):
                body = self.compile(f.body, tuple(sorted({**inner, f.var: chi}.items())))
                if isinstance(f, Forall):
                    parts.append(self.OR([self.NOT(self.realised[chi]), body]))
                else:
                    parts.append(self.AND([self.realised[chi], body]))
            return self.AND(parts) if isinstance(f, Forall) else self.OR(parts)
        raise OracleError(f"temporal operator in first-order query: {f}")

    def decode(self, model: list) -> AbstractStructure:
        val = set(l for l in model if l > 0)

        def colour(chi):
            return frozenset(p for i, p in enumerate(self.preds) if chi >> i & 1)

        realized = frozenset(colour(chi) for chi in range(self.ncol) if self.realised[chi] in val)
        consts = tuple(
            (c, frozenset(p for i, p in enumerate(self.preds) if self.cbit[c][i] in val))
            for c in self.consts
        )
        props = frozenset(p for p in self.prop_names if self.prop[p] in val)
        return AbstractStructure(self.preds, realized, props, consts, self.prop_names)


class OracleContext:
    """Incremental queries against a fixed hypothesis set.

    All queries share one SAT solver; each query's root is passed as an
    assumption so nothing asserted by a query leaks into the next one.
    """

    def __init__(self, hypotheses: Iterable[Formula] = (), vocabulary: Optional[Signature] = None,
                 stats: Optional[dict] = None):
        self.hypotheses = tuple(hypotheses)
        check_monadic(self.hypotheses)
        sig = Signature.of(self.hypotheses)
        self.vocabulary = sig.merge(vocabulary) if vocabulary is not None else sig
        self.stats = stats if stats is not None else {}
        self._build()

    def _build(self):
        self.enc = _Encoding(self.vocabulary)
        self.roots = [self.enc.compile(h) for h in self.hypotheses]
        self.inconsistent = any(r is False for r in self.roots)
        self.solver = Solver(name="m22")
        self.fed = 0
        self._feed()
        for r in self.roots:
            if r is not True and r is not False:
                self.solver.add_clause([r])
        self.memo: dict = {}

    def _feed(self):
        cl = self.enc.clauses
        for c in cl[self.fed:]:
            self.solver.add_clause(c)
        self.fed = len(cl)

    def _extend(self, formulas) -> None:
        sig = Signature.of(formulas)
        missing = [p for p, a in sig.predicates if p not in self.vocabulary.arity]
        if missing or not sig.constants <= self.vocabulary.constants:
            self.solver.delete()
            self.vocabulary = self.vocabulary.merge(sig)
            self._build()

    def satisfiable(self, *formulas: Formula) -> bool:
        key = formulas
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.stats["queries"] = self.stats.get("queries", 0) + 1
        budget = self.stats.get("budget")
        if budget is not None and self.stats["queries"] > budget:
            raise OracleBudgetExceeded(budget)
        if self.inconsistent:
            self.memo[key] = False
            return False
        check_monadic(formulas)
        self._extend(formulas)
        roots = [self.enc.compile(f) for f in formulas]
        if any(r is False for r in roots):
            res = False
        else:
            self._feed()
            res = bool(self.solver.solve(assumptions=[r for r in roots if r is not True]))
        self.memo[key] = res
        return res

    def entails(self, goal: Formula) -> bool:
        return not self.satisfiable(neg(goal))

    def satisfiable_members(self, formulas) -> list:
        """``[satisfiable(f) for f in formulas]`` using one solver call per distinct counterexample.

        Each call asks for a model of the disjunction of the undecided
        formulae and settles every formula that model satisfies.
        """
        formulas = list(formulas)
        out: list = [self.memo.get((f,)) for f in formulas]
        if self.inconsistent:
            return [False] * len(formulas)
        todo = [i for i, r in enumerate(out) if r is None]
        if not todo:
            return out
        check_monadic(formulas)
        self._extend(formulas)
        roots = {}
        for i in todo:
            r = self.enc.compile(formulas[i])
            if r is True or r is False:
                out[i] = r
            else:
                roots[i] = r
        self._feed()
        while roots:
            self.stats["queries"] = self.stats.get("queries", 0) + 1
            budget = self.stats.get("budget")
            if budget is not None and self.stats["queries"] > budget:
                raise OracleBudgetExceeded(budget)
            act = self.enc._new()
            self.solver.add_clause([-act] + list(roots.values()))
            found = self.solver.solve(assumptions=[act])
            model = set(l for l in self.solver.get_model() if l > 0) if found else set()
            self.solver.add_clause([-act])
            if not found:
                for i in roots:
                    out[i] = False
                break
            for i, r in list(roots.items()):
                if (r in model) if r > 0 else (-r not in model):
                    out[i] = True
                    del roots[i]
        for f, r in zip(formulas, out):
            self.memo[(f,)] = r
        return out

    def assert_(self, f: Formula) -> None:
        """Add a hypothesis in place; earlier answers are forgotten."""
        self.hypotheses += (f,)
        check_monadic([f])
        self._extend([f])
        r = self.enc.compile(f)
        self._feed()
        self.memo.clear()
        if r is False:
            self.inconsistent = True
        elif r is not True:
            self.solver.add_clause([r])

    def witness(self, *formulas: Formula) -> Optional[AbstractStructure]:
        """A satisfying structure with as few realised colours as greedy search finds."""
        if not self.satisfiable(*formulas):
            return None
        roots = [r for r in (self.enc.compile(f) for f in formulas) if r is not True]
        self._feed()
        self.solver.solve(assumptions=roots)
        model = self.solver.get_model()
        off = []
        for chi in range(self.enc.ncol):
            v = self.enc.realised[chi]
            if model[v - 1] > 0 and self.solver.solve(assumptions=roots + off + [-v]):
                off.append(-v)
                model = self.solver.get_model()
        self.solver.solve(assumptions=roots + off)
        return self.enc.decode(self.solver.get_model())

    def project(self, preds, props, consts) -> list:
        """Every reduct of a model of the hypotheses to the given vocabulary.

        Enumerated by blocking clauses over the projected variables, so the
        cost is one solver call per distinct reduct.
        """
        preds, props, consts = tuple(preds), tuple(props), tuple(consts)
        want = Signature(tuple((p, 1) for p in preds) + tuple((p, 0) for p in props), frozenset(consts))
        if not all(p in self.vocabulary.arity for p in preds + props) or not set(consts) <= self.vocabulary.constants:
            self.solver.delete()
            self.vocabulary = self.vocabulary.merge(want)
            self._build()
        if self.inconsistent:
            return []
        enc = self.enc
        idx = [enc.pindex[p] for p in preds]
        groups: dict = {}
        for chi in range(enc.ncol):
            key = sum(1 << j for j, i in enumerate(idx) if chi >> i & 1)
            groups.setdefault(key, []).append(enc.realised[chi])
        shown = {key: enc.OR(vs) for key, vs in groups.items()}
        pvars = [enc.prop[p] for p in props]
        cvars = [[enc.cbit[c][i] for i in idx] for c in consts]
        self._feed()
        act = enc._new()
        out = []
        flat = list(shown.values()) + pvars + [v for row in cvars for v in row]
        while self.solver.solve(assumptions=[act]):
            pos = set(l for l in self.solver.get_model() if l > 0)

            def val(lit):
                return lit is True or (lit is not False and (lit in pos if lit > 0 else -lit not in pos))

            realized = frozenset(
                frozenset(p for j, p in enumerate(preds) if key >> j & 1)
                for key, v in shown.items() if val(v)
            )
            out.append(AbstractStructure(
                preds, realized, frozenset(p for p, v in zip(props, pvars) if val(v)),
                tuple((c, frozenset(p for p, v in zip(preds, row) if val(v))) for c, row in zip(consts, cvars)),
                props,
            ))
            self.solver.add_clause([-act] + [(-v if val(v) else v) for v in flat if v is not True and v is not False])
        self.solver.add_clause([-act])
        return out

    def close(self):
        self.solver.delete()


class OracleBudgetExceeded(OracleError):
    def __init__(self, budget: int):
        super().__init__(f"oracle call budget of {budget} exhausted")
        self.budget = budget


# ---------------------------------------------------------------- public API


@dataclass(frozen=True)
class OracleQuery:
    hypotheses: tuple
    goal: Optional[Formula] = None


@dataclass(frozen=True)
class SatResult:
    satisfiable: bool
    witness: Optional[AbstractStructure] = None

    def __bool__(self) -> bool:
        return self.satisfiable


class ExternalOracle(Protocol):
    """Extension point for sentences outside the monadic fragment."""

    def is_satisfiable(self, query: OracleQuery) -> SatResult: ...

    def entails(self, hypotheses: Iterable[Formula], goal: Formula) -> bool: ...

    def evaluate(self, structure, sentence: Formula) -> bool: ...


_external: Optional[ExternalOracle] = None


def register_external_oracle(oracle: Optional[ExternalOracle]) -> None:
    global _external
    _external = oracle


def external_oracle() -> Optional[ExternalOracle]:
    return _external


_MEMO: dict = {}


def is_satisfiable(query: OracleQuery | Iterable[Formula], goal: Optional[Formula] = None) -> SatResult:
    if not isinstance(query, OracleQuery):
        query = OracleQuery(tuple(query), goal)
    fs = tuple(query.hypotheses) + ((query.goal,) if query.goal is not None else ())
    key = frozenset(fs)
    if key in _MEMO:
        return _MEMO[key]
    try:
        check_monadic(fs)
    except FragmentUnsupported:
        if _external is None:
            raise
        return _external.is_satisfiable(query)
    ctx = OracleContext(fs)
    try:
        res = SatResult(True, ctx.witness()) if ctx.satisfiable() else SatResult(False)
    finally:
        ctx.close()
    if len(_MEMO) > 50000:
        _MEMO.clear()
    _MEMO[key] = res
    return res


def entails(hypotheses: Iterable[Formula], goal: Formula) -> bool:
    hyps = tuple(hypotheses)
    try:
        check_monadic(hyps + (goal,))
    except FragmentUnsupported:
        if _external is None:
            raise
        return _external.entails(hyps, goal)
    return not is_satisfiable(hyps + (neg(goal),)).satisfiable


def equivalent(a: Formula, b: Formula, hypotheses: Iterable[Formula] = ()) -> bool:
    """``hypotheses`` entail ``a <-> b``; free variables are read universally."""
    from .syntax import Forall as _Fa

    f = Iff(a, b)
    for v in sorted(free_vars(f)):
        f = _Fa(v, f)
    return entails(hypotheses, f)


# ---------------------------------------------------------------- brute force


@dataclass(frozen=True)
class FiniteStructure:
    """A concrete first-order structure over elements ``0..size-1``."""

    size: int
    unary: tuple  # (pred, frozenset of elements)
    props: frozenset
    constants: tuple  # (const, element)

    def holds(self, pred: str, e: int) -> bool:
        return e in dict(self.unary)[pred]


def eval_concrete(m: FiniteStructure, phi: Formula, env: Optional[dict] = None) -> bool:
    env = env or {}
    if isinstance(phi, Top):
        return True
    if isinstance(phi, Bottom):
        return False
    if isinstance(phi, Atom):
        if not phi.args:
            return phi.pred in m.props
        t = phi.args[0]
        e = env[t.name] if isinstance(t, Var) else dict(m.constants)[t.name]
        return e in dict(m.unary)[phi.pred]
    if isinstance(phi, Not):
        return not eval_concrete(m, phi.body, env)
    if isinstance(phi, And):
        return all(eval_concrete(m, c, env) for c in phi.items)
    if isinstance(phi, Or):
        return any(eval_concrete(m, c, env) for c in phi.items)
    if isinstance(phi, Implies):
        return (not eval_concrete(m, phi.left, env)) or eval_concrete(m, phi.right, env)
    if isinstance(phi, Iff):
        return eval_concrete(m, phi.left, env) == eval_concrete(m, phi.right, env)
    if isinstance(phi, Forall):
        return all(eval_concrete(m, phi.body, {**env, phi.var: e}) for e in range(m.size))
    if isinstance(phi, Exists):
        return any(eval_concrete(m, phi.body, {**env, phi.var: e}) for e in range(m.size))
    raise OracleError(f"unsupported node {phi}")


def finite_structures(sig: Signature, size: int):
    """Every structure of the given size, up to permutation of elements."""
    preds = sig.unary()
    props = sig.propositions()
    consts = sorted(sig.constants)
    colours = list(itertools.product((False, True), repeat=len(preds)))
    for multiset in itertools.combinations_with_replacement(range(len(colours)), size):
        unary = tuple(
            (p, frozenset(e for e, ci in enumerate(multiset) if colours[ci][i])) for i, p in enumerate(preds)
        )
        # elements with equal colours are interchangeable: pick constants among distinct colours
        reps = sorted({ci: e for e, ci in reversed(list(enumerate(multiset)))}.values())
        for cmap in itertools.product(reps, repeat=len(consts)):
            for pv in itertools.product((False, True), repeat=len(props)):
                yield FiniteStructure(
                    size, unary, frozenset(p for p, v in zip(props, pv) if v), tuple(zip(consts, cmap))
                )


def brute_force_model(sentences: Iterable[Formula], max_size: int = 3) -> Optional[FiniteStructure]:
    fs = tuple(sentences)
    sig = Signature.of(fs)
    for n in range(1, max_size + 1):
        for m in finite_structures(sig, n):
            if all(eval_concrete(m, f) for f in fs):
                return m
    return None


def materialize(s: AbstractStructure) -> FiniteStructure:
    """One element per realised colour; constants point at their colour's element."""
    cols = sorted(s.realized, key=lambda c: sorted(c))
    idx = {c: i for i, c in enumerate(cols)}
    unary = tuple((p, frozenset(i for i, c in enumerate(cols) if p in c)) for p in s.predicates)
    return FiniteStructure(len(cols), unary, s.props, tuple((c, idx[col]) for c, col in s.constants))
