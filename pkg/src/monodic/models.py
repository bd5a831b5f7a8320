"""Finite ultimately periodic temporal structures.

A lasso has states ``0 .. prefix + loop - 1``; the successor of the last
state is ``prefix``.  Expanding-domain lassos keep the domain fixed on the
loop.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from pysat.solvers import Solver

from .problem import X, Semantics, TemporalProblem
from .syntax import (
    Always, And, Atom, Bottom, Const, Exists, Forall, Formula, Iff, Implies, Next, Not, Or, Sometime, Top,
    Until, Unless, Var, instantiate,
)


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class LassoModel:
    domains: tuple  # frozenset of element names per state
    facts: tuple  # frozenset of (predicate, argument tuple) per state
    constants: tuple = ()  # sorted (constant, element)
    prefix: int = 0
    loop: int = 1
    semantics: Semantics = Semantics.CONSTANT

    def __post_init__(self):
        object.__setattr__(self, "semantics", Semantics(self.semantics))
        n = self.prefix + self.loop
        if self.loop < 1 or self.prefix < 0:
            raise ModelError("a lasso needs a loop of at least one state")
        if len(self.domains) != n or len(self.facts) != n:
            raise ModelError(f"expected {n} states")
        if any(not d for d in self.domains):
            raise ModelError("domains are non-empty")
        if self.semantics == Semantics.CONSTANT:
            if len(set(self.domains)) != 1:
                raise ModelError("constant-domain lasso with a varying domain")
        else:
            for a, b in zip(self.domains, self.domains[1:]):
                if not a <= b:
                    raise ModelError("expanding domains may not shrink")
            if len(set(self.domains[self.prefix:])) != 1:
                raise ModelError("the domain is frozen on the loop")
        for c, e in self.constants:
            if e not in self.domains[0]:
                raise ModelError(f"constant {c} outside the initial domain")

    @property
    def length(self) -> int:
        return self.prefix + self.loop

    def succ(self, n: int) -> int:
        return n + 1 if n + 1 < self.length else self.prefix

    def fold(self, n: int) -> int:
        return n if n < self.length else self.prefix + (n - self.prefix) % self.loop

    def future(self, n: int) -> list:
        """States reachable from ``n`` in zero or more steps."""
        n = self.fold(n)
        return list(range(n, self.length)) + (list(range(self.prefix, n)) if n >= self.prefix else [])

    def constant(self, c: str) -> str:
        for k, e in self.constants:
            if k == c:
                return e
        raise ModelError(f"unknown constant {c}")


def eval(m: LassoModel, n: int, a: dict, phi: Formula) -> bool:
    """Truth of ``phi`` at state ``n`` under the assignment ``a``."""
    n = m.fold(n)
    for v, e in a.items():
        if e not in m.domains[n]:
            raise ModelError(f"{v} = {e} is not in the domain of state {n}")
    return _Evaluator(m).ev(n, tuple(sorted(a.items())), phi)


class _Evaluator:
    def __init__(self, m: LassoModel):
        self.m = m
        self.memo: dict = {}

    def ev(self, n: int, env: tuple, f: Formula) -> bool:
        key = (n, env, f)
        r = self.memo.get(key)
        if r is None:
            r = self._ev(n, env, f)
            self.memo[key] = r
        return r

    def _term(self, t, env: dict) -> str:
        if isinstance(t, Var):
            if t.name not in env:
                raise ModelError(f"unassigned variable {t.name}")
            return env[t.name]
        return self.m.constant(t.name)

    def _ev(self, n: int, env: tuple, f: Formula) -> bool:
        m = self.m
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Atom):
            e = dict(env)
            return (f.pred, tuple(self._term(t, e) for t in f.args)) in m.facts[n]
        if isinstance(f, Not):
            return not self.ev(n, env, f.body)
        if isinstance(f, And):
            return all(self.ev(n, env, g) for g in f.items)
        if isinstance(f, Or):
            return any(self.ev(n, env, g) for g in f.items)
        if isinstance(f, Implies):
            return not self.ev(n, env, f.left) or self.ev(n, env, f.right)
        if isinstance(f, Iff):
            return self.ev(n, env, f.left) == self.ev(n, env, f.right)
        if isinstance(f, (Forall, Exists)):
            rest = tuple(p for p in env if p[0] != f.var)
            vals = (self.ev(n, tuple(sorted(rest + ((f.var, d),))), f.body) for d in sorted(m.domains[n]))
            return all(vals) if isinstance(f, Forall) else any(vals)
        if isinstance(f, Next):
            return self.ev(m.succ(n), env, f.body)
        if isinstance(f, Sometime):
            return any(self.ev(k, env, f.body) for k in m.future(n))
        if isinstance(f, Always):
            return all(self.ev(k, env, f.body) for k in m.future(n))
        if isinstance(f, (Until, Unless)):
            k = n
            for _ in range(m.length + 1):
                if self.ev(k, env, f.right):
                    return True
                if not self.ev(k, env, f.left):
                    return False
                k = m.succ(k)
            # the left side held on a whole cycle without the right side
            return isinstance(f, Unless)
        raise ModelError(f"cannot evaluate {f}")


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    failing: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok


def check_problem(m: LassoModel, p: TemporalProblem) -> CheckResult:
    """Does ``m`` satisfy ``I & always U & always S & always E`` at state 0?"""
    for name, arity in p.signature.predicates:
        for s in m.facts:
            for pred, args in s:
                if pred == name and len(args) != arity:
                    raise ModelError(f"arity mismatch for {name}")
    for c in p.constants:
        m.constant(c)
    ev = _Evaluator(m)
    for f in p.initial:
        if not ev.ev(0, (), f):
            return CheckResult(False, f"initial: {f}")
    for f in p.universal:
        for n in range(m.length):
            if not ev.ev(n, (), f):
                return CheckResult(False, f"universal at state {n}: {f}")
    for s in p.step:
        for n in range(m.length):
            if not ev.ev(n, (), s.as_formula()):
                return CheckResult(False, f"step at state {n}: {s}")
    for e in p.eventuality:
        for n in range(m.length):
            if not ev.ev(n, (), e.as_formula()):
                return CheckResult(False, f"eventuality at state {n}: {e}")
    return CheckResult(True)


# ---------------------------------------------------------------- bounded search


class _Gates:
    def __init__(self):
        self.n = 0
        self.clauses: list = []
        self.memo: dict = {}

    def new(self) -> int:
        self.n += 1
        return self.n

    def AND(self, xs):
        lits = set()
        for x in xs:
            if x is True:
                continue
            if x is False or -x in lits:
                return False
            lits.add(x)
        if not lits:
            return True
        if len(lits) == 1:
            return next(iter(lits))
        key = tuple(sorted(lits))
        g = self.memo.get(key)
        if g is None:
            g = self.new()
            self.memo[key] = g
            self.clauses += [[-g, l] for l in key]
            self.clauses.append([g] + [-l for l in key])
        return g

    @staticmethod
    def NOT(x):
        return (not x) if isinstance(x, bool) else -x

    def OR(self, xs):
        return self.NOT(self.AND([self.NOT(x) for x in xs]))

    def require_or(self, xs):
        if any(x is True for x in xs):
            return
        self.clauses.append([x for x in xs if x is not False])


class _Bmc:
    def __init__(self, p: TemporalProblem, d: int, prefix: int, loop: int):
        self.p, self.d, self.prefix, self.loop = p, d, prefix, loop
        self.n = prefix + loop
        self.expanding = p.semantics == Semantics.EXPANDING
        self.g = _Gates()
        self.elems = [f"d{i}" for i in range(d)]
        self.sig = p.signature
        self.atoms: dict = {}
        self.consts = p.constants
        # constant c_i denotes one of the elements 0..i
        self.cmap = {
            c: [self.g.new() if e <= i else False for e in range(d)] for i, c in enumerate(self.consts)
        }
        for c, row in self.cmap.items():
            lits = [v for v in row if v is not False]
            self.g.clauses.append(lits)
            self.g.clauses += [[-a, -b] for a, b in itertools.combinations(lits, 2)]
        # birth[e][k]: element e exists from state k (k <= prefix); element 0 always exists
        self.birth = []
        last = min(self.prefix, self.n - 1)
        for e in range(d):
            if not self.expanding or e == 0:
                self.birth.append([True] + [False] * last)
                continue
            row = [self.g.new() for _ in range(last + 1)]
            self.g.clauses.append(row)
            self.g.clauses += [[-a, -b] for a, b in itertools.combinations(row, 2)]
            self.birth.append(row)
        for c, row in self.cmap.items():
            for e, v in enumerate(row):
                if v is not False and self.expanding and e:
                    self.g.clauses.append([-v, self.birth[e][0]])
        # elements no constant can denote are ordered by birth, then by state-0 colour
        for e in range(max(1, len(self.consts)), d - 1):
            same = True
            if self.expanding:
                for k in range(last + 1):
                    self.g.clauses += [[-self.birth[e][k], -v] for v in self.birth[e + 1][:k]]
                same = self.g.OR([self.g.AND([a, b]) for a, b in zip(self.birth[e], self.birth[e + 1])])
            self._lex_le(e, e + 1, same)

    def _lex_le(self, e: int, f: int, when):
        g = self.g
        eq = True
        for pred in self.sig.unary():
            a, b = self.atom(pred, (e,), 0), self.atom(pred, (f,), 0)
            g.require_or([g.NOT(when), g.NOT(eq), -a, b])
            eq = g.AND([eq, g.OR([g.AND([a, b]), g.AND([-a, -b])])])

    def alive(self, e: int, s: int):
        return self.g.OR(self.birth[e][: min(s, self.prefix) + 1])

    def atom(self, pred: str, args: tuple, s: int):
        key = (pred, args, s)
        v = self.atoms.get(key)
        if v is None:
            v = self.g.new()
            self.atoms[key] = v
        return v

    def enc(self, f: Formula, s: int, env: dict):
        g = self.g
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Atom):
            options = [()]
            for t in f.args:
                if isinstance(t, Var):
                    options = [o + ((env[t.name], True),) for o in options]
                else:
                    options = [o + ((e, v),) for o in options for e, v in enumerate(self.cmap[t.name]) if v is not False]
            return g.OR([
                g.AND([v for _, v in o] + [self.atom(f.pred, tuple(e for e, _ in o), s)]) for o in options
            ])
        if isinstance(f, Not):
            return g.NOT(self.enc(f.body, s, env))
        if isinstance(f, And):
            return g.AND([self.enc(c, s, env) for c in f.items])
        if isinstance(f, Or):
            return g.OR([self.enc(c, s, env) for c in f.items])
        if isinstance(f, Implies):
            return g.OR([g.NOT(self.enc(f.left, s, env)), self.enc(f.right, s, env)])
        if isinstance(f, Iff):
            a, b = self.enc(f.left, s, env), self.enc(f.right, s, env)
            return g.AND([g.OR([g.NOT(a), b]), g.OR([a, g.NOT(b)])])
        if isinstance(f, Forall):
            return g.AND([g.OR([g.NOT(self.alive(e, s)), self.enc(f.body, s, {**env, f.var: e})])
                          for e in range(self.d)])
        if isinstance(f, Exists):
            return g.OR([g.AND([self.alive(e, s), self.enc(f.body, s, {**env, f.var: e})]) for e in range(self.d)])
        raise ModelError(f"temporal operator in a first-order part: {f}")

    def require(self, x):
        if x is False:
            self.g.clauses.append([])
        elif x is not True:
            self.g.clauses.append([x])

    def encode(self):
        p = self.p
        for f in p.initial:
            self.require(self.enc(f, 0, {}))
        for s in range(self.n):
            for f in p.universal:
                self.require(self.enc(f, s, {}))
            nxt = s + 1 if s + 1 < self.n else self.prefix
            for st in p.step:
                if st.ground:
                    self.require(self.g.OR([self.g.NOT(self.enc(st.lhs, s, {})), self.enc(st.rhs, nxt, {})]))
                    continue
                for e in range(self.d):
                    self.require(self.g.OR([
                        self.g.NOT(self.alive(e, s)), self.g.NOT(self.enc(st.lhs, s, {X: e})),
                        self.enc(st.rhs, nxt, {X: e}),
                    ]))
        loop = range(self.prefix, self.n)
        for ev in p.eventuality:
            if ev.ground:
                self.require(self.g.OR([self.enc(ev.body, s, {}) for s in loop]))
                continue
            for e in range(self.d):
                self.require(self.g.OR([self.enc(ev.body, s, {X: e}) for s in loop]))

    def decode(self, model: list) -> LassoModel:
        pos = set(l for l in model if l > 0)

        def val(x):
            return x is True or (x is not False and (x in pos if x > 0 else -x not in pos))

        last = min(self.prefix, self.n - 1)
        born = []
        for e in range(self.d):
            born.append(next(k for k in range(last + 1) if val(self.birth[e][k])))
        domains = tuple(frozenset(self.elems[e] for e in range(self.d) if born[e] <= min(s, self.prefix))
                        for s in range(self.n))
        facts = []
        for s in range(self.n):
            row = set()
            for (pred, args, k), v in self.atoms.items():
                if k == s and val(v) and all(self.elems[e] in domains[s] for e in args):
                    row.add((pred, tuple(self.elems[e] for e in args)))
            facts.append(frozenset(row))
        consts = tuple(sorted(
            (c, self.elems[next(e for e, v in enumerate(row) if val(v))]) for c, row in self.cmap.items()
        ))
        return LassoModel(domains, tuple(facts), consts, self.prefix, self.loop, self.p.semantics)


def bounded_search(p: TemporalProblem, dmax: int = 2, tmax: int = 3) -> Optional[LassoModel]:
    """First lasso with at most ``dmax`` elements and ``tmax`` states satisfying ``p``, else ``None``.

    ``None`` says nothing about unsatisfiability.  Constants are pinned to a
    canonical prefix of the elements and, with expanding domains, element
    births are ordered.
    """
    if dmax < 1 or tmax < 1:
        raise ValueError("bounds must be positive")
    for t in range(1, tmax + 1):
        for d in range(1, dmax + 1):
            for prefix in range(t):
                bmc = _Bmc(p, d, prefix, t - prefix)
                bmc.encode()
                with Solver(name="m22", bootstrap_with=bmc.g.clauses) as solver:
                    if not solver.solve():
                        continue
                    m = bmc.decode(solver.get_model())
                if not check_problem(m, p):
                    raise ModelError(f"bounded search produced a non-model: {check_problem(m, p).failing}")
                return m
    return None


# ---------------------------------------------------------------- text format


def format_model(m: LassoModel) -> str:
    lines = [f"semantics: {m.semantics.value}", f"prefix: {m.prefix}", f"loop: {m.loop}"]
    if m.constants:
        lines.append("constants: " + " ".join(f"{c}={e}" for c, e in m.constants))
    for n in range(m.length):
        atoms = sorted(pred + (f"({','.join(args)})" if args else "") for pred, args in m.facts[n])
        lines.append(f"state {n}: domain {' '.join(sorted(m.domains[n]))} | {' '.join(atoms)}".rstrip())
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> LassoModel:
    """Inverse of :func:`format_model`; ``#`` starts a comment."""
    head: dict = {}
    states: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("state "):
            label, _, body = line[len("state "):].partition(":")
            dom, _, atoms = body.partition("|")
            dom = dom.strip()
            if not dom.startswith("domain"):
                raise ModelError(f"state line needs a domain: {raw}")
            states[int(label)] = (frozenset(dom[len("domain"):].split()), _parse_atoms(atoms))
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ModelError(f"cannot read model line: {raw}")
        head[key.strip()] = value.strip()
    try:
        prefix, loop = int(head.get("prefix", 0)), int(head["loop"])
    except (KeyError, ValueError) as exc:
        raise ModelError("model needs integer prefix and loop lengths") from exc
    n = prefix + loop
    if sorted(states) != list(range(n)):
        raise ModelError(f"expected states 0..{n - 1}")
    consts = tuple(sorted(tuple(kv.split("=", 1)) for kv in head.get("constants", "").split()))
    return LassoModel(
        tuple(states[i][0] for i in range(n)), tuple(states[i][1] for i in range(n)), consts, prefix, loop,
        head.get("semantics", "constant"),
    )


def _parse_atoms(text: str) -> frozenset:
    out = set()
    for tok in text.split():
        if "(" in tok:
            pred, _, rest = tok.partition("(")
            out.add((pred, tuple(a for a in rest.rstrip(")").split(",") if a)))
        else:
            out.add((tok, ()))
    return frozenset(out)


def holds_everywhere(m: LassoModel, f: Formula) -> bool:
    """``f`` (closed, first-order) is true at every state of ``m``."""
    ev = _Evaluator(m)
    return all(ev.ev(n, (), f) for n in range(m.length))


def ground(f: Formula, c: str) -> Formula:
    return instantiate(f, X, c)
