"""Abstract syntax for first-order temporal formulae.

Every node is an immutable dataclass.  ``And``/``Or`` are n-ary, flattened and
sorted on construction so that structurally equal inputs print identically.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, fields
from typing import Iterable, Iterator


_INTERN: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()


def _node(cls):
    """Frozen dataclass, hash-consed on its constructor arguments, hash cached.

    Interning makes repeated constructions share children, so equality
    checks between equal formulae are mostly identity checks.
    """
    cls = dataclass(frozen=True)(cls)
    names = tuple(f.name for f in fields(cls))
    init = cls.__init__

    def __new__(c, *args, **kw):
        key = (c, args, tuple(sorted(kw.items())))
        hit = _INTERN.get(key)
        if hit is not None:
            return hit
        obj = object.__new__(c)
        init(obj, *args, **kw)
        _INTERN[key] = obj
        return obj

    def __init__(self, *args, **kw):
        pass

    def __hash__(self):
        try:
            return self.__dict__["_h"]
        except KeyError:
            h = hash((cls.__name__,) + tuple(getattr(self, n) for n in names))
            object.__setattr__(self, "_h", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not cls or hash(self) != hash(other):
            return False
        return all(getattr(self, n) == getattr(other, n) for n in names)

    def __reduce__(self):
        return (cls, tuple(getattr(self, n) for n in names))

    cls.__new__ = __new__
    cls.__init__ = __init__
    cls.__reduce__ = __reduce__
    cls.__hash__ = __hash__
    cls.__eq__ = __eq__
    return cls


class Term:
    name: str


@_node
class Var(Term):
    name: str

    def __str__(self) -> str:
        return self.name


@_node
class Const(Term):
    name: str

    def __str__(self) -> str:
        return self.name


class Formula:
    def __str__(self) -> str:
        from .printer import to_text

        return to_text(self)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self}>"

    def sort_key(self) -> str:
        try:
            return self.__dict__["_k"]
        except KeyError:
            k = str(self)
            object.__setattr__(self, "_k", k)
            return k

    def __lt__(self, other: "Formula") -> bool:
        return self.sort_key() < other.sort_key()


@_node
class Atom(Formula):
    pred: str
    args: tuple = ()


@_node
class Top(Formula):
    pass


@_node
class Bottom(Formula):
    pass


TRUE = Top()
FALSE = Bottom()


@_node
class Not(Formula):
    body: Formula


def _flatten(kind, items: Iterable[Formula]) -> tuple:
    out = []
    for f in items:
        if isinstance(f, kind):
            out.extend(f.items)
        else:
            out.append(f)
    return tuple(sorted(out, key=Formula.sort_key))


@_node
class And(Formula):
    items: tuple

    def __post_init__(self):
        flat = _flatten(And, self.items)
        if len(flat) < 2:
            raise ValueError("And needs at least two operands")
        object.__setattr__(self, "items", flat)


@_node
class Or(Formula):
    items: tuple

    def __post_init__(self):
        flat = _flatten(Or, self.items)
        if len(flat) < 2:
            raise ValueError("Or needs at least two operands")
        object.__setattr__(self, "items", flat)


@_node
class Implies(Formula):
    left: Formula
    right: Formula


@_node
class Iff(Formula):
    left: Formula
    right: Formula


@_node
class Forall(Formula):
    var: str
    body: Formula


@_node
class Exists(Formula):
    var: str
    body: Formula


@_node
class Next(Formula):
    body: Formula


@_node
class Always(Formula):
    body: Formula


@_node
class Sometime(Formula):
    body: Formula


@_node
class Until(Formula):
    left: Formula
    right: Formula


@_node
class Unless(Formula):
    """Weak until: ``left`` holds until ``right``, or forever."""

    left: Formula
    right: Formula


WeakUntil = Unless

TEMPORAL = (Next, Always, Sometime, Until, Unless)
BINARY = (Implies, Iff, Until, Unless)
UNARY = (Not, Next, Always, Sometime)
QUANT = (Forall, Exists)


# ---------------------------------------------------------------- builders


def conj(*fs: Formula) -> Formula:
    """Simplifying conjunction: drops ``true``, absorbs ``false``, dedupes."""
    seen = {}
    for f in _flatten(And, fs):
        if isinstance(f, Bottom):
            return FALSE
        if isinstance(f, Top):
            continue
        seen[f] = None
    items = list(seen)
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    return And(tuple(items))


def disj(*fs: Formula) -> Formula:
    seen = {}
    for f in _flatten(Or, fs):
        if isinstance(f, Top):
            return TRUE
        if isinstance(f, Bottom):
            continue
        seen[f] = None
    items = list(seen)
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    return Or(tuple(items))


def neg(f: Formula) -> Formula:
    if isinstance(f, Not):
        return f.body
    if isinstance(f, Top):
        return FALSE
    if isinstance(f, Bottom):
        return TRUE
    return Not(f)


def implies(a: Formula, b: Formula) -> Formula:
    if isinstance(a, Top):
        return b
    if isinstance(a, Bottom) or isinstance(b, Top):
        return TRUE
    return Implies(a, b)


def forall(var: str, body: Formula) -> Formula:
    return Forall(var, body) if var in free_vars(body) else body


def exists(var: str, body: Formula) -> Formula:
    return Exists(var, body) if var in free_vars(body) else body


def atom(pred: str, *args: str | Term) -> Atom:
    """``atom("P", "x")`` builds ``P(x)`` with ``x`` a variable.

    Strings are variables; pass :class:`Const` explicitly for constants.
    """
    return Atom(pred, tuple(a if isinstance(a, Term) else Var(a) for a in args))


def prop(name: str) -> Atom:
    return Atom(name, ())


# ---------------------------------------------------------------- traversal


def children(f: Formula) -> tuple:
    if isinstance(f, (And, Or)):
        return f.items
    if isinstance(f, UNARY) or isinstance(f, QUANT):
        return (f.body,)
    if isinstance(f, BINARY):
        return (f.left, f.right)
    return ()


def subformulae(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(children(g)))


def size(f: Formula) -> int:
    """Number of syntax-tree nodes (terms inside atoms are not counted)."""
    return sum(1 for _ in subformulae(f))


def free_vars(f: Formula) -> frozenset:
    try:
        return f.__dict__["_fv"]
    except KeyError:
        pass
    if isinstance(f, Atom):
        r = frozenset(t.name for t in f.args if isinstance(t, Var))
    elif isinstance(f, QUANT):
        r = free_vars(f.body) - {f.var}
    else:
        r = frozenset().union(*(free_vars(c) for c in children(f)))
    object.__setattr__(f, "_fv", r)
    return r


def atoms_of(f: Formula) -> frozenset:
    """The atom nodes occurring in ``f``; cached on the node."""
    try:
        return f.__dict__["_atoms"]
    except KeyError:
        pass
    if isinstance(f, Atom):
        r = frozenset((f,))
    else:
        r = frozenset().union(*(atoms_of(c) for c in children(f)))
    object.__setattr__(f, "_atoms", r)
    return r


def is_first_order(f: Formula) -> bool:
    """No temporal operator anywhere in ``f``; cached on the node."""
    try:
        return f.__dict__["_fo"]
    except KeyError:
        pass
    r = not isinstance(f, TEMPORAL) and all(is_first_order(c) for c in children(f))
    object.__setattr__(f, "_fo", r)
    return r


def constants_of(f: Formula) -> frozenset:
    out = set()
    for g in subformulae(f):
        if isinstance(g, Atom):
            out.update(t.name for t in g.args if isinstance(t, Const))
    return frozenset(out)


def predicates_of(f: Formula) -> dict:
    out = {}
    for g in subformulae(f):
        if isinstance(g, Atom):
            out[g.pred] = len(g.args)
    return out


def is_temporal_free(f: Formula) -> bool:
    return not any(isinstance(g, TEMPORAL) for g in subformulae(f))


def rebuild(f: Formula, kids: tuple) -> Formula:
    """Same node type as ``f`` with new children."""
    if isinstance(f, And):
        return And(kids)
    if isinstance(f, Or):
        return Or(kids)
    if isinstance(f, QUANT):
        return type(f)(f.var, kids[0])
    if isinstance(f, UNARY):
        return type(f)(kids[0])
    if isinstance(f, BINARY):
        return type(f)(kids[0], kids[1])
    return f


def fresh_var(avoid: Iterable[str], base: str = "v") -> str:
    avoid = set(avoid)
    i = 0
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


def all_var_names(f: Formula) -> set:
    out = set()
    for g in subformulae(f):
        if isinstance(g, Atom):
            out.update(t.name for t in g.args if isinstance(t, Var))
        elif isinstance(g, QUANT):
            out.add(g.var)
    return out


def substitute(f: Formula, mapping: dict) -> Formula:
    """Capture-avoiding substitution of terms for free variables.

    ``mapping`` sends variable names to :class:`Term` values.
    """
    mapping = {k: v for k, v in mapping.items() if k in free_vars(f)}
    if not mapping:
        return f
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(mapping.get(t.name, t) if isinstance(t, Var) else t for t in f.args))
    if isinstance(f, QUANT):
        incoming = {t.name for t in mapping.values() if isinstance(t, Var)}
        var, body = f.var, f.body
        if var in incoming:
            new = fresh_var(incoming | all_var_names(body) | set(mapping), var)
            body = substitute(body, {var: Var(new)})
            var = new
        inner = {k: v for k, v in mapping.items() if k != var}
        return type(f)(var, substitute(body, inner))
    return rebuild(f, tuple(substitute(c, mapping) for c in children(f)))


def rename_free(f: Formula, old: str, new: str) -> Formula:
    return substitute(f, {old: Var(new)})


def instantiate(f: Formula, var: str, const: str) -> Formula:
    return substitute(f, {var: Const(const)})


# ---------------------------------------------------------------- signature


class SignatureError(ValueError):
    pass


@dataclass(frozen=True)
class Signature:
    predicates: tuple = ()  # sorted (name, arity) pairs
    constants: frozenset = frozenset()

    def __post_init__(self):
        names = [n for n, _ in self.predicates]
        if len(set(names)) != len(names):
            raise SignatureError("predicate declared twice with different arities")
        clash = set(names) & set(self.constants)
        if clash:
            raise SignatureError(f"name used as predicate and constant: {sorted(clash)[0]}")
        for n, a in self.predicates:
            if a < 0:
                raise SignatureError(f"negative arity for {n}")

    @property
    def arity(self) -> dict:
        return dict(self.predicates)

    def unary(self) -> list:
        return sorted(n for n, a in self.predicates if a == 1)

    def propositions(self) -> list:
        return sorted(n for n, a in self.predicates if a == 0)

    def is_monadic(self) -> bool:
        return all(a <= 1 for _, a in self.predicates)

    def merge(self, other: "Signature") -> "Signature":
        arity = dict(self.predicates)
        for n, a in other.predicates:
            if arity.get(n, a) != a:
                raise SignatureError(f"arity mismatch for {n}: {arity[n]} vs {a}")
            arity[n] = a
        return Signature(tuple(sorted(arity.items())), self.constants | other.constants)

    @staticmethod
    def of(formulas: Iterable[Formula]) -> "Signature":
        arity: dict = {}
        consts: set = set()
        for f in formulas:
            for g in atoms_of(f):
                a = len(g.args)
                if arity.get(g.pred, a) != a:
                    raise SignatureError(f"arity mismatch for {g.pred}: {arity[g.pred]} vs {a}")
                arity[g.pred] = a
                consts.update(t.name for t in g.args if isinstance(t, Const))
        return Signature(tuple(sorted(arity.items())), frozenset(consts))
