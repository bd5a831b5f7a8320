"""Behaviour graphs of monadic problems and a decision procedure over them.

Colours are handled as bitmasks over the temporal predicates (bit ``i`` for
the ``i``-th predicate of :func:`monodic.clauses.scheme_vocabulary`).  The
requirement ``B_gamma`` a colour passes to the next state is a pair of masks
(must be true, must be false); it is ``None`` when contradictory.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .clauses import (
    ColourScheme, PredicateColour, PropositionalColour, SchemeLimitExceeded, _const_formula, categorical,
    colour_schemes, colour_sides, scheme_vocabulary, theta_sides,
)
from .dsnf import flood_constants, is_flooded
from .oracle import OracleContext
from .problem import X, EventualityClause, Semantics, TemporalProblem, literal_atom
from .syntax import Not, conj, exists


# ---------------------------------------------------------------- suitability


def suitable(g: PredicateColour, g2: PredicateColour, universal, p: TemporalProblem) -> bool:
    """``U & exists x (F_g2(x) & B_g(x))`` is satisfiable."""
    if g.predicates != g2.predicates:
        raise ValueError("colours over different predicate lists")
    ctx = OracleContext(universal, vocabulary=p.signature)
    try:
        return ctx.satisfiable(exists(X, conj(g2.formula(), colour_sides(g, p)[1])))
    finally:
        ctx.close()


def suitable_theta(t: PropositionalColour, t2: PropositionalColour, universal, p: TemporalProblem) -> bool:
    """``U & F_t2 & B_t`` is satisfiable."""
    ctx = OracleContext(universal, vocabulary=p.signature)
    try:
        return ctx.satisfiable(conj(t2.formula(), theta_sides(t, p)[1]))
    finally:
        ctx.close()


def suitable_constant(c: str, g: PredicateColour, g2: PredicateColour, universal, p: TemporalProblem) -> bool:
    """``U & F_g2(c) & B_g(c)`` is satisfiable."""
    ctx = OracleContext(universal, vocabulary=p.signature)
    try:
        return ctx.satisfiable(_const_formula(conj(g2.formula(), colour_sides(g, p)[1]), c))
    finally:
        ctx.close()


# ---------------------------------------------------------------- graph


def _mask(true, names) -> int:
    return sum(1 << i for i, n in enumerate(names) if n in true)


def _requirement(lits, names) -> Optional[tuple]:
    pos = neg = 0
    for lit in lits:
        bit = 1 << names.index(literal_atom(lit).pred)
        if isinstance(lit, Not):
            neg |= bit
        else:
            pos |= bit
    return None if pos & neg else (pos, neg)


def _meets(colour: int, req: Optional[tuple]) -> bool:
    return req is not None and colour & req[0] == req[0] and not colour & req[1]


@dataclass
class BehaviourGraph:
    problem: TemporalProblem
    vertices: list  # ColourScheme
    edges: dict  # vertex index -> tuple of successor indices
    initial: frozenset
    preds: tuple = ()
    props: tuple = ()
    consts: tuple = ()
    ids: tuple = ()  # 1-based position of each vertex in the scheme enumeration

    def name(self, v: int) -> str:
        return f"C{self.ids[v] if self.ids else v + 1}"

    @property
    def semantics(self) -> Semantics:
        return self.problem.semantics

    def __len__(self) -> int:
        return len(self.vertices)

    def colours(self, v: int) -> list:
        return [_mask(g.true, self.preds) for g in self.vertices[v].gammas]

    def theta(self, v: int) -> int:
        return _mask(self.vertices[v].theta.true, self.props)

    def const_colour(self, v: int, c: str) -> int:
        return _mask(self.vertices[v].colour_of(c).true, self.preds)

    def to_dot(self, deleted=()) -> str:
        deleted = set(deleted)
        lines = ["digraph behaviour {"]
        for i, c in enumerate(self.vertices):
            attrs = [f'label="{self.name(i)}: {c}"', "shape=" + ("doublecircle" if i in self.initial else "circle")]
            if i in deleted:
                attrs.append("style=dashed")
            lines.append(f"  v{i} [{', '.join(attrs)}];")
        for i in range(len(self.vertices)):
            for j in self.edges.get(i, ()):
                lines.append(f"  v{i} -> v{j};")
        lines.append("}")
        return "\n".join(lines) + "\n"


class _Requirements:
    """``B`` of every colour and propositional colour as masks."""

    def __init__(self, p: TemporalProblem, preds, props):
        self.preds, self.props = list(preds), list(props)
        self.ng = [(s.lhs, s.rhs) for s in p.nonground_steps()]
        self.gr = [(s.lhs, s.rhs) for s in p.ground_steps()]
        self.memo: dict = {}

    def colour(self, col: int):
        key = ("c", col)
        if key not in self.memo:
            lits = [r for l, r in self.ng if _meets(col, _requirement([l], self.preds))]
            self.memo[key] = _requirement(lits, self.preds)
        return self.memo[key]

    def theta(self, th: int):
        key = ("t", th)
        if key not in self.memo:
            lits = [r for l, r in self.gr if _meets(th, _requirement([l], self.props))]
            self.memo[key] = _requirement(lits, self.props)
        return self.memo[key]


def _edge(g: BehaviourGraph, req: _Requirements, v: int, w: int, constant: bool) -> bool:
    src, dst = g.colours(v), g.colours(w)
    if not _meets(g.theta(w), req.theta(g.theta(v))):
        return False
    for c in g.consts:
        if not _meets(g.const_colour(w, c), req.colour(g.const_colour(v, c))):
            return False
    for a in src:
        if not any(_meets(b, req.colour(a)) for b in dst):
            return False
    if constant:
        for b in dst:
            if not any(_meets(b, req.colour(a)) for a in src):
                return False
    return True


def build(p: TemporalProblem, limit: Optional[int] = 1 << 14, stats: Optional[dict] = None,
          edge_check: str = "combinatorial", restrict: bool = True) -> BehaviourGraph:
    """Vertices are the colour schemes consistent with ``U``; initial ones also with ``I``.

    Edges ``C -> C'`` hold iff ``U & F_C' & B_C`` is satisfiable.  Since
    ``F_C'`` fixes the truth of ``B_C``, the default decides this on the
    colours directly; ``edge_check="oracle"`` asks the oracle instead.
    """
    preds, props, consts = scheme_vocabulary(p)
    stats = stats if stats is not None else {}
    uctx = OracleContext(p.universal, vocabulary=p.signature, stats=stats)
    ictx = OracleContext(p.universal + p.initial, vocabulary=p.signature, stats=stats)
    try:
        vertices, initial, formulas, ids = [], set(), [], []
        for n, c in enumerate(colour_schemes(p, limit)):
            t = categorical(c, p)
            if uctx.satisfiable(t.f):
                if ictx.satisfiable(t.f):
                    initial.add(len(vertices))
                vertices.append(c)
                formulas.append(t)
                ids.append(n + 1)
        g = BehaviourGraph(p, vertices, {}, frozenset(initial), preds, props, consts, tuple(ids))
        constant = p.semantics == Semantics.CONSTANT
        req = _Requirements(p, preds, props)
        for v in range(len(vertices)):
            if edge_check == "oracle":
                succ = [w for w in range(len(vertices)) if uctx.satisfiable(formulas[w].f, formulas[v].b)]
            else:
                succ = [w for w in range(len(vertices)) if _edge(g, req, v, w, constant)]
            g.edges[v] = tuple(succ)
    finally:
        uctx.close()
        ictx.close()
    return restrict_reachable(g) if restrict else g


def restrict_reachable(g: BehaviourGraph) -> BehaviourGraph:
    seen = set(g.initial)
    todo = deque(sorted(g.initial))
    while todo:
        v = todo.popleft()
        for w in g.edges[v]:
            if w not in seen:
                seen.add(w)
                todo.append(w)
    keep = sorted(seen)
    index = {v: i for i, v in enumerate(keep)}
    return BehaviourGraph(
        g.problem, [g.vertices[v] for v in keep],
        {index[v]: tuple(index[w] for w in g.edges[v] if w in index) for v in keep},
        frozenset(index[v] for v in g.initial), g.preds, g.props, g.consts,
        tuple(g.ids[v] for v in keep) if g.ids else (),
    )


# ---------------------------------------------------------------- model conditions


@dataclass(frozen=True)
class RunWitness:
    """A run through ``(vertex, colour)`` pairs; ``hits`` are positions where the eventuality holds."""

    start: int
    path: tuple  # (vertex, colour mask)
    hits: tuple
    eventuality: Optional[EventualityClause] = None


@dataclass(frozen=True)
class Satisfiable:
    witnesses: tuple = ()


@dataclass(frozen=True)
class ConditionViolated:
    condition: int
    vertex: int
    detail: str


class _Analysis:
    """Reachability questions over the subgraph induced by ``alive``."""

    def __init__(self, g: BehaviourGraph, alive: set):
        self.g, self.alive = g, alive
        self.req = _Requirements(g.problem, g.preds, g.props)
        self.succ = {v: [w for w in g.edges[v] if w in alive] for v in alive}
        self.pred: dict = {v: [] for v in alive}
        for v in alive:
            for w in self.succ[v]:
                self.pred[w].append(v)

    def strictly_reaches(self, targets: set) -> set:
        """Vertices with a path of at least one edge into ``targets``."""
        good: set = set()
        todo = deque(targets)
        while todo:
            w = todo.popleft()
            for v in self.pred[w]:
                if v not in good:
                    good.add(v)
                    todo.append(v)
        return good

    def product_succ(self, node) -> list:
        v, a = node
        r = self.req.colour(a)
        return [(w, b) for w in self.succ[v] for b in self.g.colours(w) if _meets(b, r)]

    def product_good(self, lit) -> set:
        """``(vertex, colour)`` nodes with a run of at least one step to a colour containing ``lit``."""
        bit = 1 << self.g.preds.index(literal_atom(lit).pred)
        want = 0 if isinstance(lit, Not) else bit
        nodes = [(v, a) for v in self.alive for a in self.g.colours(v)]
        back: dict = {n: [] for n in nodes}
        for n in nodes:
            for m in self.product_succ(n):
                back[m].append(n)
        targets = [n for n in nodes if n[1] & bit == want]
        good: set = set()
        todo = deque(targets)
        while todo:
            m = todo.popleft()
            for n in back[m]:
                if n not in good:
                    good.add(n)
                    todo.append(n)
        return good

    def violations(self, check_constants: bool) -> list:
        g, p = self.g, self.g.problem
        out = []
        for e in p.nonground_eventualities():
            good = self.product_good(e.body)
            for v in sorted(self.alive):
                for a in g.colours(v):
                    if (v, a) not in good:
                        out.append(ConditionViolated(1, v, f"colour {_show(a, g.preds)} never reaches {e.body}"))
                        break
            if check_constants:
                bit = 1 << g.preds.index(literal_atom(e.body).pred)
                want = 0 if isinstance(e.body, Not) else bit
                for c in g.consts:
                    hit = self.strictly_reaches({w for w in self.alive if g.const_colour(w, c) & bit == want})
                    out += [ConditionViolated(2, v, f"{c} never reaches {e.body}")
                            for v in sorted(self.alive - hit)]
        for e in p.ground_eventualities():
            bit = 1 << g.props.index(literal_atom(e.body).pred)
            want = 0 if isinstance(e.body, Not) else bit
            hit = self.strictly_reaches({w for w in self.alive if g.theta(w) & bit == want})
            out += [ConditionViolated(3, v, f"never reaches {e.body}") for v in sorted(self.alive - hit)]
        return out

    def witness(self, v: int, a: int, e: EventualityClause) -> Optional[RunWitness]:
        """Shortest run from ``(v, a)`` to the eventuality literal."""
        bit = 1 << self.g.preds.index(literal_atom(e.body).pred)
        want = 0 if isinstance(e.body, Not) else bit
        start = (v, a)
        parent = {start: None}
        todo = deque([start])
        while todo:
            n = todo.popleft()
            for m in self.product_succ(n):
                if m[1] & bit == want:
                    path = [m, n]
                    while parent[path[-1]] is not None:
                        path.append(parent[path[-1]])
                    path.reverse()
                    return RunWitness(0, tuple(path), (len(path) - 1,), e)
                if m not in parent:
                    parent[m] = n
                    todo.append(m)
        return None


def _show(colour: int, names) -> str:
    return "[" + ",".join(n if colour >> i & 1 else "~" + n for i, n in enumerate(names)) + "]"


def check_model_conditions(g: BehaviourGraph, p: Optional[TemporalProblem] = None):
    """The three eventuality conditions on every vertex of ``g``."""
    p = p or g.problem
    an = _Analysis(g, set(range(len(g))))
    bad = an.violations(not is_flooded(p))
    if bad:
        return bad[0]
    return Satisfiable(_witnesses(an, sorted(g.initial)))


def _witnesses(an: _Analysis, starts) -> tuple:
    out = []
    for v in starts:
        for a in an.g.colours(v):
            for e in an.g.problem.nonground_eventualities():
                w = an.witness(v, a, e)
                if w is not None:
                    out.append(w)
    return tuple(out)


# ---------------------------------------------------------------- decision


@dataclass
class Decision:
    satisfiable: bool
    graph: Optional[BehaviourGraph]
    alive: frozenset = frozenset()
    deletions: list = field(default_factory=list)  # (vertex, reason) in deletion order
    witnesses: tuple = ()
    reason: str = ""

    @property
    def verdict(self) -> str:
        return "SAT" if self.satisfiable else "UNSAT"

    def certificate(self) -> str:
        g = self.graph
        lines = [f"verdict: {self.verdict}"]
        if self.reason:
            lines.append(f"reason: {self.reason}")
        if g is None:
            return "\n".join(lines)
        lines.append(f"vertices: {len(g)}")
        for v, why in self.deletions:
            lines.append(f"delete {g.name(v)} {g.vertices[v]}: {why}")
        if self.satisfiable:
            lines.append("stable: " + " ".join(g.name(v) for v in sorted(self.alive)))
            lines.append("initial: " + " ".join(g.name(v) for v in sorted(self.alive & g.initial)))
            for w in self.witnesses:
                steps = " ".join(f"{g.name(v)}{_show(a, g.preds)}" for v, a in w.path)
                lines.append(f"run for {w.eventuality}: {steps}")
        return "\n".join(lines)


def decide(p: TemporalProblem, flood: bool = True, limit: Optional[int] = 1 << 14,
           stats: Optional[dict] = None) -> Decision:
    """Greatest set of vertices meeting the eventuality conditions; SAT iff it keeps an initial vertex."""
    if flood:
        p = flood_constants(p)
    g = build(p, limit, stats)
    if not g.initial:
        return Decision(False, g, reason="no initial vertex: U and I are inconsistent")
    alive = set(range(len(g)))
    deletions = []
    check_constants = not is_flooded(p)
    while True:
        an = _Analysis(g, alive)
        dead = [v for v in sorted(alive) if not an.succ[v]]
        if dead:
            for v in dead:
                deletions.append((v, "no successor"))
            alive -= set(dead)
            continue
        bad = an.violations(check_constants)
        if not bad:
            break
        seen = set()
        for b in bad:
            if b.vertex not in seen:
                seen.add(b.vertex)
                deletions.append((b.vertex, f"condition {b.condition}: {b.detail}"))
        alive -= seen
    survivors = alive & g.initial
    if not survivors:
        return Decision(False, g, frozenset(alive), deletions, reason="every initial vertex deleted")
    an = _Analysis(g, alive)
    return Decision(True, g, frozenset(alive), deletions, _witnesses(an, sorted(survivors)[:1]))


__all__ = [
    "BehaviourGraph", "ConditionViolated", "Decision", "RunWitness", "Satisfiable", "SchemeLimitExceeded",
    "ColourScheme", "build", "check_model_conditions", "decide", "restrict_reachable", "suitable",
    "suitable_constant", "suitable_theta",
]
