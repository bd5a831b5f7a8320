import random

import pytest

from conftest import load
from generators import random_problem
from monodic.clauses import PredicateColour, PropositionalColour, count_schemes
from monodic.dsnf import to_dsnf
from monodic.graph import (
    ConditionViolated, Satisfiable, build, check_model_conditions, decide, suitable, suitable_constant,
    suitable_theta,
)
from monodic.models import bounded_search
from monodic.parser import parse_formula as F
from monodic.parser import parse_problem

P_ = PredicateColour(("P",), frozenset({"P"}))
NOT_P = PredicateColour(("P",), frozenset())


def test_suitability():
    p = load("graph_1.tp")
    # P(x) => next P(x) forbids a P element from turning ~P
    assert suitable(P_, P_, p.universal, p)
    assert not suitable(P_, NOT_P, p.universal, p)
    assert suitable(NOT_P, P_, p.universal, p) and suitable(NOT_P, NOT_P, p.universal, p)
    with pytest.raises(ValueError):
        suitable(P_, PredicateColour(("Q",), frozenset()), p.universal, p)


def test_suitability_theta_and_constant():
    p = parse_problem("initial { P(c); } step { l => next ~l; P(x) => next ~P(x); }")
    lt, nl = PropositionalColour(("l",), frozenset({"l"})), PropositionalColour(("l",), frozenset())
    assert not suitable_theta(lt, lt, p.universal, p) and suitable_theta(lt, nl, p.universal, p)
    assert suitable_theta(nl, lt, p.universal, p)
    assert suitable_constant("c", P_, NOT_P, p.universal, p)
    assert not suitable_constant("c", P_, P_, p.universal, p)


def test_graph_1_vertices_and_edges():
    g = build(load("graph_1.tp"))
    names = [g.name(v) for v in range(len(g))]
    assert names == ["C1", "C3", "C4", "C5", "C6"]
    assert g.initial == frozenset(range(5))
    edges = {g.name(v): [g.name(w) for w in g.edges[v]] for v in range(len(g))}
    assert edges == {
        "C1": ["C1", "C4"],
        "C3": ["C1", "C3", "C4", "C6"],
        "C4": ["C1", "C4"],
        "C5": ["C1", "C3", "C4", "C5", "C6"],
        "C6": ["C1", "C3", "C4", "C6"],
    }


def test_graph_1_condition_one_fails():
    g = build(load("graph_1.tp"))
    r = check_model_conditions(g)
    assert isinstance(r, ConditionViolated) and r.condition == 1 and g.name(r.vertex) == "C1"


def test_graph_1_decide_deletions():
    d = decide(load("graph_1.tp"))
    assert not d.satisfiable
    assert [(d.graph.name(v), why.split(":")[0]) for v, why in d.deletions] == [
        ("C1", "condition 1"), ("C3", "condition 1"), ("C4", "condition 1"), ("C6", "condition 1"),
        ("C5", "condition 3"),
    ]


def test_dot_output():
    g = build(load("graph_1.tp"))
    dot = g.to_dot(deleted={0})
    assert dot.startswith("digraph behaviour {") and dot.count("->") == 17
    assert dot.count("doublecircle") == 5 and dot.count("dashed") == 1


@pytest.mark.parametrize("name, sat", [
    ("graph_1.tp", False),
    ("loop_bfs.tp", False),
    ("flooding.tp", False),
    ("ground_step.tp", False),
    ("ground_eventuality.tp", False),
])
def test_decide_examples(name, sat):
    assert decide(load(name)).satisfiable is sat


def test_flooding_verdict_with_and_without_flood():
    p = load("flooding.tp")
    assert not decide(p).satisfiable
    # without flooding the constant condition is still checked on the graph
    assert not decide(p, flood=False).satisfiable


@pytest.mark.parametrize("semantics, sat", [("constant", False), ("expanding", True)])
def test_decide_domain_semantics(semantics, sat):
    assert decide(to_dsnf(load("cvse2.fotl"), semantics).problem).satisfiable is sat


TOGGLE = "initial { exists x. P(x); } step { P(x) => next ~P(x); ~P(x) => next P(x); } eventuality { sometime P(x); }"


def test_satisfiable_certificate_has_runs():
    d = decide(parse_problem(TOGGLE))
    assert d.satisfiable and d.witnesses
    g = d.graph
    for w in d.witnesses:
        for (v, _), (u, _) in zip(w.path, w.path[1:]):
            assert u in g.edges[v]
    assert "verdict: SAT" in d.certificate()


def test_empty_initial_set():
    d = decide(parse_problem("initial { l; } universal { ~l; }"))
    assert not d.satisfiable and "no initial vertex" in d.reason


def _ids(g):
    return {g.ids[v] for v in range(len(g))}


@pytest.mark.parametrize("seed", range(3))
def test_combinatorial_edges_match_oracle(seed):
    rng = random.Random(seed)
    for _ in range(12):
        p = random_problem(rng, rng.choice(["constant", "expanding"]))
        if count_schemes(p) > 256:
            continue
        a = build(p, edge_check="combinatorial", restrict=False)
        b = build(p, edge_check="oracle", restrict=False)
        assert a.edges == b.edges and a.initial == b.initial


@pytest.mark.parametrize("seed", range(3))
def test_stronger_universal_part_shrinks_graph(seed):
    rng = random.Random(100 + seed)
    for _ in range(12):
        p = random_problem(rng, "constant")
        if count_schemes(p) > 256:
            continue
        q = p.with_universal([F("exists x. P(x)") if "P" in p.signature.unary() else F("l")])
        g, h = build(p, restrict=False), build(q, restrict=False)
        assert _ids(h) <= _ids(g)
        if decide(q).satisfiable:
            assert decide(p).satisfiable


@pytest.mark.parametrize("semantics", ["constant", "expanding"])
def test_bounded_models_imply_satisfiable(semantics):
    rng = random.Random(7)
    for _ in range(30):
        p = random_problem(rng, semantics)
        m = bounded_search(p, 2, 3)
        d = decide(p)
        if m is not None:
            assert d.satisfiable


def test_satisfiable_result_type():
    r = check_model_conditions(build(parse_problem(TOGGLE)))
    assert isinstance(r, Satisfiable) and r.witnesses
