import random

import pytest
from hypothesis import assume, given, settings

from conftest import load
from generators import formulas, random_problem
from monodic.clauses import SchemeLimitExceeded
from monodic.dsnf import (
    DsnfError, ReductionLimit, flood_constants, grounding_clauses, is_flooded, reduce_extended,
    reduce_ground_eventuality, reduce_ground_next_time, to_dsnf,
)
from monodic.graph import decide
from monodic.models import bounded_search, eval
from monodic.normal import classify
from monodic.parser import parse_formula as F
from monodic.parser import parse_problem
from monodic.problem import ExtendedProblem, TemporalProblem
from monodic.syntax import Always, Exists, Forall, Iff, Not, atom, free_vars


def test_dsnf_nested_example():
    p = to_dsnf(F("exists x. always sometime forall y. forall z. exists u. Phi(x,y,z,u)")).problem
    assert len(p.initial) == 1 and len(p.universal) == 5
    assert len(p.step) == 2 and len(p.eventuality) == 1
    ev = p.eventuality[0].body
    assert isinstance(ev, Not) and ev.body.pred.startswith("_waitfor")
    # one step clause keeps the always fixpoint, the other leaves the waitfor predicate
    assert any(s.lhs == s.rhs for s in p.step)
    assert any(s.lhs == ev.body for s in p.step)


def test_dsnf_first_order_sentence():
    f = F("forall x. exists y. (P(x) | Q(y))")
    p = to_dsnf(f).problem
    assert p.initial == (f,) and not p.universal and not p.step and not p.eventuality


def test_dsnf_conditional_eventuality():
    res = to_dsnf(F("always forall x. (P(x) -> sometime L(x))"))
    p = res.problem
    (ev,) = p.eventuality
    w = ev.body.body
    assert w.pred.startswith("_waitfor_L")
    uncond = [u for u in p.universal if w.pred in str(u) and "~L(x)" in str(u)]
    assert len(uncond) == 1
    assert isinstance(uncond[0], Forall)
    assert any(line.startswith(w.pred) for line in res.ledger.lines())


def test_dsnf_rejects_open_and_non_monodic():
    with pytest.raises(DsnfError):
        to_dsnf(Forall("x", Always(atom("P", "x", "y"))))
    with pytest.raises(DsnfError):
        to_dsnf(F("forall x. forall y. always R(x,y)"))


def test_dsnf_degenerate_eventualities():
    assert not to_dsnf(F("always sometime true")).problem.eventuality
    p = to_dsnf(F("sometime false")).problem
    assert not decide(p).satisfiable


def test_flood_adds_renamed_eventuality():
    p = parse_problem("initial { P(c); } step { P(x) => next P(x); } eventuality { sometime ~P(x); }")
    q = flood_constants(p)
    new = [e for e in q.eventuality if e.ground]
    assert len(new) == 1
    name = new[0].body
    assert Iff(name, F("~P(c)")) in q.universal
    assert is_flooded(q) and flood_constants(q) == q


def test_flood_without_constants_is_identity(graph_1):
    assert flood_constants(graph_1) == graph_1


def test_flood_res2_1(res2_1):
    q = flood_constants(res2_1)
    assert any(isinstance(u, Iff) and u.right == F("~L(c)") for u in q.universal)
    assert len(q.eventuality) == 2


def test_extended_example():
    p = reduce_extended(load("ext_1.tp"))
    expected = [
        "exists x. exists y. P_t0(x,y)",
        "forall x. forall y. (P_t0(x,y) -> R_t0(x))",
        "forall x. forall y. (P_t1(x,y) -> R_t1(x))",
        "forall x. forall y. (P_t2(x,y) -> R_t2(x))",
        "forall x. (R_t0(x) -> R_t1(x))",
        "forall x. (R_t1(x) -> R_t2(x))",
        "forall x. forall y. (P_t0(x,y) -> P_t2(x,y))",
        "forall x1. forall x2. (P(x1,x2) <-> P_t2(x1,x2))",
        "forall x. (R(x) <-> R_t2(x))",
    ]
    assert list(p.initial) == [F(e) for e in expected]
    base = load("ext_1.tp").base
    assert (p.universal, p.step, p.eventuality) == (base.universal, base.step, base.eventuality)


def test_extended_empty_part_keeps_verdict():
    base = parse_problem("initial { P(c); } universal { forall x. (P(x) -> Q(x)); } step { Q(x) => next ~Q(x); }")
    p = reduce_extended(ExtendedProblem(base, ()))
    assert F("forall x. (P(x) <-> P_t0(x))") in p.initial
    assert decide(p).satisfiable == decide(base).satisfiable


def test_extended_next_constant():
    base = parse_problem("initial { l; } step { l => next m; }")
    xp = ExtendedProblem(base, (F("next P(c)"),))
    p = reduce_extended(xp)
    assert F("P_t1(c)") in p.initial
    assert F("l_t0 -> m_t1") in p.initial
    assert decide(p).satisfiable


def test_extended_rejects_other_operators():
    with pytest.raises(Exception):
        reduce_extended(ExtendedProblem(TemporalProblem(), (F("sometime p"),)))


GROUND_EV = "universal { e -> exists x. (P(x) & Q(x)); } step { P(x) => next P(x); Q(x) => next ~P(x); } eventuality { sometime e; }"


def test_grounding_six_clauses():
    p = parse_problem(GROUND_EV)
    got = {(str(d.lhs), str(d.rhs)) for d in grounding_clauses(p)}
    assert got == {
        ("exists y. P(y)", "exists y. P(y)"),
        ("forall y. P(y)", "forall y. P(y)"),
        ("exists y. Q(y)", "exists y. ~P(y)"),
        ("forall y. Q(y)", "forall y. ~P(y)"),
        ("exists y. P(y) & Q(y)", "exists y. P(y) & ~P(y)"),
        ("forall y. P(y) | Q(y)", "forall y. P(y) | ~P(y)"),
    }
    q = reduce_ground_eventuality(p)
    assert not q.nonground_steps() and len(q.step) == 6


def test_grounding_trivial_cases():
    p = parse_problem("universal { exists x. P(x); } eventuality { sometime l; }")
    assert reduce_ground_eventuality(p) == p
    one = parse_problem("step { P(x) => next Q(x); } eventuality { sometime l; }")
    assert [d.origin.kind for d in grounding_clauses(one)] == ["exists", "forall"]
    with pytest.raises(DsnfError):
        reduce_ground_eventuality(parse_problem("eventuality { sometime P(x); }"))


def test_grounding_limit():
    p = parse_problem("step { A(x) => next A(x); B(x) => next B(x); C(x) => next C(x); } eventuality { sometime l; }")
    with pytest.raises(ReductionLimit):
        reduce_ground_eventuality(p, limit=4)


NEXT_TIME = "initial { l; } universal { forall x. (l -> Q(x)); } step { l => next l; } eventuality { sometime ~Q(x); }"


def test_ground_next_time_example():
    p = parse_problem(NEXT_TIME)
    q = reduce_ground_next_time(p)
    (e,) = q.eventuality
    assert e.ground
    assert Iff(e.body, F("exists x. ~Q(x)")) in q.universal
    assert not decide(q).satisfiable


def test_ground_next_time_with_constant():
    p = parse_problem(NEXT_TIME.replace("initial { l; }", "initial { l & Q(c); }"))
    q = reduce_ground_next_time(p)
    bodies = {u.right for u in q.universal if isinstance(u, Iff)}
    assert F("~Q(c)") in bodies and F("exists x. ~Q(x)") in bodies
    assert decide(q).satisfiable == decide(p).satisfiable


def test_ground_next_time_no_change_when_ground():
    p = parse_problem("initial { l; } step { l => next l; } eventuality { sometime m; }")
    assert reduce_ground_next_time(p) == p
    with pytest.raises(DsnfError):
        reduce_ground_next_time(parse_problem("step { P(x) => next P(x); }"))


@pytest.mark.parametrize("semantics", ["constant", "expanding"])
def test_reductions_keep_verdict(semantics):
    rng = random.Random(11)
    checked = 0
    for _ in range(80):
        p = random_problem(rng, semantics)
        want = decide(p).satisfiable
        assert decide(flood_constants(p), flood=False).satisfiable == want
        if p.eventuality and not p.nonground_eventualities() and p.nonground_steps():
            try:
                got = decide(reduce_ground_eventuality(p)).satisfiable
            except SchemeLimitExceeded:
                continue
            assert got == want
            checked += 1
        if p.nonground_eventualities() and not p.nonground_steps():
            assert decide(reduce_ground_next_time(p)).satisfiable == want
            checked += 1
    assert checked >= 10


def _close(f):
    for v in sorted(free_vars(f)):
        f = Exists(v, f)
    return f


@given(formulas(max_leaves=8))
@settings(max_examples=60, deadline=None)
def test_dsnf_models_satisfy_input(f):
    f = _close(f)
    assume(classify(f).is_monodic)
    for semantics in ("constant", "expanding"):
        p = to_dsnf(f, semantics).problem
        m = bounded_search(p, 2, 3)
        if m is not None:
            assert eval(m, 0, {}, f)


def test_lhs_unique_after_transforms(res2_1):
    for q in (flood_constants(res2_1), to_dsnf(F("always (p -> next q) & always (p -> next ~r)")).problem):
        lhs = [s.lhs for s in q.step]
        assert len(lhs) == len(set(lhs))
