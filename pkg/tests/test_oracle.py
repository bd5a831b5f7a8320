import random

import pytest
from hypothesis import given, settings

from generators import formulas, random_fo, random_sentence
from monodic.oracle import (
    AbstractStructure, FragmentUnsupported, OracleContext, OracleQuery, UnknownSymbol, brute_force_model, entails,
    equivalent, eval_concrete, evaluate, is_satisfiable, materialize, register_external_oracle,
)
from monodic.parser import parse_formula as F
from monodic.syntax import Exists, Forall, Signature, free_vars, neg


def S(*realized, props=(), consts=(), prop_names=()):
    return AbstractStructure(("P", "Q"), frozenset(frozenset(c) for c in realized), frozenset(props),
                             tuple((k, frozenset(v)) for k, v in consts), prop_names)


def test_evaluate_single_colour():
    assert evaluate(S({"P"}), F("forall x. P(x)"))


def test_evaluate_two_colours():
    s = S({"P"}, set())
    assert not evaluate(s, F("forall x. P(x)"))
    assert evaluate(s, F("exists x. P(x)"))
    assert evaluate(s, F("(exists x. P(x)) & exists x. ~P(x)"))


def test_evaluate_constant():
    s = S({"Q"}, {"P"}, consts=(("c", {"Q"}),))
    assert evaluate(s, F("Q(c)")) and not evaluate(s, F("P(c)"))


def test_evaluate_unknown_symbol():
    with pytest.raises(UnknownSymbol):
        evaluate(S({"P"}), F("R(c)"))


@pytest.mark.parametrize("hyps, sat", [
    (["exists x. P(x)", "forall x. ~P(x)"], False),
    # the scheme ({~P}, l) contradicts l -> exists x P(x)
    (["l -> exists x. P(x)", "(exists x. ~P(x)) & (forall x. ~P(x)) & l"], False),
    (["l -> exists x. P(x)", "(exists x. ~P(x)) & (forall x. ~P(x)) & ~l"], True),
    (["l -> exists x. P(x)", "exists x. (~P(x) & P(x))"], False),
    (["exists x. P(x)", "exists x. ~P(x)", "forall x. (P(x) | Q(x))"], True),
])
def test_is_satisfiable(hyps, sat):
    r = is_satisfiable([F(h) for h in hyps])
    assert r.satisfiable is sat
    if sat:
        assert all(evaluate(r.witness, F(h)) for h in hyps)


def test_query_object():
    q = OracleQuery((F("exists x. P(x)"),), F("forall x. ~P(x)"))
    assert not is_satisfiable(q)


@pytest.mark.parametrize("hyps, goal", [
    ([], "true"),
    (["forall x. (B(x) -> A(x) & ~L(x))"],
     "forall x. (B(x) & (exists y. B(y)) -> ~L(x) & A(x) & exists y. A(y))"),
    (["exists x. (P1(x) & P2(x))", "forall x. ((Q(x) & exists y. (~P1(y) & ~P2(y))) -> L(x))"],
     "forall x. ((exists y. (~P1(y) & ~P2(y))) & Q(x) -> L(x))"),
])
def test_entails(hyps, goal):
    assert entails([F(h) for h in hyps], F(goal))


def test_equivalent_open_formulae():
    assert equivalent(F("~(A(x) & exists y. A(y))"), F("~A(x)"))
    assert not equivalent(F("A(x)"), F("exists y. A(y)"))


def test_non_monadic_rejected_without_external_oracle():
    with pytest.raises(FragmentUnsupported):
        is_satisfiable([F("exists x. exists y. R(x,y)")])


def test_external_oracle_hook():
    class Always:
        def is_satisfiable(self, q):
            from monodic.oracle import SatResult
            return SatResult(True)

        def entails(self, hyps, goal):
            return False

        def evaluate(self, s, f):
            return True

    register_external_oracle(Always())
    try:
        assert is_satisfiable([F("exists x. exists y. R2(x,y)")]).satisfiable
    finally:
        register_external_oracle(None)


def test_context_incremental_assert():
    ctx = OracleContext([F("exists x. P(x)")])
    assert ctx.satisfiable(F("exists x. ~P(x)"))
    ctx.assert_(F("forall x. P(x)"))
    assert not ctx.satisfiable(F("exists x. ~P(x)"))
    assert ctx.satisfiable_members([F("exists x. ~P(x)"), F("exists x. P(x)"), F("l")]) == [False, True, True]
    ctx.close()


def _closed(f):
    for v in sorted(free_vars(f)):
        f = (Forall if v == "x" else Exists)(v, f)
    return f


@given(formulas(temporal=False, max_leaves=8))
@settings(max_examples=200, deadline=None)
def test_agrees_with_brute_force(f):
    f = _closed(f)
    r = is_satisfiable([f])
    m = brute_force_model([f], max_size=1 << len(Signature.of([f]).unary()))
    assert r.satisfiable == (m is not None)
    if r.satisfiable:
        assert evaluate(r.witness, f)
        assert eval_concrete(materialize(r.witness), f)


@given(formulas(temporal=False, max_leaves=6), formulas(temporal=False, max_leaves=6))
@settings(max_examples=100, deadline=None)
def test_entailment_dual_to_satisfiability(h, g):
    h, g = _closed(h), _closed(g)
    # exactly one of: h entails g, h is consistent with ~g
    assert entails([h], g) != is_satisfiable([h, neg(g)]).satisfiable
    if is_satisfiable([h]) and entails([h], g):
        assert is_satisfiable([h, g])


def test_three_predicates_spot_check_at_eight():
    rng = random.Random(3)
    for _ in range(25):
        f = random_fo(rng, ("P", "Q", "R"), (), (), 3)
        r = is_satisfiable([f])
        if r.satisfiable:
            assert eval_concrete(materialize(r.witness), f)
        else:
            assert brute_force_model([f], max_size=8) is None


@pytest.mark.parametrize("seed", range(3))
def test_random_sentences_small(seed):
    rng = random.Random(seed)
    for _ in range(30):
        f = random_sentence(rng)
        m = brute_force_model([f], max_size=4)
        assert is_satisfiable([f]).satisfiable == (m is not None)
