import random

import pytest

from conftest import load
from generators import random_problem
from monodic.clauses import (
    DerivedStepClause, MergedDerivedStepClause, Origin, PredicateColour, SchemeLimitExceeded, all_derived_step_clauses,
    all_full_merged, canonical_clauses, canonical_full, categorical, colour_schemes, count_schemes,
    derive_step_clauses, full_merge, merge,
)
from monodic.oracle import evaluate
from monodic.parser import parse_formula as F
from monodic.parser import parse_problem

TWO = "initial { P(c); } step { P(x) => next Q(x); R(x) => next S(x); l => next m; }"


def _strs(clauses):
    return {(c.origin.kind, c.origin.const, str(c.lhs), str(c.rhs)) for c in clauses}


def test_derived_clauses_constant_domains():
    p = parse_problem(TWO)
    got = _strs(derive_step_clauses(p, p.nonground_steps()))
    assert got == {
        ("const", "c", "P(c)", "Q(c)"),
        ("const", "c", "R(c)", "S(c)"),
        ("exists", None, "exists y. P(y) & R(y)", "exists y. Q(y) & S(y)"),
        ("forall", None, "forall y. P(y) | R(y)", "forall y. Q(y) | S(y)"),
    }


def test_derived_clauses_expanding_domains_omit_forall():
    p = parse_problem(TWO, "expanding")
    kinds = [d.origin.kind for d in derive_step_clauses(p, p.nonground_steps())]
    assert "forall" not in kinds and kinds.count("exists") == 1


def test_derived_clauses_reject_bad_premises():
    p = parse_problem(TWO)
    with pytest.raises(ValueError):
        derive_step_clauses(p, [])
    with pytest.raises(ValueError):
        derive_step_clauses(p, p.ground_steps())


def test_all_derived_counts():
    p = parse_problem(TWO)
    # two singletons give const+exists+forall, the pair gives exists+forall
    assert len(all_derived_step_clauses(p)) == 3 + 3 + 2


def test_merge_and_full_merge():
    p = parse_problem(TWO)
    d = derive_step_clauses(p, p.nonground_steps()[:1])
    m = merge([d[1], p.ground_steps()[0]])
    assert m.lhs == F("(exists y. P(y)) & l") and m.rhs == F("(exists y. Q(y)) & m")
    fm = full_merge(m, p.nonground_steps()[1:])
    assert str(fm.lhs) == "R(x) & (exists y. P(y)) & l"
    assert fm.as_formula() == F("forall x. (R(x) & (exists y. P(y)) & l -> next (S(x) & (exists y. Q(y)) & m))")
    with pytest.raises(ValueError):
        merge(p.nonground_steps())
    with pytest.raises(ValueError):
        full_merge(m, p.ground_steps())


def test_empty_merge_is_degenerate():
    assert full_merge(merge([])).degenerate


@pytest.mark.parametrize("text, count", [
    ("universal { l -> exists x. P(x); } step { P(x) => next P(x); } eventuality { sometime ~P(x); sometime l; }", 6),
    ("step { l => next l; }", 2),
    ("initial { P(c); } step { P(x) => next P(x); }", 4),
])
def test_scheme_counts(text, count):
    p = parse_problem(text)
    assert count_schemes(p) == count == len(list(colour_schemes(p)))


def test_scheme_limit():
    with pytest.raises(SchemeLimitExceeded):
        list(colour_schemes(load("res2_1.tp"), limit=100))


def test_categorical_graph_1():
    p = load("graph_1.tp")
    schemes = list(colour_schemes(p))
    got = [(str(c), str(categorical(c, p).f), str(categorical(c, p).a)) for c in schemes[:3]]
    assert got == [
        ("{[P]} [l]", "(exists y. P(y)) & (forall y. P(y)) & l", "(exists y. P(y)) & (forall y. P(y))"),
        ("{[~P]} [l]", "(exists y. ~P(y)) & (forall y. ~P(y)) & l", "true"),
        ("{[P] [~P]} [l]", "(exists y. P(y)) & (exists y. ~P(y)) & (forall y. P(y) | ~P(y)) & l", "exists y. P(y)"),
    ]


@pytest.mark.parametrize("name", ["graph_1.tp", "loop_bfs.tp", "flooding.tp"])
def test_scheme_structure_satisfies_its_formula_and_lhs(name):
    p = load(name)
    for c in colour_schemes(p):
        t = categorical(c, p)
        s = c.structure()
        assert evaluate(s, t.f)
        assert evaluate(s, t.a)


def test_canonical_full_needs_realised_colour():
    p = load("graph_1.tp")
    c = next(iter(colour_schemes(p)))
    other = PredicateColour(("P",), frozenset())
    assert other not in c.gammas
    with pytest.raises(ValueError):
        canonical_full(c, other, p)


def _by_enumeration(p):
    merged, full = set(), set()
    for c in colour_schemes(p):
        t = categorical(c, p)
        merged.add((t.a, t.b))
        for g in c.gammas:
            fc = canonical_full(c, g, p)
            full.add((fc.lhs, fc.rhs))
    return merged, full


@pytest.mark.parametrize("name", ["graph_1.tp", "loop_bfs.tp", "flooding.tp"])
def test_canonical_projection_matches_scheme_enumeration(name):
    p = load(name)
    m, f = canonical_clauses(p)
    em, ef = _by_enumeration(p)
    assert {(c.clause.lhs, c.clause.rhs) for c in m} == em
    assert {(c.clause.lhs, c.clause.rhs) for c in f} == ef


@pytest.mark.parametrize("seed", range(4))
def test_canonical_projection_random(seed):
    rng = random.Random(seed)
    for _ in range(15):
        p = random_problem(rng, rng.choice(["constant", "expanding"]))
        if count_schemes(p) > 2000:
            continue
        m, f = canonical_clauses(p)
        em, ef = _by_enumeration(p)
        assert {(c.clause.lhs, c.clause.rhs) for c in m} == em
        assert {(c.clause.lhs, c.clause.rhs) for c in f} == ef


def test_all_full_merged_small():
    p = parse_problem("step { P(x) => next Q(x); }")
    clauses = list(all_full_merged(p))
    # derived: exists and forall; two merges of them plus their join, each with or without P(x)
    assert len(clauses) == 3 * 2
    assert all(isinstance(c.merged, MergedDerivedStepClause) for c in clauses)


def test_clause_formulae():
    s = parse_problem("step { P(x) => next Q(x); }").step[0]
    d = DerivedStepClause(F("P(c)"), F("Q(c)"), Origin("const", "c"), (s,))
    assert str(d) == "P(c) => next Q(c)" and str(d.origin) == "const(c)"
    assert d.as_formula() == F("P(c) -> next Q(c)")
