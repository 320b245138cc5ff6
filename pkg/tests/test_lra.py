import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from deftopo import lra
from deftopo.geom import SemilinearSet, parse_set
from deftopo.lra import conj, disj, eq, exists, forall, ge, gt, le, lt, neg

from helpers import grid, random_formula, random_qf, random_rational, truth

F = Fraction


def qf_equivalent(f, g, names, rng, trials=200):
    for _ in range(trials):
        env = {v: random_rational(rng, 4, 8) for v in names}
        assert lra.evaluate(f, env) == lra.evaluate(g, env), env


# ---------------------------------------------------------------- eliminate_exists

def test_exists_between_reduces_to_order():
    g = lra.eliminate_exists("x", conj(gt("x", "a"), lt("x", "b")))
    assert lra.free_vars(g) <= {"a", "b"}
    qf_equivalent(g, lt("a", "b"), ["a", "b"], random.Random(1))


def test_exists_equality_substitutes():
    g = lra.eliminate_exists("x", conj(eq("x", "a"), le("x", "b")))
    qf_equivalent(g, le("a", "b"), ["a", "b"], random.Random(2))


def test_exists_scaled_bounds_against_test_points():
    two_x, three_x = lra.lin("x") * 2, lra.lin("x") * 3
    body = conj(gt(two_x, "a"), lt(three_x, "b"), ge("x", "c"))
    g = lra.eliminate_exists("x", body)
    rng = random.Random(3)
    for _ in range(100):
        env = {v: random_rational(rng) for v in "abc"}
        assert lra.evaluate(g, env) == truth(exists("x", body), env)


def test_result_is_quantifier_free():
    g = lra.eliminate_quantifiers(forall("x", exists("y", conj(lt("x", "y"), lt("y", "a")))))
    assert lra.free_vars(g) <= {"a"}
    assert lra.evaluate(g, {"a": F(0)}) is False


# ---------------------------------------------------------------- decide_sentence

def test_decide_sentence_examples():
    eps_below = forall("a", exists("e", disj(conj(gt("e", 0), lt("e", "a")), le("a", 0))))
    assert lra.decide_sentence(eps_below) is True
    assert lra.decide_sentence(exists("x", conj(lt("x", 0), gt("x", 1)))) is False


def test_decide_sentence_rejects_free_variables():
    with pytest.raises(ValueError):
        lra.decide_sentence(lt("x", 0))


def test_density_and_no_endpoints():
    assert lra.decide_sentence(forall("x", forall("y", exists("z", disj(
        le("y", "x"), conj(lt("x", "z"), lt("z", "y")))))))
    assert lra.decide_sentence(forall("x", exists("y", lt("x", "y"))))
    assert not lra.decide_sentence(exists("x", forall("y", le("y", "x"))))


# ---------------------------------------------------------------- solution_set_1d

def test_solution_set_union():
    f = disj(conj(gt("x", 0), lt("x", 1)), eq("x", 3))
    assert lra.solution_set_1d(f, "x") == parse_set("(0,1) ∪ {3}")


def test_solution_set_empty():
    f = conj(ge("x", 0), le("x", 1), exists("y", conj(gt("y", "x"), lt("y", "x"))))
    assert lra.solution_set_1d(f, "x") == SemilinearSet.empty()


def test_solution_set_lex_basic_set():
    c, e = F(1, 2), F(1, 8)
    f = disj(conj(gt("x", c - e), le("x", c)), conj(ge("x", c + 2 - e), lt("x", c + 2)))
    s = lra.solution_set_1d(f, "x")
    assert s == parse_set("(3/8,1/2] ∪ [19/8,5/2)")
    for x in grid(0, 3, F(1, 64)):
        assert (x in s) == lra.evaluate(f, {"x": x})


def test_solution_set_rejects_other_free_variables():
    with pytest.raises(ValueError):
        lra.solution_set_1d(lt("x", "a"), "x")


@given(st.integers(0, 10 ** 6))
def test_solution_set_matches_membership(seed):
    rng = random.Random(seed)
    body = conj(ge("x", -4), le("x", 4), random_qf(rng, ["x"], rng.randint(1, 5)))
    s = lra.solution_set_1d(body, "x")
    for x in grid(-5, 5, F(1, 16)):
        assert (x in s) == lra.evaluate(body, {"x": x})
    for p in s.endpoints():
        assert (p in s) == lra.evaluate(body, {"x": p})


# ---------------------------------------------------------------- witness

def test_witness_satisfies_body():
    w = lra.witness(conj(gt("x", 0), lt("x", "y"), lt("y", 1)), ["y", "x"])
    assert w is not None and 0 < w["x"] < w["y"] < 1


def test_witness_none_for_unsatisfiable():
    assert lra.witness(conj(gt("x", 1), lt("x", 0)), ["x"]) is None


@given(st.integers(0, 10 ** 6))
def test_witness_is_a_solution(seed):
    rng = random.Random(seed)
    f = random_qf(rng, ["x", "y"], rng.randint(1, 5))
    w = lra.witness(f, ["x", "y"])
    sat = lra.decide_sentence(exists(["x", "y"], f))
    assert (w is not None) == sat
    if w is not None:
        env = {"x": w.get("x", F(0)), "y": w.get("y", F(0))}
        assert lra.evaluate(f, env)


# ---------------------------------------------------------------- properties

@given(st.integers(0, 10 ** 6))
def test_elimination_agrees_with_test_points(seed):
    rng = random.Random(seed)
    f = random_formula(rng)
    g = lra.eliminate_quantifiers(f)
    names = sorted(lra.free_vars(f))
    assert lra.free_vars(g) <= set(names)
    for _ in range(10):
        env = {v: random_rational(rng) for v in names}
        assert lra.evaluate(g, env) == truth(f, env)


@given(st.integers(0, 10 ** 6))
def test_negation_commutes_with_elimination(seed):
    rng = random.Random(seed)
    f = random_formula(rng)
    g, h = lra.eliminate_quantifiers(f), lra.eliminate_quantifiers(neg(f))
    for _ in range(10):
        env = {v: random_rational(rng) for v in sorted(lra.free_vars(f))}
        assert lra.evaluate(g, env) != lra.evaluate(h, env)


@given(st.integers(0, 10 ** 6))
def test_sexp_round_trip(seed):
    f = random_formula(random.Random(seed))
    assert lra.from_sexp(lra.to_sexp(f)) == f
