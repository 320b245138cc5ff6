"""Shared test utilities: fixture loading and independent reference evaluators."""
from __future__ import annotations

import random
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

from deftopo import lra
from deftopo.cli import fixture_dir
from deftopo.dsl import TopologySpec, load
from deftopo.lra import And, Atom, Const, Exists, Forall, Not, Or

FIXTURES = ("affine", "two_cells", "halfopen", "infty", "lex", "chain", "paper42", "nonhaus")
HAUSDORFF = tuple(n for n in FIXTURES if n != "nonhaus")


@lru_cache(maxsize=None)
def fx(name: str) -> TopologySpec:
    return load((fixture_dir() / f"{name}.top").read_text(encoding="utf-8"))


def source(name: str) -> str:
    return (fixture_dir() / f"{name}.top").read_text(encoding="utf-8")


def grid(lo, hi, step) -> list[Fraction]:
    lo, hi, step = Fraction(lo), Fraction(hi), Fraction(step)
    out, x = [], lo
    while x <= hi:
        out.append(x)
        x += step
    return out


def dyadic_schedule(depth: int = 12) -> list[Fraction]:
    return [Fraction(1, 2 ** k) for k in range(1, depth + 1)]


# --------------------------------------------------------------------------
# test-point evaluation of quantified linear formulas
#
# Truth of Q x. phi only changes where some atom of phi changes sign, so it is
# enough to try the roots of the atoms in x, the midpoints between them and
# one point beyond each end.  For Q y. Q x. phi the truth of the inner formula
# as a function of y can only change where an x-free atom has a root or where
# two x-roots (affine in y) cross.


def _atoms(f):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from _atoms(a)
    elif isinstance(f, Not):
        yield from _atoms(f.arg)
    elif isinstance(f, (Exists, Forall)):
        yield from _atoms(f.body)


def _affine_in(term: lra.LinTerm, env: dict, names) -> dict:
    """``term`` with ``env`` substituted, as {name or '': coefficient}."""
    out = {"": term.constant}
    for v, c in term.coeffs:
        if v in env:
            out[""] += c * env[v]
        else:
            out[v] = out.get(v, 0) + c
    assert set(out) <= set(names) | {""}, (term, env, names)
    return out


def _test_points(roots) -> list[Fraction]:
    rs = sorted(set(roots))
    if not rs:
        return [Fraction(0)]
    pts = [rs[0] - 1, rs[-1] + 1] + rs
    pts += [(a + b) / 2 for a, b in zip(rs, rs[1:])]
    return pts


def _roots(var: str, body, env: dict) -> list[Fraction]:
    if isinstance(body, (Exists, Forall)):
        inner = body.var
        found, lines = [], []
        for a in _atoms(body.body):
            t = _affine_in(a.term, env, (var, inner))
            cx, cy, k = t.get(inner, 0), t.get(var, 0), t[""]
            if cx == 0:
                if cy:
                    found.append(-k / cy)
            else:
                lines.append((-cy / cx, -k / cx))  # inner = alpha * var + beta
        for (a1, b1), (a2, b2) in combinations(set(lines), 2):
            if a1 != a2:
                found.append((b2 - b1) / (a1 - a2))
        return found
    out = []
    for a in _atoms(body):
        t = _affine_in(a.term, env, (var,))
        if t.get(var, 0):
            out.append(-t[""] / t[var])
    return out


def truth(f, env: dict) -> bool:
    """Truth of ``f`` (at most two nested quantifiers) without elimination."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return f.holds(env)
    if isinstance(f, And):
        return all(truth(a, env) for a in f.args)
    if isinstance(f, Or):
        return any(truth(a, env) for a in f.args)
    if isinstance(f, Not):
        return not truth(f.arg, env)
    if isinstance(f, (Exists, Forall)):
        pts = _test_points(_roots(f.var, f.body, env))
        vals = (truth(f.body, {**env, f.var: p}) for p in pts)
        return any(vals) if isinstance(f, Exists) else all(vals)
    raise TypeError(f)


# --------------------------------------------------------------------------
# random formulas

VARS = ("a", "b", "x", "y")


def random_rational(rng: random.Random, span: int = 4, den: int = 4) -> Fraction:
    return Fraction(rng.randint(-span * den, span * den), rng.randint(1, den))


def random_atom(rng: random.Random, names) -> lra.Formula:
    k = rng.randint(1, min(3, len(names)))
    coeffs = {v: rng.choice([-3, -2, -1, 1, 2, 3, Fraction(1, 2)]) for v in rng.sample(list(names), k)}
    term = lra.LinTerm.of(coeffs, random_rational(rng, 3, 2))
    return lra.atom(term, rng.choice(["<", "<=", "="] if rng.random() < 0.15 else ["<", "<="]))


def random_qf(rng: random.Random, names, n_atoms: int) -> lra.Formula:
    if n_atoms == 1:
        return random_atom(rng, names)
    k = rng.randint(1, n_atoms - 1)
    left, right = random_qf(rng, names, k), random_qf(rng, names, n_atoms - k)
    f = lra.conj(left, right) if rng.random() < 0.55 else lra.disj(left, right)
    return lra.neg(f) if rng.random() < 0.1 else f


def random_formula(rng: random.Random) -> lra.Formula:
    """At most four variables, eight atoms and two nested quantifiers."""
    n_bound = rng.choice([1, 1, 2])
    bound = ["x", "y"][:n_bound]
    free = rng.sample(["a", "b"], rng.randint(1, 2))
    body = random_qf(rng, bound + free, rng.randint(2, 8))
    for v in reversed(bound):
        body = lra.exists(v, body) if rng.random() < 0.6 else lra.forall(v, body)
    return body
