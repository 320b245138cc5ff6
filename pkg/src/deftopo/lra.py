"""Quantifier elimination for linear arithmetic over the ordered rationals.

Formulas are immutable trees built from :class:`Atom` leaves (``term op 0``
with ``op`` one of ``<``, ``<=``, ``=``).  Quantifiers are removed innermost
first by Fourier-Motzkin elimination on a disjunctive normal form whose
conjunctions are pruned for feasibility as they are formed.  Strict and
non-strict bounds are kept apart throughout.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

from .geom import OpenInterval, Point, SemilinearSet, as_fraction, fmt_rational

# --------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class LinTerm:
    """``sum(c * v) + constant`` with nonzero exact coefficients."""

    coeffs: tuple[tuple[str, Fraction], ...] = ()
    constant: Fraction = Fraction(0)

    @classmethod
    def of(cls, coeffs: Mapping[str, object] | None = None, constant=0) -> "LinTerm":
        items = []
        for v, c in (coeffs or {}).items():
            if not v or not isinstance(v, str):
                raise ValueError(f"bad variable name {v!r}")
            c = as_fraction(c)
            if c:
                items.append((v, c))
        return cls(tuple(sorted(items)), as_fraction(constant))

    @classmethod
    def var(cls, name: str) -> "LinTerm":
        return cls.of({name: 1})

    @classmethod
    def const(cls, k) -> "LinTerm":
        return cls((), as_fraction(k))

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.coeffs)

    def coeff(self, name: str) -> Fraction:
        for v, c in self.coeffs:
            if v == name:
                return c
        return Fraction(0)

    def __add__(self, other) -> "LinTerm":
        other = lin(other)
        acc = dict(self.coeffs)
        for v, c in other.coeffs:
            acc[v] = acc.get(v, 0) + c
        return LinTerm.of(acc, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self) -> "LinTerm":
        return LinTerm(tuple((v, -c) for v, c in self.coeffs), -self.constant)

    def __sub__(self, other) -> "LinTerm":
        return self + (-lin(other))

    def __rsub__(self, other) -> "LinTerm":
        return lin(other) - self

    def __mul__(self, k) -> "LinTerm":
        k = as_fraction(k)
        if k == 0:
            return LinTerm()
        return LinTerm(tuple((v, c * k) for v, c in self.coeffs), self.constant * k)

    __rmul__ = __mul__

    def without(self, name: str) -> "LinTerm":
        return LinTerm(tuple((v, c) for v, c in self.coeffs if v != name), self.constant)

    def subs(self, name: str, value) -> "LinTerm":
        c = self.coeff(name)
        if not c:
            return self
        return self.without(name) + lin(value) * c

    def evaluate(self, env: Mapping[str, object]) -> Fraction:
        return sum((c * as_fraction(env[v]) for v, c in self.coeffs), self.constant)

    def __str__(self) -> str:
        return _sexp_term(self)


def lin(x) -> LinTerm:
    if isinstance(x, LinTerm):
        return x
    if isinstance(x, str):
        return LinTerm.var(x)
    return LinTerm.const(x)


# --------------------------------------------------------------------------
# formulas


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return conj(self, other)

    def __or__(self, other):
        return disj(self, other)

    def __invert__(self):
        return neg(self)


@dataclass(frozen=True)
class Const(Formula):
    value: bool


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Atom(Formula):
    term: LinTerm
    op: str  # "<", "<=", "="

    def holds(self, env: Mapping[str, object]) -> bool:
        v = self.term.evaluate(env)
        return v < 0 if self.op == "<" else v <= 0 if self.op == "<=" else v == 0


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


def _normalize_atom(term: LinTerm, op: str) -> Union[Atom, Const]:
    if not term.coeffs:
        v = term.constant
        ok = v < 0 if op == "<" else v <= 0 if op == "<=" else v == 0
        return TRUE if ok else FALSE
    lead = term.coeffs[0][1]
    scale = 1 / lead if op == "=" else 1 / abs(lead)
    if scale != 1:
        term = term * scale
    return Atom(term, op)


def atom(term, op: str) -> Formula:
    if op not in ("<", "<=", "="):
        raise ValueError(f"unknown relation {op!r}")
    return _normalize_atom(lin(term), op)


def lt(x, y) -> Formula:
    return atom(lin(x) - lin(y), "<")


def le(x, y) -> Formula:
    return atom(lin(x) - lin(y), "<=")


def gt(x, y) -> Formula:
    return lt(y, x)


def ge(x, y) -> Formula:
    return le(y, x)


def eq(x, y) -> Formula:
    return atom(lin(x) - lin(y), "=")


def ne(x, y) -> Formula:
    return disj(lt(x, y), lt(y, x))


def conj(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if a == FALSE:
            return FALSE
        if a == TRUE:
            continue
        flat.extend(a.args if isinstance(a, And) else (a,))
    flat = list(dict.fromkeys(flat))
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        if a == TRUE:
            return TRUE
        if a == FALSE:
            continue
        flat.extend(a.args if isinstance(a, Or) else (a,))
    flat = list(dict.fromkeys(flat))
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return FALSE if f.value else TRUE
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def implies(p: Formula, q: Formula) -> Formula:
    return disj(neg(p), q)


def exists(var: str | Iterable[str], body: Formula) -> Formula:
    names = [var] if isinstance(var, str) else list(var)
    for v in reversed(names):
        body = Exists(v, body)
    return body


def forall(var: str | Iterable[str], body: Formula) -> Formula:
    names = [var] if isinstance(var, str) else list(var)
    for v in reversed(names):
        body = Forall(v, body)
    return body


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, Const):
        return frozenset()
    if isinstance(f, Atom):
        return f.term.variables
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_vars(a) for a in f.args))
    if isinstance(f, Not):
        return free_vars(f.arg)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def evaluate(f: Formula, env: Mapping[str, object]) -> bool:
    """Truth of a quantifier-free formula under a full rational assignment."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return f.holds(env)
    if isinstance(f, And):
        return all(evaluate(a, env) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, env) for a in f.args)
    if isinstance(f, Not):
        return not evaluate(f.arg, env)
    if isinstance(f, (Exists, Forall)):
        return evaluate(eliminate_quantifiers(substitute(f, env)), {})
    raise TypeError(f"not a formula: {f!r}")


def substitute(f: Formula, env: Mapping[str, object]) -> Formula:
    """Replace free variables by rationals (or terms)."""
    if isinstance(f, Const):
        return f
    if isinstance(f, Atom):
        t = f.term
        for v in t.variables & env.keys():
            t = t.subs(v, env[v])
        return _normalize_atom(t, f.op)
    if isinstance(f, And):
        return conj(*(substitute(a, env) for a in f.args))
    if isinstance(f, Or):
        return disj(*(substitute(a, env) for a in f.args))
    if isinstance(f, Not):
        return neg(substitute(f.arg, env))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in env.items() if k != f.var}
        return type(f)(f.var, substitute(f.body, inner))
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# conjunctions and DNF

Conj = frozenset  # of Atom
DNF = frozenset  # of Conj


def _negate_atom(a: Atom) -> tuple[Atom, ...]:
    if a.op == "<":
        return (_normalize_atom(-a.term, "<="),)
    if a.op == "<=":
        return (_normalize_atom(-a.term, "<"),)
    return (_normalize_atom(a.term, "<"), _normalize_atom(-a.term, "<"))


def _key(term: LinTerm):
    return term.coeffs


@lru_cache(maxsize=200_000)
def _tighten(atoms: frozenset) -> frozenset | None:
    """Drop redundant parallel bounds; None when a contradiction is evident."""
    ineq: dict = {}
    eqs: dict = {}
    for a in atoms:
        if isinstance(a, Const):
            if not a.value:
                return None
            continue
        k = _key(a.term)
        if a.op == "=":
            prev = eqs.get(k)
            if prev is not None and prev.term.constant != a.term.constant:
                return None
            eqs[k] = a
            continue
        prev = ineq.get(k)
        if prev is None:
            ineq[k] = a
            continue
        # c.v + k op 0 : larger constant is tighter; strict wins ties
        if a.term.constant > prev.term.constant or (
            a.term.constant == prev.term.constant and a.op == "<"
        ):
            ineq[k] = a
    out = set(eqs.values())
    for k, a in list(ineq.items()):
        negk = tuple((v, -c) for v, c in k)
        b = ineq.get(negk)
        if b is not None:
            s = a.term.constant + b.term.constant
            if s > 0 or (s == 0 and (a.op == "<" or b.op == "<")):
                return None
            if s == 0 and k < negk:
                eqa = _normalize_atom(a.term, "=")
                prev = eqs.get(_key(eqa.term))
                if prev is not None and prev.term.constant != eqa.term.constant:
                    return None
                out.add(eqa)
                continue
            if s == 0:
                continue
        ek = k if k[0][1] > 0 else negk
        e = eqs.get(ek)
        if e is not None:
            # on the equality hyperplane this bound has a constant value
            val = a.term.constant - k[0][1] * e.term.constant
            if val > 0 or (val == 0 and a.op == "<"):
                return None
            continue
        out.add(a)
    return frozenset(out)


def _fm_step(atoms: frozenset, var: str) -> frozenset | None:
    with_var = [a for a in atoms if var in a.term.variables]
    if not with_var:
        return atoms
    rest = [a for a in atoms if var not in a.term.variables]
    eqs = [a for a in with_var if a.op == "="]
    if eqs:
        e = min(eqs, key=lambda a: len(a.term.coeffs))
        c = e.term.coeff(var)
        solution = -(e.term.without(var)) * (1 / c)
        out = list(rest)
        for a in with_var:
            if a is e:
                continue
            out.append(_normalize_atom(a.term.subs(var, solution), a.op))
        if any(o == FALSE for o in out):
            return None
        return _tighten(frozenset(o for o in out if o != TRUE))
    lowers, uppers = [], []
    for a in with_var:
        c = a.term.coeff(var)
        # c*x + r op 0  ->  x op -r/c  (c>0: upper bound)
        bound = -(a.term.without(var)) * (1 / c)
        (uppers if c > 0 else lowers).append((bound, a.op == "<"))
    out = list(rest)
    for lo, s1 in lowers:
        for hi, s2 in uppers:
            out.append(_normalize_atom(lo - hi, "<" if (s1 or s2) else "<="))
    if any(o == FALSE for o in out):
        return None
    return _tighten(frozenset(o for o in out if o != TRUE))


def _conj_vars(atoms: Iterable[Atom]) -> set[str]:
    vs: set[str] = set()
    for a in atoms:
        vs |= a.term.variables
    return vs


def _elim_order(atoms: frozenset, names: Iterable[str]) -> list[str]:
    names = list(names)
    counts = {v: sum(1 for a in atoms if v in a.term.variables) for v in names}
    return sorted(names, key=lambda v: (counts[v], v))


@lru_cache(maxsize=400_000)
def feasible(atoms: frozenset) -> bool:
    """Exact satisfiability of a conjunction over the rationals."""
    cur = _tighten(atoms)
    while cur:
        vs = _conj_vars(cur)
        if not vs:
            break
        # eliminate the variable producing the fewest new constraints
        best, best_cost = None, None
        for v in sorted(vs):
            lo = hi = 0
            has_eq = False
            for a in cur:
                c = a.term.coeff(v)
                if not c:
                    continue
                if a.op == "=":
                    has_eq = True
                    break
                if c > 0:
                    hi += 1
                else:
                    lo += 1
            cost = -1 if has_eq else lo * hi - lo - hi
            if best_cost is None or cost < best_cost:
                best, best_cost = v, cost
        cur = _fm_step(cur, best)
    return cur is not None


def _make_conj(atoms: Iterable) -> frozenset | None:
    atoms = frozenset(atoms)
    if FALSE in atoms:
        return None
    atoms = frozenset(a for a in atoms if a != TRUE)
    t = _tighten(atoms)
    if t is None or not feasible(t):
        return None
    return t


def _reduce(conjs: Iterable[frozenset]) -> DNF:
    """Remove duplicates and subsumed conjunctions (supersets of another)."""
    uniq = sorted(set(conjs), key=len)
    kept: list[frozenset] = []
    for c in uniq:
        if any(k <= c for k in kept):
            continue
        kept.append(c)
    return frozenset(kept)


DNF_TRUE: DNF = frozenset({frozenset()})
DNF_FALSE: DNF = frozenset()


def _and_dnf(x: DNF, y: DNF) -> DNF:
    out = []
    for c1 in x:
        for c2 in y:
            c = _make_conj(c1 | c2)
            if c is not None:
                out.append(c)
    return _reduce(out)


def _negate_dnf(d: DNF, context: frozenset = frozenset()) -> DNF:
    """DNF of ``context and not d``, pruning infeasible branches early."""
    start = _make_conj(context)
    if start is None:
        return DNF_FALSE
    acc = [start]
    for c in sorted(d, key=len):
        nxt = []
        for partial in acc:
            if not c:
                continue
            merged = _tighten(partial | c)
            if merged is None or not feasible(merged):
                # partial already refutes c
                nxt.append(partial)
                continue
            for a in c:
                for na in _negate_atom(a):
                    if na == FALSE:
                        continue
                    cand = _make_conj(partial | {na} if na != TRUE else partial)
                    if cand is not None:
                        nxt.append(cand)
        acc = list(_reduce(nxt))
        if not acc:
            break
    return _reduce(acc)


def _eliminate_dnf(var: str, d: DNF) -> DNF:
    out = []
    for c in d:
        r = _fm_step(c, var)
        if r is not None:
            out.append(r)
    return _reduce(out)


def _nnf_qf_to_dnf(f: Formula) -> DNF:
    if isinstance(f, Const):
        return DNF_TRUE if f.value else DNF_FALSE
    if isinstance(f, Atom):
        return frozenset({frozenset({f})})
    if isinstance(f, And):
        acc = DNF_TRUE
        for a in sorted(f.args, key=_size):
            acc = _and_dnf(acc, _to_dnf(a))
            if not acc:
                break
        return acc
    if isinstance(f, Or):
        parts = []
        for a in f.args:
            parts.extend(_to_dnf(a))
        return _reduce(c for c in parts)
    raise TypeError(f"unexpected node {f!r}")


def _size(f: Formula) -> int:
    if isinstance(f, (Atom, Const)):
        return 1
    if isinstance(f, (And, Or)):
        return sum(_size(a) for a in f.args)
    if isinstance(f, Not):
        return _size(f.arg)
    return _size(f.body) + 1


def _quant_block(f: Formula):
    kind = type(f)
    names = []
    while isinstance(f, kind):
        names.append(f.var)
        f = f.body
    return kind, names, f


def _to_dnf(f: Formula) -> DNF:
    if isinstance(f, Not):
        return _negate_dnf(_to_dnf(f.arg))
    if isinstance(f, (Exists, Forall)):
        kind, names, body = _quant_block(f)
        d = _to_dnf(body)
        if kind is Forall:
            d = _negate_dnf(d)
        pending = list(dict.fromkeys(names))
        while pending:
            allatoms = frozenset().union(*d) if d else frozenset()
            v = _elim_order(allatoms, pending)[0]
            pending.remove(v)
            d = _eliminate_dnf(v, d)
        if kind is Forall:
            d = _negate_dnf(d)
        return d
    return _nnf_qf_to_dnf(f)


def _dnf_formula(d: DNF) -> Formula:
    return disj(*(conj(*sorted(c, key=_atom_sort_key)) for c in sorted(d, key=_conj_sort_key)))


def _atom_sort_key(a: Atom):
    return (a.term.coeffs, a.term.constant, a.op)


def _conj_sort_key(c):
    return tuple(sorted(_atom_sort_key(a) for a in c))


def eliminate_quantifiers(f: Formula) -> Formula:
    """Equivalent quantifier-free formula (a DNF of atoms)."""
    return _dnf_formula(_to_dnf(f))


def eliminate_exists(var: str, body: Formula) -> Formula:
    """Quantifier-free equivalent of ``exists var. body``."""
    return _dnf_formula(_eliminate_dnf(var, _to_dnf(body)))


def decide_sentence(f: Formula) -> bool:
    fv = free_vars(f)
    if fv:
        raise ValueError(f"sentence has free variables {sorted(fv)}")
    return bool(_to_dnf(f))


def _pieces_1d(f: Formula, var: str):
    """Per feasible conjunction: ``(point, lo, lo_strict, hi, hi_strict)``; None marks no bound."""
    fv = free_vars(f)
    if not fv <= {var}:
        raise ValueError(f"formula has free variables other than {var!r}: {sorted(fv - {var})}")
    for c in _to_dnf(f):
        lo = hi = point = None
        lo_strict = hi_strict = False
        for a in c:
            k = a.term.coeff(var)
            bound = -a.term.constant / k
            if a.op == "=":
                point = bound
            elif k > 0:
                if hi is None or bound < hi or (bound == hi and a.op == "<"):
                    hi, hi_strict = bound, a.op == "<"
            else:
                if lo is None or bound > lo or (bound == lo and a.op == "<"):
                    lo, lo_strict = bound, a.op == "<"
        yield point, lo, lo_strict, hi, hi_strict


def solution_set_1d(f: Formula, var: str) -> SemilinearSet:
    """The set of rationals satisfying a formula in one free variable.

    Solutions are assumed bounded (every fixture formula carries explicit
    bounds on its free variable); an unbounded solution raises.
    """
    comps = []
    for point, lo, lo_strict, hi, hi_strict in _pieces_1d(f, var):
        if point is not None:
            comps.append(Point(point))
            continue
        if lo is None or hi is None:
            raise ValueError(f"unbounded solution set for {var!r}")
        if lo == hi:
            comps.append(Point(lo))
            continue
        comps.append(OpenInterval(lo, hi))
        if not lo_strict:
            comps.append(Point(lo))
        if not hi_strict:
            comps.append(Point(hi))
    return SemilinearSet(comps)


def _sample_1d(f: Formula, var: str) -> Fraction | None:
    """Some solution of a one-variable formula, bounded or not."""
    best = None
    for point, lo, _, hi, _ in _pieces_1d(f, var):
        if point is not None:
            x = point
        elif lo is not None and hi is not None:
            x = (lo + hi) / 2 if lo < hi else lo
        elif lo is not None:
            x = lo + 1
        elif hi is not None:
            x = hi - 1
        else:
            x = Fraction(0)
        # conjunctions are feasible, so x solves this one; keep the first in sorted order
        if best is None or x < best:
            best = x
    return best


def witness(f: Formula, order: Iterable[str]) -> dict[str, Fraction] | None:
    """A rational assignment satisfying ``f``, fixing variables in ``order``.

    Each variable is fixed to a solution of the projected problem on the
    remaining existential variables; None when unsatisfiable.
    """
    order = list(order)
    env: dict[str, Fraction] = {}
    g = f
    for i, v in enumerate(order):
        later = order[i + 1:]
        x = _sample_1d(exists(later, g) if later else g, v)
        if x is None:
            return None
        env[v] = x
        g = substitute(g, {v: x})
    if not decide_sentence(exists(sorted(free_vars(g)), g) if free_vars(g) else g):
        return None
    return env


def cache_clear() -> None:
    feasible.cache_clear()
    _tighten.cache_clear()


# --------------------------------------------------------------------------
# s-expression debug form


def _sexp_term(t: LinTerm) -> str:
    parts = [f"({v} {fmt_rational(c)})" for v, c in t.coeffs]
    parts.append(fmt_rational(t.constant))
    return " ".join(parts)


_OPNAME = {"<": "<", "<=": "<=", "=": "="}


def to_sexp(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f"({_OPNAME[f.op]} {_sexp_term(f.term)})"
    if isinstance(f, And):
        return "(and " + " ".join(to_sexp(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(to_sexp(a) for a in f.args) + ")"
    if isinstance(f, Not):
        return f"(not {to_sexp(f.arg)})"
    if isinstance(f, Exists):
        return f"(exists {f.var} {to_sexp(f.body)})"
    if isinstance(f, Forall):
        return f"(forall {f.var} {to_sexp(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")


def _tokens(text: str) -> list[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"bad s-expression near {text[pos:pos + 10]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def from_sexp(text: str) -> Formula:
    """Read the form printed by :func:`to_sexp`; structure is preserved."""
    toks = _tokens(text)
    pos = 0

    def expect(tok):
        nonlocal pos
        if pos >= len(toks) or toks[pos] != tok:
            raise ValueError(f"expected {tok!r} at token {pos}")
        pos += 1

    def term_until_close() -> LinTerm:
        nonlocal pos
        coeffs: dict[str, Fraction] = {}
        const = Fraction(0)
        while toks[pos] != ")":
            if toks[pos] == "(":
                pos += 1
                name = toks[pos]
                coeffs[name] = Fraction(toks[pos + 1])
                pos += 2
                expect(")")
            else:
                const = Fraction(toks[pos])
                pos += 1
        return LinTerm.of(coeffs, const)

    def node() -> Formula:
        nonlocal pos
        tok = toks[pos]
        if tok == "true":
            pos += 1
            return TRUE
        if tok == "false":
            pos += 1
            return FALSE
        expect("(")
        head = toks[pos]
        pos += 1
        if head in ("<", "<=", "="):
            t = term_until_close()
            expect(")")
            return Atom(t, head)
        if head in ("and", "or"):
            args = []
            while toks[pos] != ")":
                args.append(node())
            expect(")")
            return (And if head == "and" else Or)(tuple(args))
        if head == "not":
            a = node()
            expect(")")
            return Not(a)
        if head in ("exists", "forall"):
            var = toks[pos]
            pos += 1
            body = node()
            expect(")")
            return (Exists if head == "exists" else Forall)(var, body)
        raise ValueError(f"unknown head {head!r}")

    f = node()
    if pos != len(toks):
        raise ValueError("trailing tokens after formula")
    return f
