"""Compile topological predicates of a spec into linear formulas.

Every builder takes variable names (or rationals, for isolated points) for
the roles it needs: the point ``a`` whose neighborhood is meant, the scale
``eps``, and the probe point ``y``.  Scales are read with the
neighborhood-base convention: a property of ``N(a, .)`` that must hold for
all small scales is quantified over the whole valid domain, which is sound
because validated templates shrink monotonically.
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Union

from . import lra
from .geom import AffineExpr, Interval, SemilinearSet, Singleton
from .lra import conj, disj, eq, exists, forall, ge, gt, implies, le, lin, lt, neg

if TYPE_CHECKING:  # pragma: no cover
    from .dsl import Cell, NbhdTemplate, TopologySpec

Var = Union[str, int, "object"]


def term(e: AffineExpr, a, eps) -> lra.LinTerm:
    return lin(a) * e.coef_a + lin(eps) * e.coef_eps + e.constant


def in_set(y, s: SemilinearSet) -> lra.Formula:
    out = []
    for r in s.runs():
        if r.is_point:
            out.append(eq(y, r.lo))
            continue
        lower = le(r.lo, y) if r.left_closed else lt(r.lo, y)
        upper = le(y, r.hi) if r.right_closed else lt(y, r.hi)
        out.append(conj(lower, upper))
    return disj(*out)


def in_piece(y, piece, a, eps) -> lra.Formula:
    if isinstance(piece, Singleton):
        return eq(y, term(piece.at, a, eps))
    lo, hi = term(piece.lo, a, eps), term(piece.hi, a, eps)
    return conj(le(lo, y) if piece.left_closed else lt(lo, y),
                le(y, hi) if piece.right_closed else lt(y, hi))


def point_of(cell: "Cell", a):
    """The cell's point variable: the constant itself for isolated points."""
    q = getattr(cell, "q", None)
    return q if q is not None else a


def in_nbhd(spec: "TopologySpec", cell: "Cell", y, a, eps) -> lra.Formula:
    t = spec.template(cell)
    a = point_of(cell, a)
    return disj(*(in_piece(y, p, a, eps) for p in t.pieces))


def in_cell(cell: "Cell", a) -> lra.Formula:
    q = getattr(cell, "q", None)
    if q is not None:
        return eq(a, q)
    return conj(lt(cell.lo, a), lt(a, cell.hi))


def nondeg(template: "NbhdTemplate", a, eps) -> lra.Formula:
    a = point_of(template.owner, a)
    return conj(*(lt(term(p.lo, a, eps), term(p.hi, a, eps))
                  for p in template.pieces if isinstance(p, Interval)))


def _piece_in_space(space: SemilinearSet, piece, a, eps) -> lra.Formula:
    if isinstance(piece, Singleton):
        return in_set(term(piece.at, a, eps), space)
    lo, hi = term(piece.lo, a, eps), term(piece.hi, a, eps)
    out = []
    for r in space.runs():
        if r.is_point:
            continue
        if piece.left_closed and not r.left_closed:
            lower = lt(r.lo, lo)
        else:
            lower = le(r.lo, lo)
        if piece.right_closed and not r.right_closed:
            upper = lt(hi, r.hi)
        else:
            upper = le(hi, r.hi)
        out.append(conj(lower, upper))
    return disj(*out)


def contained(spec: "TopologySpec", template: "NbhdTemplate", a, eps) -> lra.Formula:
    a = point_of(template.owner, a)
    return conj(*(_piece_in_space(spec.space, p, a, eps) for p in template.pieces))


def domain(spec: "TopologySpec", cell: "Cell", a, eps) -> lra.Formula:
    """Valid scales: positive, non-degenerate pieces, neighborhood inside X."""
    t = spec.template(cell)
    return conj(gt(eps, 0), nondeg(t, a, eps), contained(spec, t, a, eps))


def at_cell(cell: "Cell", a) -> lra.Formula:
    """``a`` ranges over the cell (trivially true once bound to a point)."""
    if getattr(cell, "q", None) is not None and not isinstance(a, str):
        return lra.TRUE
    return in_cell(cell, a)


# --------------------------------------------------------------------------
# composite predicates


def meets(spec, cell, a, eps, z: SemilinearSet, y="y") -> lra.Formula:
    """``N(a, eps)`` meets the concrete set ``z``."""
    return exists(y, conj(in_nbhd(spec, cell, y, a, eps), in_set(y, z)))


def closure_member(spec, cell, x, z: SemilinearSet, eps="e", y="y") -> lra.Formula:
    """``x`` (in ``cell``) adheres to ``z``: every neighborhood meets it."""
    return forall(eps, implies(domain(spec, cell, x, eps), meets(spec, cell, x, eps, z, y)))


def subset_nbhd(spec, c1, a1, e1, c2, a2, e2, y="y") -> lra.Formula:
    """``N1(a1, e1)`` is contained in ``N2(a2, e2)``."""
    return neg(exists(y, conj(in_nbhd(spec, c1, y, a1, e1), neg(in_nbhd(spec, c2, y, a2, e2)))))


def interior_member(spec, cell, a, eps, b="b", eta="h", y="y") -> lra.Formula:
    """``b`` has some basic neighborhood inside ``N(a, eps)``."""
    out = []
    for d in spec.cells:
        bb = point_of(d, b)
        body = exists(eta, conj(domain(spec, d, bb, eta),
                                subset_nbhd(spec, d, bb, eta, cell, a, eps, y)))
        out.append(conj(in_cell(d, b), body))
    return disj(*out)


def left_inhabited(spec, cell, a, eps) -> lra.Formula:
    """Some interval piece contains points just left of ``a``."""
    t = spec.template(cell)
    a = point_of(cell, a)
    out = []
    for p in t.pieces:
        if isinstance(p, Interval):
            out.append(conj(lt(term(p.lo, a, eps), a), le(a, term(p.hi, a, eps))))
    return disj(*out)


def right_inhabited(spec, cell, a, eps) -> lra.Formula:
    t = spec.template(cell)
    a = point_of(cell, a)
    out = []
    for p in t.pieces:
        if isinstance(p, Interval):
            out.append(conj(le(term(p.lo, a, eps), a), lt(a, term(p.hi, a, eps))))
    return disj(*out)


def side_inhabited(spec, cell, a, eps, s, side: str) -> lra.Formula:
    """``N(a, eps)`` contains an interval ``(s - t, s)`` (left) or ``(s, s + t)``."""
    t = spec.template(cell)
    a = point_of(cell, a)
    out = []
    for p in t.pieces:
        if not isinstance(p, Interval):
            continue
        lo, hi = term(p.lo, a, eps), term(p.hi, a, eps)
        if side == "left":
            out.append(conj(lt(lo, s), le(s, hi)))
        else:
            out.append(conj(le(lo, s), lt(s, hi)))
    return disj(*out)


def always(spec, cell, a, pred, eps="e") -> lra.Formula:
    """``pred`` holds at every valid scale of ``a``."""
    return forall(eps, implies(domain(spec, cell, a, eps), pred(eps)))


# --------------------------------------------------------------------------
# validation conditions, as formulas whose solutions are violations


def validation_violations(spec: "TopologySpec", cell: "Cell"):
    """Yield ``(check, bad, order)``: ``bad`` is satisfiable iff the check fails.

    ``order`` lists the free variables of ``bad`` in witness order.
    """
    t = spec.template(cell)
    a = point_of(cell, "a")
    inc = at_cell(cell, "a")
    small = lambda e0, body: forall("e", implies(conj(gt("e", 0), lt("e", e0)), body))

    yield ("nondegeneracy",
           conj(inc, gt("e0", 0), small("e0", neg(nondeg(t, a, "e")))),
           ["a", "e0"])
    yield ("containment",
           conj(inc, gt("e0", 0), small("e0", conj(nondeg(t, a, "e"), neg(contained(spec, t, a, "e"))))),
           ["a", "e0"])
    dom = domain(spec, cell, a, "e")
    yield ("membership",
           conj(inc, dom, neg(in_nbhd(spec, cell, a, a, "e"))),
           ["a", "e"])
    yield ("monotonicity",
           conj(inc, dom, domain(spec, cell, a, "e2"), lt("e2", "e"),
                neg(subset_nbhd(spec, cell, a, "e2", cell, a, "e"))),
           ["a", "e", "e2"])
    escapes = forall("d", implies(
        domain(spec, cell, a, "d"),
        exists("b", conj(in_nbhd(spec, cell, "b", a, "d"),
                         neg(interior_member(spec, cell, a, "e"))))))
    yield ("openness", conj(inc, dom, escapes), ["a", "e"])
