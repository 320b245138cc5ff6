"""Closure, shadows and local shape of points.

Shadows are read off the templates: the shadow set of ``q`` is the union of
the limit intervals ``[lo(q, 0), hi(q, 0)]`` of its pieces.  For monotone
templates this equals the intersection of the affine closures of all basic
neighborhoods, because every piece at a small scale lies inside the union
at any larger one.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from . import formulas as fm
from . import lra
from .dsl import Cell, IsolPoint, OpenCell, TopologySpec, require_validated
from .geom import (
    AffineExpr,
    Interval,
    SemilinearSet,
    Singleton,
    as_fraction,
    fmt_rational,
    union_all,
)


class PointClass(enum.Enum):
    LocallyIsolated = "LocallyIsolated"
    LocallyRightClosed = "LocallyRightClosed"
    LocallyLeftClosed = "LocallyLeftClosed"
    LocallyEuclidean = "LocallyEuclidean"


class BasisClass(enum.Enum):
    Iso = "Iso"
    LeftClosedHalf = "LeftClosedHalf"
    RightClosedHalf = "RightClosedHalf"
    Affine = "Affine"
    NonLocal = "NonLocal"


_SHAPE = {
    (False, False): PointClass.LocallyIsolated,
    (True, False): PointClass.LocallyRightClosed,
    (False, True): PointClass.LocallyLeftClosed,
    (True, True): PointClass.LocallyEuclidean,
}


def _check_point(spec: TopologySpec, q) -> tuple[Fraction, Cell]:
    q = as_fraction(q)
    if q not in spec.space:
        raise ValueError(f"{fmt_rational(q)} is not a point of X")
    return q, spec.cell_of(q)


def _cell_solutions(spec: TopologySpec, pred) -> SemilinearSet:
    """Points ``x`` of X satisfying ``pred(cell, x)``, solved cell by cell."""
    parts = []
    for cell in spec.cells:
        if isinstance(cell, IsolPoint):
            if lra.decide_sentence(pred(cell, cell.q)):
                parts.append(SemilinearSet.point(cell.q))
        else:
            f = lra.conj(fm.in_cell(cell, "x"), pred(cell, "x"))
            parts.append(lra.solution_set_1d(f, "x"))
    return union_all(parts)


# --------------------------------------------------------------------------
# closure


def tau_closure(spec: TopologySpec, z: SemilinearSet) -> SemilinearSet:
    """Closure of ``z`` in X: the points all of whose neighborhoods meet ``z``."""
    require_validated(spec)
    if not z.issubset(spec.space):
        raise ValueError(f"{z} is not a subset of X")
    if not z:
        return z
    return _closure_cached(spec, z)


@lru_cache(maxsize=4096)
def _closure_cached(spec: TopologySpec, z: SemilinearSet) -> SemilinearSet:
    return _cell_solutions(spec, lambda c, x: fm.closure_member(spec, c, x, z))


def is_open(spec: TopologySpec, z: SemilinearSet) -> bool:
    """Every point of ``z`` has a basic neighborhood inside ``z``."""
    require_validated(spec)
    for cell in spec.cells:
        x = fm.point_of(cell, "x")
        inside = lra.exists("e", lra.conj(fm.domain(spec, cell, x, "e"),
                                          lra.forall("y", lra.implies(fm.in_nbhd(spec, cell, "y", x, "e"),
                                                                      fm.in_set("y", z)))))
        bad = lra.conj(fm.at_cell(cell, x), fm.in_set(x, z), lra.neg(inside))
        if lra.decide_sentence(lra.exists(sorted(lra.free_vars(bad)), bad)):
            return False
    return True


def is_clopen(spec: TopologySpec, z: SemilinearSet) -> bool:
    return tau_closure(spec, z) == z and is_open(spec, z)


# --------------------------------------------------------------------------
# shadows


def _limit_interval(piece, a) -> SemilinearSet:
    if isinstance(piece, Singleton):
        return SemilinearSet.point(piece.at(a, 0))
    lo, hi = piece.lo(a, 0), piece.hi(a, 0)
    return SemilinearSet.interval(lo, hi, True, True)


def shadows_at(spec: TopologySpec, q) -> SemilinearSet:
    """The shadow set ``S(q)``; always contains ``q``, possibly points outside X."""
    require_validated(spec)
    q, cell = _check_point(spec, q)
    return union_all(_limit_interval(p, q) for p in spec.template(cell).pieces)


@dataclass(frozen=True)
class Subcell:
    """An open piece of a cell on which the shadow functions are uniform.

    ``functions`` starts with the identity.  ``spans`` holds limit intervals
    of positive length, which only occur for non-Hausdorff specs.
    """

    lo: Fraction
    hi: Fraction
    functions: tuple[AffineExpr, ...]
    spans: tuple[tuple[AffineExpr, AffineExpr], ...] = ()

    def shadows(self, a) -> SemilinearSet:
        a = as_fraction(a)
        out = [SemilinearSet.point(f(a, 0)) for f in self.functions]
        out += [SemilinearSet.interval(lo(a, 0), hi(a, 0), True, True) for lo, hi in self.spans]
        return union_all(out)

    def __contains__(self, a) -> bool:
        return self.lo < as_fraction(a) < self.hi


@dataclass(frozen=True)
class CellShadows:
    cell: OpenCell
    breakpoints: tuple[Fraction, ...]
    subcells: tuple[Subcell, ...]
    at_breakpoints: tuple[tuple[Fraction, SemilinearSet], ...]


@dataclass(frozen=True)
class ShadowMap:
    cells: tuple[CellShadows, ...]
    points: tuple[tuple[Fraction, SemilinearSet], ...]

    def entry(self, cell: OpenCell) -> CellShadows:
        for c in self.cells:
            if c.cell == cell:
                return c
        raise KeyError(cell)


_IDENTITY = AffineExpr(1, 0, 0)


def _limit_functions(spec: TopologySpec, cell: Cell) -> list[AffineExpr]:
    out = [_IDENTITY]
    for p in spec.template(cell).pieces:
        for e in p.endpoints():
            e = e.at_zero()
            if e not in out:
                out.append(e)
    return out


def _landmarks(spec: TopologySpec) -> list[Fraction]:
    pts = set(spec.space.endpoints())
    for c in spec.cells:
        pts.update((c.q,) if isinstance(c, IsolPoint) else (c.lo, c.hi))
    return sorted(pts)


def breakpoints(spec: TopologySpec, cell: OpenCell) -> tuple[Fraction, ...]:
    """Where two limit functions collide or one crosses a landmark of X."""
    fs = _limit_functions(spec, cell)
    found = set()
    for i, f in enumerate(fs):
        for g in fs[i + 1:]:
            if f.coef_a != g.coef_a:
                found.add((g.constant - f.constant) / (f.coef_a - g.coef_a))
        if f.coef_a:
            for p in _landmarks(spec):
                found.add((p - f.constant) / f.coef_a)
    return tuple(sorted(x for x in found if cell.lo < x < cell.hi))


def shadows_generic(spec: TopologySpec, cell: OpenCell) -> CellShadows:
    """Shadow functions of ``cell``, uniform on each subcell between breakpoints."""
    require_validated(spec)
    bps = breakpoints(spec, cell)
    cuts = (cell.lo,) + bps + (cell.hi,)
    pieces = spec.template(cell).pieces
    subcells = []
    for u, v in zip(cuts, cuts[1:]):
        m = (u + v) / 2
        fs: list[AffineExpr] = [_IDENTITY]
        spans = []
        for p in pieces:
            lo, hi = (p.at.at_zero(),) * 2 if isinstance(p, Singleton) else (p.lo.at_zero(), p.hi.at_zero())
            if lo(m, 0) == hi(m, 0):
                if all(f(m, 0) != lo(m, 0) for f in fs):
                    fs.append(lo)
            elif (lo, hi) not in spans:
                spans.append((lo, hi))
        rest = sorted(fs[1:], key=lambda f: f(m, 0))
        subcells.append(Subcell(u, v, (_IDENTITY, *rest), tuple(spans)))
    at_bps = tuple((b, shadows_at(spec, b)) for b in bps)
    return CellShadows(cell, bps, tuple(subcells), at_bps)


def shadow_map(spec: TopologySpec) -> ShadowMap:
    require_validated(spec)
    cells = tuple(shadows_generic(spec, c) for c in spec.open_cells)
    points = tuple((c.q, shadows_at(spec, c.q)) for c in spec.point_cells)
    return ShadowMap(cells, points)


def shadow_bound(spec: TopologySpec) -> int:
    return 2 * spec.max_pieces + 1


# --------------------------------------------------------------------------
# local shape


def _inhabited(spec: TopologySpec, side: str) -> SemilinearSet:
    pick = fm.left_inhabited if side == "left" else fm.right_inhabited
    return _cell_solutions(spec, lambda c, x: fm.always(spec, c, x, lambda e: pick(spec, c, x, e)))


def _space_side(spec: TopologySpec, side: str) -> SemilinearSet:
    """Points with an interval of X immediately to their left (right)."""
    if side == "left":
        edge, between = lra.lt("t", "x"), lra.conj(lra.lt("t", "y"), lra.lt("y", "x"))
    else:
        edge, between = lra.gt("t", "x"), lra.conj(lra.lt("x", "y"), lra.lt("y", "t"))
    f = lra.conj(fm.in_set("x", spec.space), lra.exists("t", lra.conj(
        edge, lra.forall("y", lra.implies(between, fm.in_set("y", spec.space))))))
    return lra.solution_set_1d(f, "x")


@dataclass(frozen=True)
class LocalShape:
    """Sets of X describing the local behaviour of every point at once."""

    left: SemilinearSet        # small neighborhoods contain (x - t, x]
    right: SemilinearSet       # small neighborhoods contain [x, x + t)
    space_left: SemilinearSet  # X contains (x - t, x)
    space_right: SemilinearSet
    coarser: SemilinearSet     # B_x refines the affine basis
    finer: SemilinearSet       # the affine basis refines B_x


@lru_cache(maxsize=256)
def local_shape(spec: TopologySpec) -> LocalShape:
    require_validated(spec)
    return LocalShape(
        left=_inhabited(spec, "left"),
        right=_inhabited(spec, "right"),
        space_left=_space_side(spec, "left"),
        space_right=_space_side(spec, "right"),
        coarser=coarser_set(spec),
        finer=finer_set(spec),
    )


def coarser_set(spec: TopologySpec) -> SemilinearSet:
    """Points whose every basic neighborhood contains an affine ball trace."""

    def pred(cell, x):
        ball = lra.exists("g", lra.conj(lra.gt("g", 0), lra.forall("y", lra.implies(
            lra.conj(lra.lt(lra.lin(x) - lra.lin("g"), "y"), lra.lt("y", lra.lin(x) + lra.lin("g")),
                     fm.in_set("y", spec.space)),
            fm.in_nbhd(spec, cell, "y", x, "e")))))
        return fm.always(spec, cell, x, lambda e: ball)

    return _cell_solutions(spec, pred)


def finer_set(spec: TopologySpec) -> SemilinearSet:
    """Points with ``S(x) = {x}``: every limit interval collapses to ``x``."""

    def pred(cell, x):
        out = []
        x_ = fm.point_of(cell, x)
        for p in spec.template(cell).pieces:
            for e in p.endpoints():
                out.append(lra.eq(fm.term(e.at_zero(), x_, 0), x_))
        return lra.conj(*out)

    return _cell_solutions(spec, pred)


def _refine(space: SemilinearSet, sets) -> list[SemilinearSet]:
    """Atoms of the boolean algebra generated by ``sets`` inside ``space``."""
    atoms = [space]
    for s in sets:
        nxt = []
        for a in atoms:
            for part in (a & s, a - s):
                if part:
                    nxt.append(part)
        atoms = nxt
    return sorted(atoms, key=lambda s: s.inf)


def _point_class(shape: LocalShape, q: Fraction) -> PointClass:
    return _SHAPE[(q in shape.left, q in shape.right)]


def point_class(spec: TopologySpec, q) -> PointClass:
    q, _ = _check_point(spec, q)
    return _point_class(local_shape(spec), q)


def classify(spec: TopologySpec) -> list[tuple[SemilinearSet, PointClass]]:
    """Partition of X into maximal sets of uniform point class."""
    shape = local_shape(spec)
    out: dict[PointClass, list[SemilinearSet]] = {}
    for region in _refine(spec.space, (shape.left, shape.right)):
        out.setdefault(_point_class(shape, region.sample()), []).append(region)
    regions = [(union_all(v), k) for k, v in out.items()]
    return sorted(regions, key=lambda r: r[0].inf)


@dataclass(frozen=True)
class Comparison:
    region: SemilinearSet
    coarser: bool
    finer: bool
    basis_class: BasisClass


def _basis_class(coarser: bool, finer: bool, pc: PointClass) -> BasisClass:
    if not finer:
        return BasisClass.NonLocal
    if coarser:
        return BasisClass.Affine
    return {
        PointClass.LocallyIsolated: BasisClass.Iso,
        PointClass.LocallyLeftClosed: BasisClass.LeftClosedHalf,
        PointClass.LocallyRightClosed: BasisClass.RightClosedHalf,
    }.get(pc, BasisClass.Affine)


def compare_at(spec: TopologySpec, q) -> Comparison:
    q, _ = _check_point(spec, q)
    shape = local_shape(spec)
    c, f = q in shape.coarser, q in shape.finer
    return Comparison(SemilinearSet.point(q), c, f, _basis_class(c, f, _point_class(shape, q)))


def affine_comparison(spec: TopologySpec) -> list[Comparison]:
    """Partition of X into regions of uniform comparison with the affine basis."""
    shape = local_shape(spec)
    regions = _refine(spec.space, (shape.coarser, shape.finer, shape.left, shape.right))
    merged: dict[tuple, list[SemilinearSet]] = {}
    for r in regions:
        q = r.sample()
        c, f = q in shape.coarser, q in shape.finer
        key = (c, f, _basis_class(c, f, _point_class(shape, q)))
        merged.setdefault(key, []).append(r)
    out = [Comparison(union_all(v), *k) for k, v in merged.items()]
    return sorted(out, key=lambda c: c.region.inf)
