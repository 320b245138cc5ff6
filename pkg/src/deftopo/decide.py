"""Global decisions: separation, regularity, exceptional points,
affinizability, components and disconnection witnesses."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement, product
from typing import Optional, Union

from . import formulas as fm
from . import lra
from .dsl import IsolPoint, OpenCell, TopologySpec, require_validated
from .geom import OpenInterval, SemilinearSet, fmt_rational, render, union_all
from .shadow import (
    PointClass,
    classify,
    is_open,
    local_shape,
    shadow_map,
    shadows_at,
    tau_closure,
)

DEFAULT_SCHEDULE = tuple(Fraction(1, 2 ** k) for k in range(1, 13))


def schedule(depth: int = 12) -> tuple[Fraction, ...]:
    if depth < 1:
        raise ValueError("schedule depth must be at least 1")
    return tuple(Fraction(1, 2 ** k) for k in range(1, depth + 1))


# --------------------------------------------------------------------------
# Hausdorff


@dataclass(frozen=True)
class SeparationWitness:
    p: Fraction
    q: Fraction


def _inseparable(spec, c1, c2) -> lra.Formula:
    a, b = fm.point_of(c1, "a"), fm.point_of(c2, "b")
    meet = lra.forall(["e", "f"], lra.implies(
        lra.conj(fm.domain(spec, c1, a, "e"), fm.domain(spec, c2, b, "f")),
        lra.exists("y", lra.conj(fm.in_nbhd(spec, c1, "y", a, "e"), fm.in_nbhd(spec, c2, "y", b, "f")))))
    order = lra.lt(a, b) if c1 == c2 else lra.ne(a, b)
    return lra.conj(fm.at_cell(c1, a), fm.at_cell(c2, b), order, meet)


@lru_cache(maxsize=256)
def check_hausdorff(spec: TopologySpec) -> tuple[bool, Optional[SeparationWitness]]:
    """Any two distinct points have disjoint basic neighborhoods."""
    require_validated(spec)
    cells = spec.cells
    for i, j in combinations_with_replacement(range(len(cells)), 2):
        c1, c2 = cells[i], cells[j]
        if c1 == c2 and isinstance(c1, IsolPoint):
            continue
        bad = _inseparable(spec, c1, c2)
        order = [v for v in ("a", "b") if v in lra.free_vars(bad)]
        w = lra.witness(bad, order)
        if w is not None:
            p = w.get("a", getattr(c1, "q", None))
            q = w.get("b", getattr(c2, "q", None))
            return False, SeparationWitness(p, q)
    return True, None


def require_hausdorff(spec: TopologySpec) -> TopologySpec:
    ok, w = check_hausdorff(spec)
    if not ok:
        raise ValueError(f"not Hausdorff: {fmt_rational(w.p)} and {fmt_rational(w.q)} cannot be separated")
    return spec


# --------------------------------------------------------------------------
# regularity


@dataclass(frozen=True)
class RegularityWitness:
    """``cl(N(a, delta))`` escapes ``N(a, eps)`` for every valid ``delta``.

    ``refutations`` records, along the schedule, a point of the closure
    outside ``N(a, eps)``.
    """

    a: Fraction
    eps: Fraction
    refutations: tuple[tuple[Fraction, Fraction], ...] = ()


def _closure_escapes(spec, cell, a) -> lra.Formula:
    """Some point of ``cl(N(a, d))`` lies outside ``N(a, e)``."""
    out = []
    for d in spec.cells:
        z = fm.point_of(d, "z")
        touch = lra.exists("y", lra.conj(fm.in_nbhd(spec, d, "y", z, "h"), fm.in_nbhd(spec, cell, "y", a, "d")))
        adheres = lra.forall("h", lra.implies(fm.domain(spec, d, z, "h"), touch))
        body = lra.conj(fm.at_cell(d, z), adheres, lra.neg(fm.in_nbhd(spec, cell, z, a, "e")))
        out.append(lra.exists("z", body) if isinstance(z, str) else body)
    return lra.disj(*out)


def _refute(spec, a, eps, sched) -> tuple[tuple[Fraction, Fraction], ...]:
    out = []
    u = spec.neighborhood(a, eps)
    for d in sched:
        n = spec.neighborhood(a, d)
        if n is None or d > eps:
            continue
        extra = tau_closure(spec, n) - u
        if extra:
            out.append((d, extra.sample()))
    return tuple(out)


@lru_cache(maxsize=256)
def check_regularity(spec: TopologySpec, sched: tuple = DEFAULT_SCHEDULE) -> tuple[bool, Optional[RegularityWitness]]:
    """Every basic neighborhood contains the closure of a smaller one."""
    require_validated(spec)
    require_hausdorff(spec)
    for cell in spec.cells:
        a = fm.point_of(cell, "a")
        good = lra.exists("d", lra.conj(fm.domain(spec, cell, a, "d"), lra.neg(_closure_escapes(spec, cell, a))))
        bad = lra.conj(fm.at_cell(cell, a), fm.domain(spec, cell, a, "e"), lra.neg(good))
        order = [v for v in ("a", "e") if v in lra.free_vars(bad)]
        w = lra.witness(bad, order)
        if w is not None:
            av = w.get("a", getattr(cell, "q", None))
            return False, RegularityWitness(av, w["e"], _refute(spec, av, w["e"], sched))
    return True, None


# --------------------------------------------------------------------------
# exceptional sets and rays


@dataclass(frozen=True)
class Ray:
    """A one-sided interval of X glued to point ``point`` at ``end``.

    Following the usual convention a *left* ray ``(end, end + t)`` starts at
    the left end of its host interval, a *right* ray ``(end - t, end)``
    finishes at its right end.
    """

    point: Fraction
    side: str
    end: Fraction
    host: OpenInterval

    def at(self, spec: TopologySpec, eps) -> SemilinearSet:
        """The run of ``N(point, eps)`` inside the host that abuts ``end``."""
        n = spec.neighborhood(self.point, eps)
        if n is None:
            return SemilinearSet.empty()
        for r in (n & SemilinearSet.interval(self.host.lo, self.host.hi)).runs():
            if not r.is_point and (r.lo if self.side == "left" else r.hi) == self.end:
                return SemilinearSet.interval(r.lo, r.hi)
        return SemilinearSet.empty()


@dataclass(frozen=True)
class ExceptionalSets:
    E: SemilinearSet
    A: SemilinearSet
    G: Optional[SemilinearSet]
    H: Optional[SemilinearSet]
    rays: tuple[Ray, ...] = ()

    def rays_of(self, h) -> tuple[Ray, ...]:
        return tuple(r for r in self.rays if r.point == h)


def structural_exceptional(spec: TopologySpec) -> SemilinearSet:
    """Points where some side of X is not covered by small neighborhoods."""
    s = local_shape(spec)
    x = spec.space
    ok_left = (x - s.space_left) | s.left
    ok_right = (x - s.space_right) | s.right
    return x - (ok_left & ok_right)


def _host_intervals(spec: TopologySpec, h_set: SemilinearSet) -> tuple[OpenInterval, ...]:
    return (spec.space - h_set).intervals()


def ray_report(spec: TopologySpec, h_set: SemilinearSet) -> tuple[Ray, ...]:
    """Rays of X minus ``h_set`` contained in every small neighborhood of each point of ``h_set``."""
    hosts = _host_intervals(spec, h_set)
    out = []
    for h in h_set.point_values():
        cell = spec.cell_of(h)
        for s in shadows_at(spec, h).point_values():
            for side in ("left", "right"):
                host = next((iv for iv in hosts if (iv.lo if side == "left" else iv.hi) == s), None)
                if host is None:
                    continue
                look = "right" if side == "left" else "left"
                f = fm.always(spec, cell, h, lambda e: fm.side_inhabited(spec, cell, h, e, s, look))
                if lra.decide_sentence(f):
                    out.append(Ray(h, side, s, host))
    return tuple(out)


@lru_cache(maxsize=256)
def exceptional_sets(spec: TopologySpec) -> ExceptionalSets:
    require_validated(spec)
    require_hausdorff(spec)
    shape = local_shape(spec)
    e = structural_exceptional(spec)
    a = spec.space - (shape.coarser & shape.finer)
    if not e.is_finite:
        return ExceptionalSets(e, a, None, None)
    f = SemilinearSet.points(c.q for c in spec.point_cells)
    h = f | e | a
    if not h.is_finite:
        return ExceptionalSets(e, a, e, None)
    return ExceptionalSets(e, a, e, h, ray_report(spec, h))


# --------------------------------------------------------------------------
# components and witnesses


@dataclass(frozen=True)
class ClopenWitness:
    Z: SemilinearSet
    is_open: bool
    closure_equals_Z: bool

    @property
    def certified(self) -> bool:
        return self.is_open and self.closure_equals_Z


@dataclass(frozen=True)
class FiniteComponents:
    parts: tuple[SemilinearSet, ...]
    certified: bool


@dataclass(frozen=True)
class NoFiniteDecomposition:
    disconnected: tuple[tuple[OpenInterval, PointClass], ...]
    clopen: Optional[ClopenWitness]


Components = Union[FiniteComponents, NoFiniteDecomposition]


def _brackets(lo, hi, kind) -> SemilinearSet:
    lc, rc = kind
    return SemilinearSet.interval(lo, hi, lc, rc)


_KINDS = ((True, False), (False, True), (False, False), (True, True))


def _kinds_for(pc: PointClass):
    if pc is PointClass.LocallyLeftClosed:
        return ((True, False),)
    if pc is PointClass.LocallyRightClosed:
        return ((False, True),)
    return _KINDS


def _certify(spec, z) -> Optional[ClopenWitness]:
    if not z or z == spec.space or not z.issubset(spec.space):
        return None
    closed = tau_closure(spec, z) == z
    if not closed:
        return None
    opened = is_open(spec, z)
    return ClopenWitness(z, opened, closed) if opened else None


def clopen_witness(spec: TopologySpec, cell: OpenCell) -> Optional[ClopenWitness]:
    """A proper clopen set built from two parameters ``a < a''`` of ``cell``.

    The base piece joins ``a`` and ``a''`` with brackets oriented by the
    local shape; when the generic shadow map has a second function ``f2``,
    the image piece between ``f2(a)`` and ``f2(a'')`` is added.
    """
    require_validated(spec)
    shape = local_shape(spec)
    entry = shadow_map(spec).entry(cell)
    for sub in entry.subcells:
        m = (sub.lo + sub.hi) / 2
        pc = PointClass.LocallyEuclidean
        for region, k in classify(spec):
            if m in region:
                pc = k
        if pc is PointClass.LocallyEuclidean or m in (shape.coarser & shape.finer):
            continue
        a, a2 = sub.lo + (sub.hi - sub.lo) / 4, m
        kinds = _kinds_for(pc)
        for kind in kinds:
            w = _certify(spec, _brackets(a, a2, kind))
            if w:
                return w
        for f in sub.functions[1:]:
            lo, hi = sorted((f(a, 0), f(a2, 0)))
            for kind, kind2 in product(kinds, _KINDS):
                z = _brackets(a, a2, kind) | _brackets(lo, hi, kind2)
                w = _certify(spec, z)
                if w:
                    return w
    return None


def _adjacent(spec, p, q) -> bool:
    return bool(tau_closure(spec, p) & q) or bool(tau_closure(spec, q) & p)


def components(spec: TopologySpec) -> Components:
    """Finitely many clopen connected parts, or witnesses that none exist."""
    require_validated(spec)
    ex = exceptional_sets(spec)
    if ex.H is None:
        dis = []
        regions = classify(spec)
        for iv in ex.E.intervals():
            for region, pc in regions:
                for sub in (region & SemilinearSet.interval(iv.lo, iv.hi)).intervals():
                    dis.append((sub, pc))
        dis.sort(key=lambda t: t[0].lo)
        clopen = None
        for cell in spec.open_cells:
            if SemilinearSet.interval(cell.lo, cell.hi) & ex.E:
                clopen = clopen_witness(spec, cell)
                if clopen:
                    break
        return NoFiniteDecomposition(tuple(dis), clopen)
    pieces = [SemilinearSet.point(h) for h in ex.H.point_values()]
    pieces += [SemilinearSet.interval(iv.lo, iv.hi) for iv in (spec.space - ex.H).intervals()]
    parent = list(range(len(pieces)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            if find(i) != find(j) and _adjacent(spec, pieces[i], pieces[j]):
                parent[find(i)] = find(j)
    groups: dict[int, list[SemilinearSet]] = {}
    for i, p in enumerate(pieces):
        groups.setdefault(find(i), []).append(p)
    parts = sorted((union_all(g) for g in groups.values()), key=lambda s: s.inf)
    certified = all(tau_closure(spec, c) == c and is_open(spec, c) for c in parts)
    return FiniteComponents(tuple(parts), certified)


# --------------------------------------------------------------------------
# verdict


def _coarse_everywhere(spec: TopologySpec, g: SemilinearSet) -> bool:
    """Outside ``g`` every basic neighborhood contains an affine ball trace."""
    for cell in spec.cells:
        a = fm.point_of(cell, "a")
        ball = lra.exists("g", lra.conj(lra.gt("g", 0), lra.forall("y", lra.implies(
            lra.conj(lra.lt(lra.lin(a) - lra.lin("g"), "y"), lra.lt("y", lra.lin(a) + lra.lin("g")),
                     fm.in_set("y", spec.space)),
            fm.in_nbhd(spec, cell, "y", a, "e")))))
        body = lra.implies(lra.conj(fm.at_cell(cell, a), lra.neg(fm.in_set(a, g))),
                           fm.always(spec, cell, a, lambda e: ball))
        free = sorted(lra.free_vars(body))
        if not lra.decide_sentence(lra.forall(free, body) if free else body):
            return False
    return True


def sparse_special_points(spec: TopologySpec) -> bool:
    """Finitely many locally isolated and half-closed points."""
    bad = [r for r, pc in classify(spec) if pc is not PointClass.LocallyEuclidean]
    return union_all(bad).is_finite


@dataclass(frozen=True)
class Verdict:
    hausdorff: bool
    separation: Optional[SeparationWitness] = None
    regular: Optional[bool] = None
    regularity: Optional[RegularityWitness] = None
    exceptional: Optional[ExceptionalSets] = None
    affinizable: Optional[bool] = None
    c3: Optional[bool] = None
    c4: Optional[bool] = None
    regular_and_finite_components: Optional[bool] = None
    sparse_and_finite_components: Optional[bool] = None
    components: Optional[Components] = None

    def consistent(self) -> bool:
        if not self.hausdorff:
            return True
        ok = self.c3 == self.c4 == self.affinizable
        if self.regular_and_finite_components is not None and self.regular_and_finite_components:
            ok = ok and self.affinizable
        if self.sparse_and_finite_components:
            ok = ok and self.affinizable
        return ok

    def to_json(self) -> dict:
        return verdict_json(self)


def decide_affinizable(spec: TopologySpec, with_components: bool = True) -> Verdict:
    require_validated(spec)
    h, sep = check_hausdorff(spec)
    if not h:
        return Verdict(False, sep)
    ex = exceptional_sets(spec)
    c3 = ex.E.is_finite
    g = ex.E if c3 else spec.space - local_shape(spec).coarser
    c4 = g.is_finite and _coarse_everywhere(spec, g)
    regular, rw = check_regularity(spec)
    v = Verdict(True, None, regular, rw, ex, c3, c3, c4)
    if not with_components:
        return v
    comps = components(spec)
    finite = isinstance(comps, FiniteComponents)
    return Verdict(True, None, regular, rw, ex, c3, c3, c4,
                   regular and finite, sparse_special_points(spec) and finite, comps)


# --------------------------------------------------------------------------
# serialization


def _q(x) -> Optional[str]:
    return None if x is None else fmt_rational(x)


def _s(s: Optional[SemilinearSet]) -> Optional[str]:
    return None if s is None else render(s)


def ray_json(r: Ray) -> dict:
    return {"point": _q(r.point), "side": r.side, "end": _q(r.end),
            "host": f"({_q(r.host.lo)},{_q(r.host.hi)})"}


def components_json(c: Optional[Components]) -> Optional[dict]:
    if c is None:
        return None
    if isinstance(c, FiniteComponents):
        return {"kind": "Finite", "parts": [_s(p) for p in c.parts], "certified": c.certified}
    clopen = None
    if c.clopen is not None:
        clopen = {"Z": _s(c.clopen.Z), "is_open": c.clopen.is_open,
                  "closure_equals_Z": c.clopen.closure_equals_Z}
    return {"kind": "NoFiniteDecomposition",
            "disconnected": [{"interval": f"({_q(iv.lo)},{_q(iv.hi)})", "class": pc.value}
                             for iv, pc in c.disconnected],
            "clopen": clopen}


def verdict_json(v: Verdict) -> dict:
    witnesses = {}
    if v.separation is not None:
        witnesses["separation"] = [_q(v.separation.p), _q(v.separation.q)]
    if v.regularity is not None:
        witnesses["regularity"] = {
            "a": _q(v.regularity.a), "eps": _q(v.regularity.eps),
            "refutations": [{"delta": _q(d), "point": _q(p)} for d, p in v.regularity.refutations]}
    ex = v.exceptional
    if ex is not None:
        witnesses["rays"] = [ray_json(r) for r in ex.rays]
    return {
        "hausdorff": v.hausdorff,
        "regular": v.regular,
        "exceptional": None if ex is None else {"E": _s(ex.E), "A": _s(ex.A), "G": _s(ex.G)},
        "conditions": {"c3": v.c3, "c4": v.c4,
                       "regular_and_finite_components": v.regular_and_finite_components,
                       "sparse_and_finite_components": v.sparse_and_finite_components},
        "affinizable": v.affinizable,
        "components": components_json(v.components),
        "witnesses": witnesses,
    }
