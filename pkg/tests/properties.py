"""Property checks over a 2^-8 grid with scales down to 2^-12.

Each check returns a list of human-readable failures; empty means it held
at every sampled point.
"""
from __future__ import annotations

import random
from fractions import Fraction

from deftopo.decide import exceptional_sets
from deftopo.geom import SemilinearSet, union_all
from deftopo.oracle import random_subset
from deftopo.shadow import (
    PointClass,
    coarser_set,
    finer_set,
    point_class,
    shadow_bound,
    shadow_map,
    shadows_at,
    tau_closure,
)

F = Fraction
RES = F(1, 2 ** 8)
SCHEDULE = [F(1, 2 ** k) for k in range(1, 13)]


def grid_points(spec, step=RES) -> list[Fraction]:
    out, x = [], spec.space.inf
    while x <= spec.space.sup:
        if x in spec.space:
            out.append(x)
        x += step
    return out


# ---------------------------------------------------------------- closure

def closure_axioms(spec, trials: int = 8, seed: int = 0) -> list[str]:
    rng = random.Random(seed)
    bad = []
    cl = lambda z: tau_closure(spec, z)
    if cl(SemilinearSet.empty()):
        bad.append("closure of the empty set is not empty")
    if cl(spec.space) != spec.space:
        bad.append("closure of X is not X")
    zs = [random_subset(spec, rng) for _ in range(trials)]
    for z1, z2 in zip(zs, zs[1:]):
        c1, c2 = cl(z1), cl(z2)
        if not z1 <= c1:
            bad.append(f"not extensive on {z1}")
        if cl(c1) != c1:
            bad.append(f"not idempotent on {z1}")
        if cl(z1 | z2) != c1 | c2:
            bad.append(f"not additive on {z1} and {z2}")
        if z1 & z2 and not cl(z1 & z2) <= c1:
            bad.append(f"not monotone on {z1 & z2} and {z1}")
    return bad


def closure_by_neighborhoods(spec, trials: int = 4, seed: int = 1, stride: int = 4) -> list[str]:
    """x in cl(Z) iff every scheduled neighborhood of x meets Z."""
    rng = random.Random(seed)
    bad = []
    pts = grid_points(spec)[::stride] + [c.q for c in spec.point_cells]
    for _ in range(trials):
        z = random_subset(spec, rng)
        c = tau_closure(spec, z)
        for x in pts:
            ns = [n for n in (spec.neighborhood(x, e) for e in SCHEDULE) if n is not None]
            sampled = all(n.meets(z) for n in ns)
            if sampled != (x in c):
                bad.append(f"x={x} Z={z}: symbolic {x in c}, sampled {sampled}")
    return bad


# ---------------------------------------------------------------- shadows

def shadow_characterization(spec, stride: int = 16) -> list[str]:
    """b in S(a) iff a is in the closure of I and X for every open I around b."""
    bad = []
    xs = grid_points(spec)[::stride] + [c.q for c in spec.point_cells]
    shadows = {a: shadows_at(spec, a) for a in xs}
    targets = set()
    for s in shadows.values():
        targets.update(s.point_values())
    # candidates independent of shadows_at: template endpoints at eps = 0
    for a in xs:
        for p in spec.template(spec.cell_of(a)).pieces:
            targets.update(e.at_zero()(a, 0) for e in p.endpoints())
    lo, hi = spec.space.inf, spec.space.sup
    probe = F(lo)
    while probe <= hi:
        targets.add(probe)
        probe += RES * stride
    widths = [F(1, 2 ** k) for k in (4, 8, 12)]
    for b in sorted(targets):
        closures = [tau_closure(spec, SemilinearSet.interval(b - h, b + h) & spec.space) for h in widths]
        for a in xs:
            adh = all(a in c for c in closures)
            if adh != (b in shadows[a]):
                bad.append(f"a={a} b={b}: b in S(a) is {b in shadows[a]}, adherence is {adh}")
    return bad


def closure_sandwich(spec, step=F(1, 8)) -> list[str]:
    """{x : S(x) meets (c,d)} is inside cl((c,d)), which is inside {x : S(x) meets [c,d]}."""
    bad = []
    xs = grid_points(spec, RES * 4) + [c.q for c in spec.point_cells]
    sh = {x: shadows_at(spec, x) for x in xs}
    for iv in spec.space.intervals():
        c = iv.lo
        while c < iv.hi:
            d = c + step
            while d <= iv.hi:
                open_cd = SemilinearSet.interval(c, d)
                closed_cd = SemilinearSet.interval(c, d, True, True)
                cl = tau_closure(spec, open_cd)
                for x in xs:
                    if sh[x].meets(open_cd) and x not in cl:
                        bad.append(f"x={x} (c,d)=({c},{d}): shadow inside but not adherent")
                    if x in cl and not sh[x].meets(closed_cd):
                        bad.append(f"x={x} (c,d)=({c},{d}): adherent but no shadow in [c,d]")
                d += step * 2
            c += step
    return bad


def reflexive_and_bounded(spec) -> list[str]:
    bad = []
    k = shadow_bound(spec)
    coarse, fine = coarser_set(spec), finer_set(spec)
    for a in grid_points(spec):
        s = shadows_at(spec, a)
        if a not in s:
            bad.append(f"{a} not in S({a})")
        if not s.is_finite or len(s.point_values()) > k:
            bad.append(f"|S({a})| exceeds {k}: {s}")
        if a in coarse and a in fine and s != SemilinearSet.point(a):
            bad.append(f"affine point {a} has S = {s}")
    return bad


def _preimages(spec, b) -> set:
    """All a in X with b in S(a), from the generic shadow functions plus special points."""
    out = set()
    m = shadow_map(spec)
    for c in m.cells:
        for sc in c.subcells:
            for f in sc.functions[1:]:
                if f.coef_a:
                    a = (b - f.constant) / f.coef_a
                    if sc.lo < a < sc.hi:
                        out.add(a)
                elif f.constant == b:
                    out.add(("interval", sc.lo, sc.hi))
        for q, s in c.at_breakpoints:
            if b in s:
                out.add(q)
    for q, s in m.points:
        if b in s:
            out.add(q)
    return out


def two_preimages(spec) -> list[str]:
    bad = []
    targets = set(grid_points(spec, RES * 4))
    for c in spec.cells:
        for p in spec.template(c).pieces:
            for e in p.endpoints():
                for a in grid_points(spec, RES * 16):
                    targets.add(e.at_zero()(a, 0))
    targets.update(spec.space.endpoints())
    for b in sorted(targets):
        pre = _preimages(spec, b)
        if any(isinstance(a, tuple) for a in pre):
            bad.append(f"b={b} is a shadow of a whole interval")
            continue
        for a in pre:
            if b not in shadows_at(spec, a):
                bad.append(f"b={b} listed for a={a} but not in S(a)")
        others = {a for a in pre if a != b}
        if len(others) > 2:
            bad.append(f"b={b} is a shadow of {sorted(others)}")
        if b in spec.space and len(others) > 1 and point_class(spec, b) is not PointClass.LocallyIsolated:
            bad.append(f"b={b} is not locally isolated but shadows {sorted(others)}")
    return bad


def generic_containment(spec) -> list[str]:
    """S(b) inside S(a) for a and its shadows b in subcell interiors."""
    bad = []
    m = shadow_map(spec)
    special = {q for c in m.cells for q in c.breakpoints} | {c.q for c in spec.point_cells}

    def generic(x):
        return x in spec.space and x not in special and x not in spec.space.endpoints() and \
            any(c.cell.lo < x < c.cell.hi for c in m.cells)

    for a in grid_points(spec, RES * 2):
        if not generic(a):
            continue
        s = shadows_at(spec, a)
        for b in s.point_values():
            if b != a and generic(b) and not shadows_at(spec, b) <= s:
                bad.append(f"a={a} b={b}: S(b)={shadows_at(spec, b)} not in S(a)={s}")
    return bad


def neighborhood_capture(spec, widths=(F(1, 16), F(1, 256), F(1, 4096))) -> list[str]:
    bad = []
    for a in grid_points(spec, RES * 2) + [c.q for c in spec.point_cells]:
        s = shadows_at(spec, a).point_values()
        for h in widths:
            cover = union_all(SemilinearSet.interval(b - h, b + h) for b in s)
            ok = any(n is not None and n <= cover for n in (spec.neighborhood(a, e) for e in SCHEDULE))
            if not ok:
                bad.append(f"a={a} h={h}: no scheduled neighborhood inside the shadow cover")
    return bad


# ---------------------------------------------------------------- exceptional points

def coarse_exceptional_finite(spec) -> list[str]:
    """If every basis is coarser than the affine one, few points differ from it."""
    if coarser_set(spec) != spec.space:
        return []
    odd = spec.space - finer_set(spec)
    l = len(spec.space.intervals())
    if not odd.is_finite:
        return [f"points with non-affine bases are infinite: {odd}"]
    if len(odd.point_values()) > 2 * l:
        return [f"{len(odd.point_values())} non-affine points exceed 2l = {2 * l}"]
    return []


def _has_ray(n, b) -> bool:
    return any((r.lo == b and r.hi > b) or (r.hi == b and r.lo < b) for r in n.runs())


def generalized_rays(spec) -> list[str]:
    """Shadows outside X are endpoints of generalized rays inside every neighborhood."""
    bad = []
    free_ends = {iv.lo for iv in spec.space.intervals() if iv.lo not in spec.space} | \
                {iv.hi for iv in spec.space.intervals() if iv.hi not in spec.space}
    ex = exceptional_sets(spec)
    pts = set(grid_points(spec, RES * 8)) | set(ex.A.point_values() if ex.A.is_finite else [])
    for a in sorted(pts):
        for b in shadows_at(spec, a).point_values():
            if b in spec.space:
                continue
            if b not in free_ends:
                bad.append(f"a={a}: shadow {b} outside X is not a free endpoint of X")
                continue
            for e in SCHEDULE:
                n = spec.neighborhood(a, e)
                if n is not None and not _has_ray(n, b):
                    bad.append(f"a={a} eps={e}: no generalized ray at {b}")
                    break
    return bad


SUITES = {
    "closure axioms": closure_axioms,
    "closure by neighborhoods": closure_by_neighborhoods,
    "shadow characterization": shadow_characterization,
    "closure sandwich": closure_sandwich,
    "reflexive and bounded shadows": reflexive_and_bounded,
    "two-preimage bound": two_preimages,
    "generic shadow containment": generic_containment,
    "neighborhood capture": neighborhood_capture,
    "exceptional finiteness under coarsening": coarse_exceptional_finite,
    "generalized rays": generalized_rays,
}
