"""Explicit piecewise-linear embeddings of affinizable specs into Q^3.

The construction first isolates the finite set ``H`` of special points
(isolated cells and exceptional points): the open intervals of ``X - H``
are spread apart and every ``h`` becomes an affine-isolated point whose
neighborhoods are ``{h}`` plus the rays glued to it.  Then each ``h`` is
sent to an anchor ``(p_i, 0, 0)`` on the x-axis and each interval to a
polyline in its own plane ``z = c*y``; an interval end glued to ``h`` runs
into the anchor of ``h``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

from .decide import DEFAULT_SCHEDULE, ExceptionalSets, Ray, exceptional_sets
from .dsl import IsolPoint, NbhdTemplate, OpenCell, TopologySpec, ensure_valid, require_validated
from .geom import (
    AffineExpr,
    Interval,
    OpenInterval,
    SemilinearSet,
    Singleton,
    as_fraction,
    fmt_rational,
    render,
    union_all,
)

Vec = tuple[Fraction, Fraction, Fraction]
MAX_ATTACHMENTS = 4  # curve ends glued to one anchor


class EmbeddingError(ValueError):
    pass


# --------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class NormalizedSpec:
    """``spec`` is the isolated form; ``shifts`` and ``h_map`` give the bijection."""

    source: TopologySpec
    spec: TopologySpec
    shifts: tuple[tuple[OpenInterval, Fraction], ...]
    h_map: tuple[tuple[Fraction, Fraction], ...]
    rays: tuple[Ray, ...]

    def forward(self, x) -> Fraction:
        x = as_fraction(x)
        for h, h2 in self.h_map:
            if x == h:
                return h2
        for iv, t in self.shifts:
            if iv.lo < x < iv.hi:
                return x + t
        raise ValueError(f"{fmt_rational(x)} is not a point of X")

    def inverse(self, y) -> Fraction:
        y = as_fraction(y)
        for h, h2 in self.h_map:
            if y == h2:
                return h
        for iv, t in self.shifts:
            if iv.lo + t < y < iv.hi + t:
                return y - t
        raise ValueError(f"{fmt_rational(y)} is not a point of the normalized space")

    def shift_of(self, host: OpenInterval) -> Fraction:
        for iv, t in self.shifts:
            if iv == host:
                return t
        raise KeyError(host)


def normalize_isolate(spec: TopologySpec, exceptional: Optional[ExceptionalSets] = None) -> NormalizedSpec:
    """Move the special points off the line and keep the intervals affine."""
    require_validated(spec)
    ex = exceptional or exceptional_sets(spec)
    if ex.H is None:
        raise EmbeddingError("the exceptional set is infinite; no normalization exists")
    hosts = (spec.space - ex.H).intervals()
    shifts = tuple((iv, Fraction(j)) for j, iv in enumerate(hosts))
    top = max((iv.hi + t for iv, t in shifts), default=spec.space.sup)
    h_map = tuple((h, top + 1 + i) for i, h in enumerate(ex.H.point_values()))
    if not h_map and not any(t for _, t in shifts):
        return NormalizedSpec(spec, spec, shifts, h_map, ex.rays)

    euclid = (Interval(AffineExpr(1, -1, 0), AffineExpr(1, 1, 0)),)
    cells, templates = [], []
    for iv, t in shifts:
        c = OpenCell(iv.lo + t, iv.hi + t, "a")
        cells.append(c)
        templates.append(NbhdTemplate(euclid, c))
    for h, h2 in h_map:
        pieces = [Singleton(AffineExpr(0, 0, h2))]
        for r in ex.rays:
            if r.point != h:
                continue
            s = r.end + shifts[[iv for iv, _ in shifts].index(r.host)][1]
            if r.side == "left":
                pieces.append(Interval(AffineExpr(0, 0, s), AffineExpr(0, 1, s)))
            else:
                pieces.append(Interval(AffineExpr(0, -1, s), AffineExpr(0, 0, s)))
        c = IsolPoint(h2, "h")
        cells.append(c)
        templates.append(NbhdTemplate(tuple(pieces), c))
    space = union_all(c.as_set() for c in cells)
    out = ensure_valid(TopologySpec(space, tuple(cells), tuple(templates)))
    return NormalizedSpec(spec, out, shifts, h_map, ex.rays)


# --------------------------------------------------------------------------
# embedding


@dataclass(frozen=True)
class Curve:
    """Image of the interval ``(lo, hi)`` of X, cut evenly into segments."""

    index: int
    lo: Fraction
    hi: Fraction
    vertices: tuple[Vec, ...]
    left: Optional[Fraction] = None   # point of H glued at the left end
    right: Optional[Fraction] = None

    @property
    def knots(self) -> tuple[Fraction, ...]:
        m = len(self.vertices) - 1
        return tuple(self.lo + (self.hi - self.lo) * k / m for k in range(m + 1))

    def segments(self):
        ks, vs = self.knots, self.vertices
        for k in range(len(vs) - 1):
            yield ks[k], ks[k + 1], vs[k], vs[k + 1]

    def at(self, x) -> Vec:
        x = as_fraction(x)
        for u, v, p, q in self.segments():
            if u <= x <= v:
                t = (x - u) / (v - u)
                return tuple(pi + t * (qi - pi) for pi, qi in zip(p, q))
        raise ValueError(f"{fmt_rational(x)} outside ({self.lo},{self.hi})")

    def locate(self, point: Sequence) -> Optional[Fraction]:
        """Parameter of ``point`` on this curve (ends excluded), or None."""
        for u, v, p, q in self.segments():
            d = [qi - pi for pi, qi in zip(p, q)]
            k = next(i for i in range(3) if d[i])
            t = (as_fraction(point[k]) - p[k]) / d[k]
            if 0 <= t <= 1 and all(p[i] + t * d[i] == point[i] for i in range(3)):
                x = u + t * (v - u)
                if self.lo < x < self.hi:
                    return x
        return None


@dataclass(frozen=True)
class Embedding:
    anchors: tuple[tuple[Fraction, Vec], ...]
    curves: tuple[Curve, ...]
    sigma: Fraction

    @property
    def k(self) -> int:
        return len(self.curves)

    def anchor_of(self, h) -> Vec:
        for q, p in self.anchors:
            if q == h:
                return p
        raise KeyError(h)

    def __call__(self, x) -> Vec:
        x = as_fraction(x)
        for q, p in self.anchors:
            if q == x:
                return p
        for c in self.curves:
            if c.lo < x < c.hi:
                return c.at(x)
        raise ValueError(f"{fmt_rational(x)} is not a point of X")

    def inverse(self, point: Sequence) -> Fraction:
        point = tuple(as_fraction(v) for v in point)
        for q, p in self.anchors:
            if p == point:
                return q
        if point[1]:
            c = point[2] / point[1]
            for cv in self.curves:
                if cv.index == c:
                    x = cv.locate(point)
                    if x is not None:
                        return x
        raise ValueError(f"{point} is not in the image")


def _vec(x, y, z) -> Vec:
    return (as_fraction(x), as_fraction(y), as_fraction(z))


def _curve(index: int, iv: OpenInterval, left, right, anchor_x, sigma) -> Curve:
    c = Fraction(index)
    lift = lambda x: _vec(x, c, c * c)
    base = lambda x: _vec(x, 0, 0)
    if left is not None and right is not None:
        pl, pr = anchor_x[left], anchor_x[right]
        if pl == pr:
            # triangular loop closing on the anchor
            vs = (base(pl), lift(pl), lift(pl + sigma / 2), base(pl))
        else:
            vs = (base(pl), lift(pl), lift(pr), base(pr))
    elif left is not None:
        pl = anchor_x[left]
        vs = (base(pl), lift(pl), lift(pl + 1))
    elif right is not None:
        pr = anchor_x[right]
        vs = (lift(pr - 1), lift(pr), base(pr))
    else:
        vs = (lift(iv.lo), lift(iv.hi))
    return Curve(index, iv.lo, iv.hi, vs, left, right)


def build_embedding(n: NormalizedSpec) -> Embedding:
    """Anchors on the x-axis and one polyline per interval of ``X - H``."""
    hosts = [iv for iv, _ in n.shifts]
    hs = [h for h, _ in n.h_map]
    ends: dict[tuple[OpenInterval, str], Fraction] = {}
    for r in n.rays:
        key = (r.host, r.side)
        if key in ends and ends[key] != r.point:
            raise EmbeddingError(
                f"interval ({fmt_rational(r.host.lo)},{fmt_rational(r.host.hi)}) has its {r.side} end "
                f"glued to both {fmt_rational(ends[key])} and {fmt_rational(r.point)}")
        ends[key] = r.point
    for h in hs:
        attached = sum(1 for p in ends.values() if p == h)
        if attached > MAX_ATTACHMENTS:
            raise EmbeddingError(f"{fmt_rational(h)} hosts {attached} curve ends; the layout allows {MAX_ATTACHMENTS}")
    k = max(len(hosts), 1)
    min_len = min((iv.hi - iv.lo for iv in hosts), default=Fraction(1))
    sigma = min_len / (2 * k * max(len(hs), 1))
    anchor_x = {h: (i + 1) * sigma for i, h in enumerate(hs)}
    anchors = tuple((h, _vec(anchor_x[h], 0, 0)) for h in hs)
    curves = tuple(_curve(j + 1, iv, ends.get((iv, "left")), ends.get((iv, "right")), anchor_x, sigma)
                   for j, iv in enumerate(hosts))
    return Embedding(anchors, curves, sigma)


def embed(spec: TopologySpec) -> tuple[NormalizedSpec, Embedding]:
    n = normalize_isolate(spec)
    return n, build_embedding(n)


def detach(emb: Embedding, index: int, side: str) -> Embedding:
    """A copy of ``emb`` with one glued end of curve ``index`` made free."""
    curves = []
    anchor_x = {h: p[0] for h, p in emb.anchors}
    for c in emb.curves:
        if c.index == index:
            left, right = (None, c.right) if side == "left" else (c.left, None)
            c = _curve(c.index, OpenInterval(c.lo, c.hi), left, right, anchor_x, emb.sigma)
        curves.append(c)
    return replace(emb, curves=tuple(curves))


def spacing_ok(emb: Embedding) -> bool:
    lengths = [c.hi - c.lo for c in emb.curves]
    xs = [p[0] for _, p in emb.anchors]
    return all(2 * emb.k * abs(x1 - x2) < ln for x1 in xs for x2 in xs for ln in lengths)


# --------------------------------------------------------------------------
# verification


def _segment_ball(p: Vec, q: Vec, center: Vec, gamma: Fraction) -> Optional[tuple]:
    """Parameters ``t`` in ``[0, 1]`` with ``|p + t(q - p) - center| < gamma``.

    Returns ``(lo, hi, left_closed, right_closed)`` or None.
    """
    lo, hi, lc, rc = Fraction(0), Fraction(1), True, True
    for pi, qi, ci in zip(p, q, center):
        d, off = qi - pi, pi - ci
        if d == 0:
            if abs(off) >= gamma:
                return None
            continue
        u, v = sorted(((-gamma - off) / d, (gamma - off) / d))
        if u >= lo:
            lo, lc = u, False
        if v <= hi:
            hi, rc = v, False
    if lo > hi or (lo == hi and not (lc and rc)):
        return None
    return lo, hi, lc, rc


def ball_preimage(emb: Embedding, center: Sequence, gamma) -> SemilinearSet:
    """Points of X mapped into the open sup-norm ball of radius ``gamma``."""
    gamma = as_fraction(gamma)
    center = tuple(as_fraction(v) for v in center)
    parts = []
    for h, p in emb.anchors:
        if max(abs(pi - ci) for pi, ci in zip(p, center)) < gamma:
            parts.append(SemilinearSet.point(h))
    for c in emb.curves:
        inner = SemilinearSet.interval(c.lo, c.hi)
        for u, v, p, q in c.segments():
            hit = _segment_ball(p, q, center, gamma)
            if hit is None:
                continue
            lo, hi, lc, rc = hit
            x0, x1 = u + lo * (v - u), u + hi * (v - u)
            seg = SemilinearSet.interval(x0, x1, lc, rc) if x0 < x1 else SemilinearSet.point(x0)
            parts.append(seg & inner)
    return union_all(parts)


@dataclass(frozen=True)
class Failure:
    a: Fraction
    scale: Fraction
    direction: str

    def describe(self) -> str:
        what = "eps" if self.direction == "i" else "gamma"
        return f"direction ({self.direction}) fails at a={fmt_rational(self.a)}, {what}={fmt_rational(self.scale)}"


@dataclass(frozen=True)
class Certificate:
    checks: tuple[tuple[Fraction, Fraction, Fraction], ...]    # (a, eps, gamma) for (i)
    converse: tuple[tuple[Fraction, Fraction, Fraction], ...]  # (a, gamma, eps') for (ii)
    failures: tuple[Failure, ...] = ()
    round_trip: bool = True

    @property
    def passed(self) -> bool:
        return not self.failures and self.round_trip


def sample_points(spec: TopologySpec, per_interval: int = 4) -> tuple[Fraction, ...]:
    pts = {c.q for c in spec.point_cells}
    for iv in spec.space.intervals():
        for k in range(1, per_interval):
            pts.add(iv.lo + (iv.hi - iv.lo) * k / per_interval)
        w = iv.hi - iv.lo
        pts.add(iv.lo + w / 64)
        pts.add(iv.hi - w / 64)
    for c in spec.cells:
        for b in ((c.q,) if isinstance(c, IsolPoint) else (c.lo, c.hi)):
            if b in spec.space:
                pts.add(b)
    return tuple(sorted(pts))


def verify_embedding(spec: TopologySpec, emb: Embedding, schedule: Sequence = DEFAULT_SCHEDULE,
                     points: Optional[Sequence] = None, extra_depth: int = 24) -> Certificate:
    """Check that ``emb`` matches the neighborhoods of ``spec`` both ways."""
    require_validated(spec)
    schedule = tuple(as_fraction(e) for e in schedule)
    fine = tuple(Fraction(1, 2 ** k) for k in range(1, len(schedule) + extra_depth + 1))
    pts = tuple(as_fraction(p) for p in points) if points is not None else sample_points(spec)
    checks, converse, failures = [], [], []
    round_trip = all(emb.inverse(emb(x)) == x for x in pts)
    for a in pts:
        fa = emb(a)
        pre = {g: ball_preimage(emb, fa, g) for g in fine}
        for eps in schedule:
            n = spec.neighborhood(a, eps)
            if n is None:
                continue
            g = next((g for g in fine if pre[g] <= n), None)
            if g is None:
                failures.append(Failure(a, eps, "i"))
            else:
                checks.append((a, eps, g))
        for g in schedule:
            e2 = next((e for e in fine if (m := spec.neighborhood(a, e)) is not None and m <= pre[g]), None)
            if e2 is None:
                failures.append(Failure(a, g, "ii"))
            else:
                converse.append((a, g, e2))
    return Certificate(tuple(checks), tuple(converse), tuple(failures), round_trip)


# --------------------------------------------------------------------------
# serialization


def _q(x) -> str:
    return fmt_rational(x)


def embedding_json(n: NormalizedSpec, emb: Embedding, cert: Optional[Certificate] = None) -> dict:
    out = {
        "anchors": [{"point": _q(h), "at": [_q(v) for v in p]} for h, p in emb.anchors],
        "curves": [{
            "index": c.index,
            "interval": f"({_q(c.lo)},{_q(c.hi)})",
            "vertices": [[_q(v) for v in p] for p in c.vertices],
            "left": None if c.left is None else _q(c.left),
            "right": None if c.right is None else _q(c.right),
            "loop": c.left is not None and c.left == c.right,
        } for c in emb.curves],
        "attachments": [{"curve": c.index, "end": side, "anchor": _q(h)}
                        for c in emb.curves for side, h in (("left", c.left), ("right", c.right))
                        if h is not None],
        "map": [{"curve": c.index, "pieces": [
            {"domain": f"[{_q(u)},{_q(v)}]", "from": [_q(x) for x in p], "to": [_q(x) for x in q]}
            for u, v, p, q in c.segments()]} for c in emb.curves],
        "sigma": _q(emb.sigma),
        "k": emb.k,
        "normalized": {
            "space": render(n.spec.space),
            "shifts": [{"interval": f"({_q(iv.lo)},{_q(iv.hi)})", "shift": _q(t)} for iv, t in n.shifts],
            "isolated": [{"point": _q(h), "image": _q(h2)} for h, h2 in n.h_map],
        },
    }
    if cert is not None:
        out["certificate"] = {
            "passed": cert.passed,
            "round_trip": cert.round_trip,
            "checks": len(cert.checks),
            "converse_checks": len(cert.converse),
            "failures": [{"a": _q(f.a), "scale": _q(f.scale), "direction": f.direction} for f in cert.failures],
        }
    return out
