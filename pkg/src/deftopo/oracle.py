"""Brute-force cross-checks on a finite grid with a shrinking scale schedule.

Sampling can only refute: a discrepancy is reported when a concrete
neighborhood at a scheduled scale contradicts the symbolic answer.
"""
from __future__ import annotations

import random
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import networkx as nx

from .decide import FiniteComponents, check_hausdorff, components
from .dsl import IsolPoint, TopologySpec, require_validated
from .geom import SemilinearSet, affine_closure, fmt_rational, render, union_all
from .shadow import breakpoints, shadows_at, tau_closure


@dataclass(frozen=True)
class SampleGrid:
    points: tuple[Fraction, ...]
    schedule: tuple[Fraction, ...]
    spacing: Fraction


@dataclass(frozen=True)
class Discrepancy:
    check: str
    location: str
    symbolic: str
    sampled: str


def make_grid(spec: TopologySpec, resolution: int = 8, depth: int = 12) -> SampleGrid:
    if resolution < 1 or depth < 1:
        raise ValueError("resolution and depth must be at least 1")
    h = Fraction(1, 2 ** resolution)
    pts = {c.q for c in spec.point_cells}
    for c in spec.open_cells:
        pts.update(b for b in breakpoints(spec, c))
    for iv in spec.space.intervals():
        k = iv.lo // h + 1
        while k * h < iv.hi:
            if k * h > iv.lo:
                pts.add(k * h)
            k += 1
    for c in spec.cells:
        if not isinstance(c, IsolPoint):
            pts.update(b for b in (c.lo, c.hi) if b in spec.space)
    pts = {p for p in pts if p in spec.space}
    sched = tuple(Fraction(1, 2 ** k) for k in range(1, depth + 1))
    return SampleGrid(tuple(sorted(pts)), sched, h)


@lru_cache(maxsize=1 << 16)
def _nbhd(spec: TopologySpec, p: Fraction, e: Fraction) -> Optional[SemilinearSet]:
    return spec.neighborhood(p, e)


def _valid(spec, p, sched):
    for e in sched:
        n = _nbhd(spec, p, e)
        if n is not None:
            yield e, n


# --------------------------------------------------------------------------
# closure


def brute_closure(spec: TopologySpec, z: SemilinearSet, grid: SampleGrid) -> tuple[SemilinearSet, list[Discrepancy]]:
    """Grid points whose scheduled neighborhoods all meet ``z``."""
    require_validated(spec)
    sym = tau_closure(spec, z)
    adherent, out = [], []
    for p in grid.points:
        miss = next((e for e, n in _valid(spec, p, grid.schedule) if not n.meets(z)), None)
        if miss is None:
            adherent.append(p)
        elif p in sym:
            out.append(Discrepancy("closure", fmt_rational(p), "adherent",
                                   f"N(p,{fmt_rational(miss)}) misses {render(z)}"))
    return SemilinearSet.points(adherent), out


# --------------------------------------------------------------------------
# shadows


def brute_shadows(spec: TopologySpec, p, schedule: Sequence[Fraction]) -> tuple[SemilinearSet, list[Discrepancy]]:
    """Intersect affine closures along the schedule and extrapolate to scale 0."""
    require_validated(spec)
    p = Fraction(p)
    sym = shadows_at(spec, p)
    closures = [(e, affine_closure(n)) for e, n in _valid(spec, p, schedule)]
    out = []
    if not closures:
        return SemilinearSet.empty(), out
    meet = closures[0][1]
    for _, c in closures[1:]:
        meet = meet & c
    if not sym <= meet:
        out.append(Discrepancy("shadows", fmt_rational(p), render(sym), f"outside {render(meet)}"))
    found = meet
    if len(closures) >= 2:
        (e1, c1), (e2, c2) = closures[-2], closures[-1]
        r1, r2 = c1.runs(), c2.runs()
        if e1 == 2 * e2 and len(r1) == len(r2):
            lim = union_all(SemilinearSet.interval(2 * b.lo - a.lo, 2 * b.hi - a.hi, True, True)
                            if 2 * b.lo - a.lo < 2 * b.hi - a.hi else SemilinearSet.point(2 * b.lo - a.lo)
                            for a, b in zip(r1, r2))
            found = lim
            if lim != sym:
                out.append(Discrepancy("shadows", fmt_rational(p), render(sym), render(lim)))
    return found, out


# --------------------------------------------------------------------------
# components


def _cover_scale(spec, p, grid) -> Optional[SemilinearSet]:
    for e, n in _valid(spec, p, grid.schedule):
        if e <= grid.spacing:
            return n
    return None


def brute_components(spec: TopologySpec, grid: SampleGrid) -> tuple[list[SemilinearSet], list[Discrepancy]]:
    """Connect grid points whose small neighborhoods meet; compare with the symbolic parts."""
    require_validated(spec)
    g = nx.Graph()
    cover = {}
    for p in grid.points:
        g.add_node(p)
        cover[p] = _cover_scale(spec, p, grid)
    # sweep over the runs of all cover sets to find the meeting pairs
    runs = sorted(((r, p) for p in grid.points if cover[p] is not None for r in cover[p].runs()),
                  key=lambda t: (t[0].lo, not t[0].left_closed))
    active: list = []
    for r, p in runs:
        active = [(s, q) for s, q in active if s.hi > r.lo or (s.hi == r.lo and s.right_closed)]
        for s, q in active:
            if q != p and (s.hi > r.lo or r.left_closed):
                g.add_edge(p, q)
        active.append((r, p))
    parts = sorted((SemilinearSet.points(c) for c in nx.connected_components(g)), key=lambda s: s.inf)
    sym = components(spec)
    if isinstance(sym, FiniteComponents):
        blocks = list(sym.parts)
    elif sym.clopen is not None:
        blocks = [sym.clopen.Z, spec.space - sym.clopen.Z]
    else:
        blocks = [spec.space]
    out = []
    for part in parts:
        hit = [b for b in blocks if part & b]
        if len(hit) > 1:
            out.append(Discrepancy("components", render(part), " | ".join(render(b) for b in hit),
                                   "grid component meets several symbolic parts"))
    return parts, out


# --------------------------------------------------------------------------
# driver


def random_subset(spec: TopologySpec, rng: random.Random, resolution: int = 8) -> SemilinearSet:
    """A random union of grid intervals and points inside X."""
    h = Fraction(1, 2 ** resolution)
    lo, hi = spec.space.inf, spec.space.sup
    n = int((hi - lo) / h)
    parts = []
    for _ in range(rng.randint(1, 2)):
        i, j = sorted(rng.sample(range(n + 1), 2))
        a, b = lo + i * h, lo + j * h
        parts.append(SemilinearSet.interval(a, b, rng.random() < 0.5, rng.random() < 0.5))
    if rng.random() < 0.3 and spec.point_cells:
        parts.append(SemilinearSet.point(rng.choice(spec.point_cells).q))
    z = union_all(parts) & spec.space
    return z if z else spec.space & SemilinearSet.point(spec.space.sample())


@dataclass
class OracleReport:
    resolution: int
    schedule: tuple[Fraction, ...]
    checks: dict = field(default_factory=dict)
    discrepancies: list[Discrepancy] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.discrepancies

    def to_json(self) -> dict:
        return {
            "resolution": self.resolution,
            "schedule": [fmt_rational(e) for e in self.schedule],
            "checks": dict(sorted(self.checks.items())),
            "discrepancies": [vars(d) for d in self.discrepancies],
        }


def run_oracle(spec: TopologySpec, resolution: int = 8, depth: int = 12, seed: int = 0,
               closure_trials: int = 10, shadow_stride: int = 4) -> OracleReport:
    """Cross-check closures, shadows and components against sampling."""
    require_validated(spec)
    grid = make_grid(spec, resolution, depth)
    rep = OracleReport(resolution, grid.schedule)
    rng = random.Random(seed)
    for _ in range(closure_trials):
        _, d = brute_closure(spec, random_subset(spec, rng, resolution), grid)
        rep.discrepancies += d
    rep.checks["closure"] = closure_trials
    special = {c.q for c in spec.point_cells}
    probes = [p for i, p in enumerate(grid.points) if i % shadow_stride == 0 or p in special]
    for p in probes:
        _, d = brute_shadows(spec, p, grid.schedule)
        rep.discrepancies += d
    rep.checks["shadows"] = len(probes)
    # components are only computed symbolically for Hausdorff specs
    if check_hausdorff(spec)[0]:
        _, d = brute_components(spec, grid)
        rep.discrepancies += d
        rep.checks["components"] = 1
    else:
        rep.checks["components"] = 0
    return rep
