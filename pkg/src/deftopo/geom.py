"""Semilinear subsets of the rational line and affine neighborhood pieces.

A :class:`SemilinearSet` is a finite disjoint union of rational points and
bounded open intervals, kept in a single canonical form so that equality of
sets is equality of values.  Closed interval ends are stored as separate
``Point`` components; the textual form re-sugars them into brackets.
"""
from __future__ import annotations

from bisect import bisect_right

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence, Union

Rational = Union[int, Fraction]


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def fmt_rational(q: Fraction) -> str:
    q = as_fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True, order=True)
class Point:
    q: Fraction

    def __post_init__(self):
        object.__setattr__(self, "q", as_fraction(self.q))

    @property
    def lo(self) -> Fraction:
        return self.q

    @property
    def hi(self) -> Fraction:
        return self.q


@dataclass(frozen=True, order=True)
class OpenInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        if self.lo >= self.hi:
            raise ValueError(f"degenerate interval ({self.lo}, {self.hi})")


Component = Union[Point, OpenInterval]


class Run(NamedTuple):
    """A maximal interval of a set, with closedness of its ends."""

    lo: Fraction
    hi: Fraction
    left_closed: bool
    right_closed: bool

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, q: Fraction) -> bool:
        if q < self.lo or q > self.hi:
            return False
        if q == self.lo:
            return self.left_closed
        if q == self.hi:
            return self.right_closed
        return True


def _runs_of(components: Iterable[Component]) -> list[Run]:
    raw = []
    for c in components:
        if isinstance(c, Point):
            raw.append(Run(c.q, c.q, True, True))
        elif isinstance(c, OpenInterval):
            raw.append(Run(c.lo, c.hi, False, False))
        else:
            raise TypeError(f"not a set component: {c!r}")
    raw.sort(key=lambda r: (r.lo, not r.left_closed, r.hi))
    merged: list[Run] = []
    for r in raw:
        if merged:
            cur = merged[-1]
            touches = r.lo < cur.hi or (r.lo == cur.hi and (cur.right_closed or r.left_closed))
            if touches:
                if r.hi > cur.hi:
                    hi, rc = r.hi, r.right_closed
                elif r.hi == cur.hi:
                    hi, rc = cur.hi, cur.right_closed or r.right_closed
                else:
                    hi, rc = cur.hi, cur.right_closed
                lc = cur.left_closed or (r.lo == cur.lo and r.left_closed)
                merged[-1] = Run(cur.lo, hi, lc, rc)
                continue
        merged.append(r)
    return merged


def _components_of_runs(runs: Iterable[Run]) -> tuple[Component, ...]:
    out: list[Component] = []
    for r in runs:
        if r.is_point:
            out.append(Point(r.lo))
            continue
        if r.left_closed:
            out.append(Point(r.lo))
        out.append(OpenInterval(r.lo, r.hi))
        if r.right_closed:
            out.append(Point(r.hi))
    return tuple(out)


class SemilinearSet:
    """Canonical finite union of rational points and bounded open intervals."""

    __slots__ = ("components", "_runs", "_los", "_hash")

    def __init__(self, components: Iterable[Component] = ()):
        runs = _runs_of(components)
        self._runs = tuple(runs)
        self._los = [r.lo for r in runs]
        self.components = _components_of_runs(runs)
        self._hash = None

    # construction helpers
    @classmethod
    def empty(cls) -> "SemilinearSet":
        return cls(())

    @classmethod
    def point(cls, q) -> "SemilinearSet":
        return cls([Point(as_fraction(q))])

    @classmethod
    def points(cls, qs: Iterable) -> "SemilinearSet":
        return cls(Point(as_fraction(q)) for q in qs)

    @classmethod
    def interval(cls, lo, hi, left_closed: bool = False, right_closed: bool = False) -> "SemilinearSet":
        lo, hi = as_fraction(lo), as_fraction(hi)
        if lo == hi:
            if left_closed and right_closed:
                return cls.point(lo)
            return cls.empty()
        comps: list[Component] = [OpenInterval(lo, hi)]
        if left_closed:
            comps.append(Point(lo))
        if right_closed:
            comps.append(Point(hi))
        return cls(comps)

    @classmethod
    def from_runs(cls, runs: Iterable[Run]) -> "SemilinearSet":
        comps: list[Component] = []
        for r in runs:
            comps.extend(_components_of_runs([r]) if r.lo <= r.hi else ())
        return cls(comps)

    # queries
    def runs(self) -> tuple[Run, ...]:
        return self._runs

    def _run_at(self, q) -> Optional[Run]:
        i = bisect_right(self._los, q) - 1
        return self._runs[i] if i >= 0 else None

    def __contains__(self, q) -> bool:
        r = self._run_at(as_fraction(q))
        return r is not None and r.contains(q)

    def meets(self, other: "SemilinearSet") -> bool:
        """Whether the two sets intersect, by a merge over their runs."""
        xs, ys = self._runs, other._runs
        i = j = 0
        while i < len(xs) and j < len(ys):
            r, t = xs[i], ys[j]
            lo, lc = (r.lo, r.left_closed) if r.lo > t.lo else (t.lo, t.left_closed) if t.lo > r.lo \
                else (r.lo, r.left_closed and t.left_closed)
            hi, rc = (r.hi, r.right_closed) if r.hi < t.hi else (t.hi, t.right_closed) if t.hi < r.hi \
                else (r.hi, r.right_closed and t.right_closed)
            if lo < hi or (lo == hi and lc and rc):
                return True
            if r.hi < t.hi or (r.hi == t.hi and not r.right_closed):
                i += 1
            else:
                j += 1
        return False

    def _covers_gap(self, c, d) -> bool:
        """Whether the open interval ``(c, d)`` lies inside the set."""
        r = self._run_at(c)
        return r is not None and r.hi >= d

    def __bool__(self) -> bool:
        return bool(self.components)

    def __eq__(self, other) -> bool:
        return isinstance(other, SemilinearSet) and self.components == other.components

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.components)
        return self._hash

    def __iter__(self) -> Iterator[Component]:
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    @property
    def is_empty(self) -> bool:
        return not self.components

    @property
    def is_finite(self) -> bool:
        return all(isinstance(c, Point) for c in self.components)

    @property
    def bounded(self) -> bool:
        # Components carry finite rational coordinates by construction.
        return True

    def point_values(self) -> tuple[Fraction, ...]:
        if not self.is_finite:
            raise ValueError(f"{self} is not a finite set")
        return tuple(c.q for c in self.components)

    def intervals(self) -> tuple[OpenInterval, ...]:
        return tuple(c for c in self.components if isinstance(c, OpenInterval))

    def endpoints(self) -> tuple[Fraction, ...]:
        pts = set()
        for c in self.components:
            pts.add(c.lo)
            pts.add(c.hi)
        return tuple(sorted(pts))

    @property
    def inf(self) -> Fraction:
        return self.components[0].lo

    @property
    def sup(self) -> Fraction:
        return self.components[-1].hi

    def sample(self) -> Fraction:
        """A deterministic rational member (midpoint of the first run)."""
        if not self._runs:
            raise ValueError("empty set has no sample")
        r = self._runs[0]
        if r.is_point:
            return r.lo
        return (r.lo + r.hi) / 2

    def issubset(self, other: "SemilinearSet") -> bool:
        # a run is connected, so it must sit inside a single run of other
        for r in self._runs:
            t = other._run_at(r.lo)
            if t is None:
                return False
            if t.lo == r.lo and r.left_closed and not t.left_closed:
                return False
            if t.hi < r.hi or (t.hi == r.hi and r.right_closed and not t.right_closed):
                return False
        return True

    def __or__(self, other):
        return combine("union", self, other)

    def __and__(self, other):
        return combine("intersection", self, other)

    def __sub__(self, other):
        return combine("difference", self, other)

    def __le__(self, other):
        return self.issubset(other)

    def __repr__(self) -> str:
        return f"SemilinearSet({render(self)!r})"

    def __str__(self) -> str:
        return render(self)


def canonicalize(raw: Sequence[Component]) -> SemilinearSet:
    """Canonical form of a raw union of points and open intervals."""
    for c in raw:
        if isinstance(c, OpenInterval) and c.lo >= c.hi:  # pragma: no cover - guarded in OpenInterval
            raise ValueError(f"degenerate interval {c}")
    return SemilinearSet(raw)


_OPS = {
    "union": lambda x, y: x or y,
    "intersection": lambda x, y: x and y,
    "difference": lambda x, y: x and not y,
    "symmetric_difference": lambda x, y: x != y,
}


def combine(op: str, a: SemilinearSet, b: SemilinearSet) -> SemilinearSet:
    """Exact boolean combination, by evaluation at endpoints and midpoints."""
    try:
        f = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown set operation {op!r}") from None
    crit = sorted(set(a.endpoints()) | set(b.endpoints()))
    comps: list[Component] = []
    for i, c in enumerate(crit):
        if f(c in a, c in b):
            comps.append(Point(c))
        if i + 1 < len(crit):
            d = crit[i + 1]
            if f(a._covers_gap(c, d), b._covers_gap(c, d)):
                comps.append(OpenInterval(c, d))
    return SemilinearSet(comps)


def union_all(sets: Iterable[SemilinearSet]) -> SemilinearSet:
    comps: list[Component] = []
    for s in sets:
        comps.extend(s.components)
    return SemilinearSet(comps)


def affine_closure(a: SemilinearSet) -> SemilinearSet:
    """Closure in the order topology of the line (adds interval endpoints)."""
    if not a.bounded:  # pragma: no cover - representation is always bounded
        raise ValueError("affine closure requires a bounded set")
    return SemilinearSet.from_runs(Run(r.lo, r.hi, True, True) for r in a.runs())


def affine_interior(a: SemilinearSet) -> SemilinearSet:
    return SemilinearSet(a.intervals())


# --------------------------------------------------------------------------
# textual form

def render(s: SemilinearSet) -> str:
    if s.is_empty:
        return "∅"
    parts = []
    for r in s.runs():
        if r.is_point:
            parts.append("{" + fmt_rational(r.lo) + "}")
        else:
            parts.append(
                ("[" if r.left_closed else "(")
                + fmt_rational(r.lo) + "," + fmt_rational(r.hi)
                + ("]" if r.right_closed else ")")
            )
    return " ∪ ".join(parts)


_RAT = r"-?\d+(?:/\d+)?"
_RUN_RE = re.compile(rf"\s*(?:\{{\s*({_RAT})\s*\}}|([\[(])\s*({_RAT})\s*,\s*({_RAT})\s*([\])]))\s*")


def parse_set(text: str) -> SemilinearSet:
    """Inverse of :func:`render`; also accepts ``U`` for the union sign."""
    text = text.strip()
    if text in ("∅", "{}", ""):
        return SemilinearSet.empty()
    runs = []
    for chunk in re.split(r"∪|\bU\b", text):
        m = _RUN_RE.fullmatch(chunk)
        if not m:
            raise ValueError(f"cannot parse set component {chunk.strip()!r}")
        if m.group(1) is not None:
            q = Fraction(m.group(1))
            runs.append(Run(q, q, True, True))
        else:
            lo, hi = Fraction(m.group(3)), Fraction(m.group(4))
            if lo >= hi:
                raise ValueError(f"degenerate interval in {chunk.strip()!r}")
            runs.append(Run(lo, hi, m.group(2) == "[", m.group(5) == "]"))
    return SemilinearSet.from_runs(runs)


# --------------------------------------------------------------------------
# affine expressions in a cell variable and a scale variable

@dataclass(frozen=True)
class AffineExpr:
    """``coef_a * a + coef_eps * eps + constant`` with exact coefficients."""

    coef_a: Fraction = Fraction(0)
    coef_eps: Fraction = Fraction(0)
    constant: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("coef_a", "coef_eps", "constant"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))

    @classmethod
    def var(cls) -> "AffineExpr":
        return cls(1, 0, 0)

    @classmethod
    def const(cls, q) -> "AffineExpr":
        return cls(0, 0, q)

    def __call__(self, a, eps) -> Fraction:
        return self.coef_a * as_fraction(a) + self.coef_eps * as_fraction(eps) + self.constant

    def __add__(self, other: "AffineExpr") -> "AffineExpr":
        if not isinstance(other, AffineExpr):
            other = AffineExpr.const(other)
        return AffineExpr(self.coef_a + other.coef_a, self.coef_eps + other.coef_eps,
                          self.constant + other.constant)

    def __neg__(self) -> "AffineExpr":
        return AffineExpr(-self.coef_a, -self.coef_eps, -self.constant)

    def __sub__(self, other) -> "AffineExpr":
        if not isinstance(other, AffineExpr):
            other = AffineExpr.const(other)
        return self + (-other)

    def scale(self, k) -> "AffineExpr":
        k = as_fraction(k)
        return AffineExpr(k * self.coef_a, k * self.coef_eps, k * self.constant)

    def at_zero(self) -> "AffineExpr":
        """The eps -> 0+ limit, as a function of the cell variable."""
        return AffineExpr(self.coef_a, 0, self.constant)

    def bind(self, a) -> "AffineExpr":
        """Substitute a rational for the cell variable."""
        return AffineExpr(0, self.coef_eps, self.constant + self.coef_a * as_fraction(a))

    def shift(self, t) -> "AffineExpr":
        """Expression of the same map after translating the cell variable by ``t``."""
        return AffineExpr(self.coef_a, self.coef_eps, self.constant - self.coef_a * as_fraction(t))

    @property
    def uses_eps(self) -> bool:
        return self.coef_eps != 0

    def fmt(self, var: str = "a") -> str:
        terms = []
        for coef, name in ((self.coef_a, var), (self.coef_eps, "eps")):
            if coef == 0:
                continue
            mag = abs(coef)
            body = name if mag == 1 else f"{fmt_rational(mag)}*{name}"
            terms.append(("-" if coef < 0 else "+", body))
        if self.constant != 0 or not terms:
            terms.append(("-" if self.constant < 0 else "+", fmt_rational(abs(self.constant))))
        out = ""
        for i, (sign, body) in enumerate(terms):
            if i == 0:
                out = ("-" if sign == "-" else "") + body
            else:
                out += f" {sign} {body}"
        return out

    def __str__(self) -> str:
        return self.fmt()


@dataclass(frozen=True)
class Interval:
    lo: AffineExpr
    hi: AffineExpr
    left_closed: bool = False
    right_closed: bool = False

    def endpoints(self) -> tuple[AffineExpr, AffineExpr]:
        return (self.lo, self.hi)

    def fmt(self, var: str = "a") -> str:
        return (("[" if self.left_closed else "(") + self.lo.fmt(var) + ", "
                + self.hi.fmt(var) + ("]" if self.right_closed else ")"))


@dataclass(frozen=True)
class Singleton:
    at: AffineExpr

    def endpoints(self) -> tuple[AffineExpr, AffineExpr]:
        return (self.at, self.at)

    def fmt(self, var: str = "a") -> str:
        return "{" + self.at.fmt(var) + "}"


IntervalPiece = Union[Interval, Singleton]


def eval_piece(piece: IntervalPiece, a, eps) -> SemilinearSet:
    if isinstance(piece, Singleton):
        return SemilinearSet.point(piece.at(a, eps))
    lo, hi = piece.lo(a, eps), piece.hi(a, eps)
    if lo >= hi:
        raise ValueError(f"piece {piece.fmt()} degenerates at a={a}, eps={eps}")
    return SemilinearSet.interval(lo, hi, piece.left_closed, piece.right_closed)


def eval_template(pieces: Sequence[IntervalPiece], a, eps) -> SemilinearSet:
    """Instantiate a neighborhood template at a parameter pair."""
    return union_all(eval_piece(p, a, eps) for p in pieces)
