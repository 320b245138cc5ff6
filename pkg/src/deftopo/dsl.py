"""Topology specification language: parsing, printing and validation.

A specification names a bounded set X on the line, partitions it into cells
(isolated points and open intervals) and gives, for each cell, a template
``N(a, eps)`` of basic neighborhoods of the cell's generic point ``a``.  The
templates are read as neighborhood bases that shrink as ``eps -> 0+``::

    space { (0,1), {2} }
    topology {
      on (0,1) at a: { (a - eps, a + eps) };
      on {2} at p:   { {p}, (0, eps) };
    }
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence, Union

from . import formulas as fm
from . import lra
from .geom import (
    AffineExpr,
    Interval,
    IntervalPiece,
    OpenInterval,
    Point,
    SemilinearSet,
    Singleton,
    as_fraction,
    combine,
    eval_template,
    fmt_rational,
    union_all,
)


class SpecSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class InvalidSpecError(ValueError):
    """Raised when a later stage receives a spec that does not validate."""

    def __init__(self, report: "ValidationReport"):
        names = ", ".join(f.check for f in report.failures)
        super().__init__(f"specification failed validation: {names}")
        self.report = report


@dataclass(frozen=True)
class IsolPoint:
    q: Fraction
    var_name: str = "p"

    def __post_init__(self):
        object.__setattr__(self, "q", as_fraction(self.q))

    def as_set(self) -> SemilinearSet:
        return SemilinearSet.point(self.q)

    def __contains__(self, x) -> bool:
        return as_fraction(x) == self.q

    @property
    def key(self) -> tuple:
        return ("point", self.q)

    def fmt(self) -> str:
        return "{" + fmt_rational(self.q) + "}"


@dataclass(frozen=True)
class OpenCell:
    lo: Fraction
    hi: Fraction
    var_name: str = "a"

    def __post_init__(self):
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        if self.lo >= self.hi:
            raise ValueError(f"empty cell ({self.lo}, {self.hi})")

    def as_set(self) -> SemilinearSet:
        return SemilinearSet([OpenInterval(self.lo, self.hi)])

    def __contains__(self, x) -> bool:
        return self.lo < as_fraction(x) < self.hi

    @property
    def key(self) -> tuple:
        return ("open", self.lo, self.hi)

    def fmt(self) -> str:
        return f"({fmt_rational(self.lo)},{fmt_rational(self.hi)})"


Cell = Union[IsolPoint, OpenCell]


@dataclass(frozen=True)
class NbhdTemplate:
    pieces: tuple[IntervalPiece, ...]
    owner: Cell

    def at(self, a, eps) -> SemilinearSet:
        if isinstance(self.owner, IsolPoint):
            a = self.owner.q
        return eval_template(self.pieces, a, eps)

    def fmt(self) -> str:
        v = self.owner.var_name
        return "{ " + ", ".join(p.fmt(v) for p in self.pieces) + " }"


@dataclass(frozen=True)
class TopologySpec:
    space: SemilinearSet
    cells: tuple[Cell, ...]
    templates: tuple[NbhdTemplate, ...]
    validated: bool = field(default=False, compare=False)

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.space, self.cells, self.templates))
            object.__setattr__(self, "_hash", h)
        return h

    def template(self, cell: Cell) -> NbhdTemplate:
        for t in self.templates:
            if t.owner == cell:
                return t
        raise KeyError(cell)

    def cell_of(self, x) -> Cell:
        x = as_fraction(x)
        for c in self.cells:
            if x in c:
                return c
        raise ValueError(f"{fmt_rational(x)} is not a point of X")

    @property
    def open_cells(self) -> tuple[OpenCell, ...]:
        return tuple(c for c in self.cells if isinstance(c, OpenCell))

    @property
    def point_cells(self) -> tuple[IsolPoint, ...]:
        return tuple(c for c in self.cells if isinstance(c, IsolPoint))

    @property
    def max_pieces(self) -> int:
        return max((len(t.pieces) for t in self.templates), default=0)

    def neighborhood(self, x, eps) -> Optional[SemilinearSet]:
        """``N(x, eps)``, or None when ``eps`` is outside the valid domain at ``x``."""
        x, eps = as_fraction(x), as_fraction(eps)
        cell = self.cell_of(x)
        t = self.template(cell)
        if eps <= 0:
            return None
        try:
            n = t.at(x, eps)
        except ValueError:
            return None
        if not n.issubset(self.space):
            return None
        return n

    def eps_domain(self, cell: Cell) -> lra.Formula:
        """Valid ``(a, eps)`` pairs for the cell, in variables ``a`` and ``eps``."""
        return lra.conj(fm.in_cell(cell, "a"), fm.domain(self, cell, "a", "eps"))

    def structurally_equal(self, other: "TopologySpec") -> bool:
        return (self.space, self.cells, self.templates) == (other.space, other.cells, other.templates)


# --------------------------------------------------------------------------
# parser

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+|#[^\n]*)|(?P<num>\d+(?:/\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<sym>[{}()\[\],;:+\-*−·])"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_Tok]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise SpecSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            sym = {"−": "-", "·": "*"}.get(s, s)
            out.append(_Tok(kind, sym, line, pos - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rindex("\n") + 1
        pos = m.end()
    out.append(_Tok("eof", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.i = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.cur
        found = tok.text or "end of input"
        raise SpecSyntaxError(f"{msg} (found {found!r})", tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.cur.text == text and self.cur.kind in ("sym", "ident"):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Tok:
        tok = self.cur
        if not self.accept(text):
            self.error(f"expected {text!r}")
        return tok

    def rat(self) -> Fraction:
        neg = self.accept("-")
        tok = self.cur
        if tok.kind != "num":
            self.error("expected a rational literal")
        self.i += 1
        q = Fraction(tok.text)
        return -q if neg else q

    def item(self, var: str = "") -> Cell:
        if self.accept("("):
            lo = self.rat()
            self.expect(",")
            hi = self.rat()
            tok = self.expect(")")
            if lo >= hi:
                self.error("empty interval", tok)
            return OpenCell(lo, hi, var or "a")
        if self.accept("{"):
            q = self.rat()
            self.expect("}")
            return IsolPoint(q, var or "p")
        self.error("expected '(' or '{' starting an item")

    def expr(self, var: str) -> AffineExpr:
        total = AffineExpr()
        sign = Fraction(1)
        if self.accept("-"):
            sign = Fraction(-1)
        else:
            self.accept("+")
        while True:
            total = total + self.term(var).scale(sign)
            if self.accept("+"):
                sign = Fraction(1)
            elif self.accept("-"):
                sign = Fraction(-1)
            else:
                return total

    def term(self, var: str) -> AffineExpr:
        tok = self.cur
        if tok.kind == "num":
            q = self.rat()
            if self.accept("*"):
                return self.factor(var).scale(q)
            return AffineExpr.const(q)
        return self.factor(var)

    def factor(self, var: str) -> AffineExpr:
        tok = self.cur
        if tok.kind == "ident":
            self.i += 1
            if tok.text == "eps":
                return AffineExpr(0, 1, 0)
            if tok.text == var:
                return AffineExpr(1, 0, 0)
            self.error(f"unknown identifier {tok.text!r}", tok)
        if tok.kind == "num":
            return AffineExpr.const(self.rat())
        self.error("expected an identifier or rational")

    def piece(self, var: str) -> IntervalPiece:
        if self.accept("{"):
            at = self.expr(var)
            self.expect("}")
            return Singleton(at)
        tok = self.cur
        if tok.text not in ("(", "["):
            self.error("expected a piece starting with '(', '[' or '{'")
        self.i += 1
        lo = self.expr(var)
        self.expect(",")
        hi = self.expr(var)
        close = self.cur
        if close.text not in (")", "]"):
            self.error("expected ')' or ']' closing a piece")
        self.i += 1
        return Interval(lo, hi, tok.text == "[", close.text == "]")

    def spec(self) -> TopologySpec:
        self.expect("space")
        self.expect("{")
        items = [self.item()]
        while self.accept(","):
            items.append(self.item())
        self.expect("}")
        self.expect("topology")
        self.expect("{")
        cells: list[Cell] = []
        templates: list[NbhdTemplate] = []
        seen: set = set()
        while self.cur.text == "on":
            on_tok = self.cur
            self.i += 1
            pending = self.item()
            self.expect("at")
            vtok = self.cur
            if vtok.kind != "ident" or vtok.text == "eps":
                self.error("expected a variable name", vtok)
            self.i += 1
            cell = replace(pending, var_name=vtok.text)
            if cell.key in seen:
                self.error("duplicate cell", on_tok)
            seen.add(cell.key)
            self.expect(":")
            self.expect("{")
            pieces = [self.piece(vtok.text)]
            while self.accept(","):
                pieces.append(self.piece(vtok.text))
            self.expect("}")
            self.expect(";")
            cells.append(cell)
            templates.append(NbhdTemplate(tuple(pieces), cell))
        if not cells:
            self.error("expected at least one 'on' rule")
        self.expect("}")
        if self.cur.kind != "eof":
            self.error("trailing input")
        space = union_all(c.as_set() for c in items)
        return TopologySpec(space, tuple(cells), tuple(templates))


def parse(text: str) -> TopologySpec:
    """Parse specification source into an unvalidated :class:`TopologySpec`."""
    return _Parser(text).spec()


def emit(spec: TopologySpec) -> str:
    items = []
    for c in spec.space.components:
        if isinstance(c, Point):
            items.append("{" + fmt_rational(c.q) + "}")
        else:
            items.append(f"({fmt_rational(c.lo)},{fmt_rational(c.hi)})")
    lines = ["space { " + ", ".join(items) + " }", "topology {"]
    for t in spec.templates:
        c = t.owner
        lines.append(f"  on {c.fmt()} at {c.var_name}: {t.fmt()};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Failure:
    check: str
    witness: dict
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    failures: tuple[Failure, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures

    def checks_failed(self) -> list[str]:
        return [f.check for f in self.failures]


CHECKS = ("bounded", "partition", "nondegeneracy", "containment", "membership",
          "monotonicity", "openness")


def _partition_failures(spec: TopologySpec) -> list[Failure]:
    out = []
    cells = list(spec.cells)
    for i, c1 in enumerate(cells):
        for c2 in cells[i + 1:]:
            both = c1.as_set() & c2.as_set()
            if both:
                out.append(Failure("partition", {"x": both.sample()},
                                   f"cells {c1.fmt()} and {c2.fmt()} overlap"))
    covered = union_all(c.as_set() for c in cells)
    diff = combine("symmetric_difference", covered, spec.space)
    if diff:
        out.append(Failure("partition", {"x": diff.sample()}, "cells do not cover X exactly"))
    return out


def _cell_env(cell: Cell) -> dict:
    return {"a": cell.q} if isinstance(cell, IsolPoint) else {}


_WITNESS_NAMES = {"e": "eps", "e0": "eps0", "e2": "eps2"}


def _first_witness(bad: lra.Formula, cell: Cell, order: Sequence[str]) -> Optional[dict]:
    env = _cell_env(cell)
    w = lra.witness(lra.substitute(bad, env), [v for v in order if v not in env])
    if w is None:
        return None
    return {**env, **{_WITNESS_NAMES.get(k, k): v for k, v in w.items()}}


def validate(spec: TopologySpec) -> ValidationReport:
    """Run every well-formedness check; each is decided by exact elimination."""
    failures: list[Failure] = []
    if not spec.space.bounded:  # pragma: no cover - representation is bounded
        failures.append(Failure("bounded", {}))
    failures += _partition_failures(spec)
    if failures:
        return ValidationReport(tuple(failures))
    for cell in spec.cells:
        for check, bad, order in fm.validation_violations(spec, cell):
            w = _first_witness(bad, cell, order)
            if w is not None:
                failures.append(Failure(check, w, f"on cell {cell.fmt()}"))
    return ValidationReport(tuple(failures))


def ensure_valid(spec: TopologySpec) -> TopologySpec:
    """Validated copy of ``spec``; raises :class:`InvalidSpecError` otherwise."""
    if spec.validated:
        return spec
    report = validate(spec)
    if not report.ok:
        raise InvalidSpecError(report)
    return replace(spec, validated=True)


def require_validated(spec: TopologySpec) -> TopologySpec:
    if not isinstance(spec, TopologySpec):
        raise TypeError(f"expected a TopologySpec, got {type(spec).__name__}")
    if not spec.validated:
        raise InvalidSpecError(ValidationReport((Failure("unvalidated", {}, "call ensure_valid first"),)))
    return spec


def load(text: str) -> TopologySpec:
    return ensure_valid(parse(text))
