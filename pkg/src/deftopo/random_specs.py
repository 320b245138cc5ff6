"""Random specifications drawn from menus of known neighborhood shapes.

Used by the consistency sweeps: every draw is valid by construction in most
cases, and :func:`sample_specs` keeps only those that validate and are
Hausdorff.
"""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterator, Optional

from .decide import check_hausdorff
from .dsl import InvalidSpecError, TopologySpec, ensure_valid, parse
from .geom import fmt_rational

MAX_CELLS = 4
MAX_PIECES = 3


def _q(x) -> str:
    return fmt_rational(Fraction(x))


def _open_template(rng: random.Random, lo, hi, ends) -> str:
    """Pieces for an open cell; ``ends`` lists endpoints of X not in X."""
    kind = rng.choice(["euclid"] * 4 + ["left", "right", "discrete", "glued"])
    if kind == "euclid":
        return "(a - eps, a + eps)"
    if kind == "left":
        return "[a, a + eps)"
    if kind == "right":
        return "(a - eps, a]"
    if kind == "discrete":
        return "{a}"
    # a half-closed side plus a ray into a free end: usually not Hausdorff
    side = rng.choice(["[a, a + eps)", "(a - eps, a]"])
    if ends:
        s, d = rng.choice(ends)
        ray = f"({_q(s)}, {_q(s)} + eps)" if d == "left" else f"({_q(s)} - eps, {_q(s)})"
        return f"{side}, {ray}"
    return side


def _point_template(rng: random.Random, q, sides, ends) -> str:
    pieces = ["{a}"]
    if sides and rng.random() < 0.6:
        left, right = sides
        shape = rng.choice([s for s in ("both", "left", "right") if (s != "left" or left) and (s != "right" or right)
                            and (s != "both" or (left and right))] or ["none"])
        if shape == "both":
            pieces.append("(a - eps, a + eps)")
        elif shape == "left":
            pieces.append("(a - eps, a]")
        elif shape == "right":
            pieces.append("[a, a + eps)")
    free = list(ends)
    rng.shuffle(free)
    for s, d in free[: rng.randint(0, min(2, MAX_PIECES - len(pieces)))]:
        pieces.append(f"({_q(s)}, {_q(s)} + eps)" if d == "left" else f"({_q(s)} - eps, {_q(s)})")
    return ", ".join(pieces)


def _lex_pair(lo1, lo2) -> tuple[str, str]:
    d = _q(lo2 - lo1)
    return (f"(a - eps, a], (a + {d} - eps, a + {d})",
            f"[a, a + eps), (a - {d}, a - {d} + eps)")


def random_source(rng: random.Random) -> str:
    """Source text of a random spec with at most four cells."""
    n_int = rng.randint(1, 2)
    intervals = [(Fraction(2 * j), Fraction(2 * j + 1)) for j in range(n_int)]
    cells: list[tuple] = []
    for lo, hi in intervals:
        if len(cells) + 3 <= MAX_CELLS and rng.random() < 0.35:
            m = lo + Fraction(rng.choice([1, 1, 2, 3]), 4)
            cells += [("open", lo, m), ("point", m), ("open", m, hi)]
        else:
            cells.append(("open", lo, hi))
    if len(cells) < MAX_CELLS and rng.random() < 0.4:
        cells.append(("point", Fraction(2 * n_int + 1)))
    pts = {c[1] for c in cells if c[0] == "point"}
    ends = []
    for lo, hi in intervals:
        if lo not in pts:
            ends.append((lo, "left"))
        if hi not in pts:
            ends.append((hi, "right"))
    opens = [c for c in cells if c[0] == "open"]
    lex = {}
    if len(intervals) == 2 and len(opens) == 2 and rng.random() < 0.25:
        t1, t2 = _lex_pair(opens[0][1], opens[1][1])
        lex = {opens[0]: t1, opens[1]: t2}
    items, rules = [], []
    for c in cells:
        if c[0] == "open":
            items.append(f"({_q(c[1])},{_q(c[2])})")
            body = lex.get(c) or _open_template(rng, c[1], c[2], ends)
            rules.append(f"  on ({_q(c[1])},{_q(c[2])}) at a: {{ {body} }};")
        else:
            q = c[1]
            items.append(f"{{{_q(q)}}}")
            inside = any(lo < q < hi for lo, hi in intervals)
            body = _point_template(rng, q, (inside, inside), ends)
            rules.append(f"  on {{{_q(q)}}} at a: {{ {body} }};")
    return "space { " + ", ".join(items) + " }\ntopology {\n" + "\n".join(rules) + "\n}\n"


def random_spec(rng: random.Random) -> Optional[TopologySpec]:
    """A validated random spec, or None when the draw is not a topology."""
    try:
        return ensure_valid(parse(random_source(rng)))
    except InvalidSpecError:
        return None


def sample_specs(count: int = 100, seed: int = 0, hausdorff: bool = True, limit: int = 5000) -> list[TopologySpec]:
    """``count`` distinct validated (and by default Hausdorff) random specs."""
    rng = random.Random(seed)
    out: list[TopologySpec] = []
    seen = set()
    for _ in range(limit):
        s = random_spec(rng)
        if s is None or s in seen:
            continue
        if hausdorff and not check_hausdorff(s)[0]:
            continue
        seen.add(s)
        out.append(s)
        if len(out) >= count:
            break
    return out


def iter_sources(seed: int = 0) -> Iterator[str]:
    rng = random.Random(seed)
    while True:
        yield random_source(rng)
