import importlib
from fractions import Fraction as F
from itertools import combinations

import pytest

from deftopo.embed import (
    EmbeddingError,
    ball_preimage,
    build_embedding,
    detach,
    embed,
    embedding_json,
    normalize_isolate,
    sample_points,
    spacing_ok,
    verify_embedding,
)

from helpers import dyadic_schedule, fx, grid

AFFINIZABLE = ("affine", "two_cells", "infty", "chain")
FINE = dyadic_schedule(24)


def _dist(p, q):
    return max(abs(u - v) for u, v in zip(p, q))


def _run_samples(n, depth=20):
    """Points of ``n`` near both ends of every run and in its middle."""
    out = []
    for r in n.runs():
        if r.is_point:
            out.append(r.lo)
            continue
        w = r.hi - r.lo
        out.append(r.lo + w / 2)
        for k in range(2, depth):
            out += [r.lo + w / 2 ** k, r.hi - w / 2 ** k]
        out += [q for q in (r.lo, r.hi) if n and q in n]
    return out


def _outside_samples(spec, n, depth=30):
    """Points of X outside ``n``: a coarse grid plus points closing in on each run end."""
    pts = [x for x in grid(spec.space.inf, spec.space.sup, F(1, 64)) if x in spec.space]
    for r in n.runs():
        for b in (r.lo, r.hi):
            pts.append(b)
            for k in range(4, depth):
                pts += [b - F(1, 2 ** k), b + F(1, 2 ** k)]
    return [x for x in pts if x in spec.space and x not in n]


def sampled_continuity(spec, emb, a, gamma) -> bool:
    fa = emb(a)
    for e in FINE:
        n = spec.neighborhood(a, e)
        if n is not None and all(_dist(emb(x), fa) < gamma for x in _run_samples(n)):
            return True
    return False


def sampled_openness(spec, emb, a, eps, floor=F(1, 2 ** 20)) -> bool:
    fa = emb(a)
    n = spec.neighborhood(a, eps)
    return n is None or min((_dist(emb(x), fa) for x in _outside_samples(spec, n)), default=floor) >= floor


@pytest.fixture(scope="module", params=AFFINIZABLE)
def embedded(request):
    s = fx(request.param)
    n, e = embed(s)
    return request.param, s, n, e


def test_certificate_passes(embedded):
    _, s, _, e = embedded
    cert = verify_embedding(s, e)
    assert cert.passed and cert.round_trip
    assert len(cert.checks) > 0 and len(cert.converse) > 0


def test_image_geometry(embedded):
    _, s, _, e = embedded
    assert spacing_ok(e)
    for c in e.curves:
        for v in c.vertices:
            assert v[1] in (0, c.index) and v[2] == v[1] * c.index
    pts = [x for x in grid(s.space.inf, s.space.sup, F(1, 32)) if x in s.space]
    images = [e(x) for x in pts]
    assert len(set(images)) == len(images)
    assert all(e.inverse(e(x)) == x for x in pts)


def test_sampled_homeomorphism(embedded):
    _, s, _, e = embedded
    for a in sample_points(s):
        for g in dyadic_schedule(6):
            assert sampled_continuity(s, e, a, g), (a, g)
        for eps in dyadic_schedule(6):
            assert sampled_openness(s, e, a, eps), (a, eps)


def test_infty_layout():
    n, e = embed(fx("infty"))
    assert n.h_map == ((F(2), F(6)),)
    assert n.forward(3) == 4 and n.inverse(4) == 3 and n.forward(2) == 6
    assert e.anchors == ((F(2), (F(1, 2), F(0), F(0))),)
    assert e(3) == (F(5, 8), F(2), F(4))
    assert [(c.left, c.right) for c in e.curves] == [(2, 2), (2, 2)]


def test_detached_end_breaks_certificate():
    s = fx("infty")
    _, e = embed(s)
    bad = detach(e, 2, "right")
    cert = verify_embedding(s, bad)
    assert not cert.passed
    assert cert.failures[0].describe() == "direction (ii) fails at a=2, gamma=1/2"
    assert not sampled_continuity(s, bad, F(2), F(1, 2))


def test_ball_preimage_matches_distances():
    s = fx("chain")
    _, e = embed(s)
    center, gamma = e(F(1, 2)), F(1, 64)
    pre = ball_preimage(e, center, gamma)
    for x in [x for x in grid(0, 1, F(1, 512)) if x in s.space]:
        assert (x in pre) == (_dist(e(x), center) < gamma), x


def test_not_affinizable_raises():
    with pytest.raises(EmbeddingError):
        embed(fx("lex"))


def test_normalized_spec_is_isolated():
    n = normalize_isolate(fx("chain"))
    assert [h for h, _ in n.h_map] == [F(1, 4), F(1, 2), F(3, 4)]
    for h, h2 in n.h_map:
        assert n.inverse(n.forward(h)) == h
        assert h2 not in n.source.space or h2 > n.source.space.sup
    # the normalized spec is affine off its special points
    for c in n.spec.open_cells:
        assert all(p.fmt() == "(a - eps, a + eps)" for p in n.spec.template(c).pieces)
    assert build_embedding(n).k == 4


def test_embedding_json_is_exact():
    n, e = embed(fx("infty"))
    data = embedding_json(n, e, verify_embedding(fx("infty"), e))
    assert data["anchors"] == [{"point": "2", "at": ["1/2", "0", "0"]}]
    assert len(data["curves"]) == 2


def test_anchor_spacing_distinct():
    _, e = embed(fx("chain"))
    xs = [p[0] for _, p in e.anchors]
    assert all(a != b for a, b in combinations(xs, 2))


def test_attachment_cap(monkeypatch):
    em = importlib.import_module("deftopo.embed")  # the package re-exports embed() under this name
    n = normalize_isolate(fx("infty"))
    assert build_embedding(n).k == 2
    monkeypatch.setattr(em, "MAX_ATTACHMENTS", 3)
    with pytest.raises(EmbeddingError, match="hosts 4 curve ends"):
        build_embedding(n)
