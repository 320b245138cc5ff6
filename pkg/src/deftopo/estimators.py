"""Estimator-style wrappers with scikit-learn conventions.

``fit`` takes a specification (object, source text or path); points are
exact rationals, passed as Fractions, ints, strings or 1-D/column arrays.
"""
from __future__ import annotations

import numbers
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .decide import decide_affinizable, schedule
from .dsl import TopologySpec, ensure_valid, parse
from .embed import EmbeddingError, embed, verify_embedding
from .geom import as_fraction
from .shadow import point_class, shadow_map, shadows_at

SpecLike = Union[TopologySpec, str, Path]


def check_spec(spec: SpecLike) -> TopologySpec:
    """A validated spec from an object, source text or file path."""
    if isinstance(spec, TopologySpec):
        return ensure_valid(spec)
    if isinstance(spec, Path) or (isinstance(spec, str) and "{" not in spec):
        spec = Path(spec).read_text(encoding="utf-8")
    if not isinstance(spec, str):
        raise TypeError(f"expected a spec, source text or path, got {type(spec).__name__}")
    return ensure_valid(parse(spec))


def check_points(x, spec: Optional[TopologySpec] = None) -> tuple[Fraction, ...]:
    """Exact points from a scalar, sequence or an (n,) / (n, 1) array."""
    arr = np.asarray(x, dtype=object)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    elif arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    elif arr.ndim != 1:
        raise ValueError(f"expected a 1-D array of points, got shape {arr.shape}")
    pts = tuple(as_fraction(int(v) if isinstance(v, numbers.Integral) and not isinstance(v, bool) else v)
                for v in arr)
    if spec is not None:
        outside = [p for p in pts if p not in spec.space]
        if outside:
            raise ValueError(f"{outside[0]} is not a point of X")
    return pts


class TopologyAnalyzer(BaseEstimator):
    """Decides affinizability; ``predict`` labels points by local shape."""

    def __init__(self, with_components: bool = True):
        self.with_components = with_components

    def fit(self, spec: SpecLike, y=None):
        self.spec_ = check_spec(spec)
        self.verdict_ = decide_affinizable(self.spec_, self.with_components)
        self.affinizable_ = self.verdict_.affinizable
        self.shadow_map_ = shadow_map(self.spec_)
        return self

    def predict(self, x) -> np.ndarray:
        check_is_fitted(self, "spec_")
        pts = check_points(x, self.spec_)
        return np.array([point_class(self.spec_, p).value for p in pts], dtype=object)

    def shadows(self, x) -> list:
        check_is_fitted(self, "spec_")
        return [shadows_at(self.spec_, p) for p in check_points(x, self.spec_)]


class TopologyEmbedder(TransformerMixin, BaseEstimator):
    """Embeds an affinizable spec in 3-space; the map is exact and invertible."""

    def __init__(self, depth: int = 12, verify: bool = True):
        self.depth = depth
        self.verify = verify

    def fit(self, spec: SpecLike, y=None):
        s = check_spec(spec)
        v = decide_affinizable(s, with_components=False)
        if not v.affinizable:
            raise EmbeddingError("not affinizable")
        self.spec_ = s
        self.normalized_, self.embedding_ = embed(s)
        self.certificate_ = verify_embedding(s, self.embedding_, schedule(self.depth)) if self.verify else None
        if self.certificate_ is not None and not self.certificate_.passed:
            raise EmbeddingError(self.certificate_.failures[0].describe())
        return self

    def transform(self, x) -> np.ndarray:
        check_is_fitted(self, "embedding_")
        pts = check_points(x, self.spec_)
        out = np.empty((len(pts), 3), dtype=object)
        for i, p in enumerate(pts):
            out[i] = self.embedding_(p)
        return out

    def inverse_transform(self, y) -> np.ndarray:
        check_is_fitted(self, "embedding_")
        arr = np.asarray(y, dtype=object)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"expected points in 3-space, got shape {arr.shape}")
        return np.array([self.embedding_.inverse(tuple(row)) for row in arr], dtype=object)
