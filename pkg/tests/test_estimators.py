from fractions import Fraction as F

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from deftopo.cli import fixture_dir
from deftopo.embed import EmbeddingError
from deftopo.geom import parse_set
from deftopo.estimators import TopologyAnalyzer, TopologyEmbedder, check_points, check_spec

from helpers import fx, source


def test_check_spec_accepts_text_path_and_object():
    a = check_spec(source("infty"))
    b = check_spec(fixture_dir() / "infty.top")
    c = check_spec(str(fixture_dir() / "infty.top"))
    assert a == b == c == check_spec(fx("infty"))


def test_check_spec_rejects_invalid():
    with pytest.raises(ValueError):
        check_spec(source("broken_membership"))
    with pytest.raises(TypeError):
        check_spec(42)


def test_check_points_shapes():
    assert check_points(F(1, 2)) == (F(1, 2),)
    assert check_points(["1/2", 3]) == (F(1, 2), F(3))
    assert check_points(np.array([[1], [2]])) == (F(1), F(2))
    assert check_points(np.int64(3)) == (F(3),)
    with pytest.raises(ValueError):
        check_points(np.zeros((2, 2), dtype=int))
    with pytest.raises((TypeError, ValueError)):
        check_points([0.5])
    with pytest.raises(ValueError, match="not a point of X"):
        check_points([5], fx("infty"))


def test_analyzer_fit_predict():
    est = TopologyAnalyzer().fit(source("paper42"))
    assert est.affinizable_ is False and est.verdict_.regular is False
    labels = est.predict(["1/2", "3/2", "5/2"])
    assert list(labels) == ["LocallyIsolated", "LocallyRightClosed", "LocallyLeftClosed"]
    assert labels.dtype == object
    assert est.shadows(["1/2"]) == [parse_set("{1/2} ∪ {3/2} ∪ {5/2}")]
    assert est.shadow_map_.cells[0].subcells[0].functions[1].fmt() == "a + 1"


def test_analyzer_not_fitted():
    with pytest.raises(NotFittedError):
        TopologyAnalyzer().predict([1])


def test_analyzer_params_and_clone():
    est = TopologyAnalyzer(with_components=False)
    assert est.get_params() == {"with_components": False}
    c = clone(est)
    assert c is not est and c.get_params() == est.get_params()
    assert c.fit(fx("lex")).verdict_.components is None


def test_embedder_round_trip():
    est = TopologyEmbedder().fit(fx("infty"))
    assert est.certificate_.passed
    y = est.transform([3, 2, F(1, 2)])
    assert y.shape == (3, 3)
    assert tuple(y[0]) == (F(5, 8), F(2), F(4))
    assert list(est.inverse_transform(y)) == [F(3), F(2), F(1, 2)]


def test_embedder_rejects_non_affinizable():
    with pytest.raises(EmbeddingError):
        TopologyEmbedder().fit(fx("lex"))


def test_embedder_inverse_rejects_bad_shape():
    est = TopologyEmbedder(verify=False).fit(fx("affine"))
    assert est.certificate_ is None
    with pytest.raises(ValueError):
        est.inverse_transform([[1, 2]])
    assert clone(est).get_params() == {"depth": 12, "verify": False}
