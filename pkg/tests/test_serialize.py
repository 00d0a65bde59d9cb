import json

import numpy as np
import pytest

from energyvol import bekk, garch, serialize
from energyvol import shap as treeshap
from energyvol.mlmodels import fit_knn, fit_linear, fit_mlp
from energyvol.mlmodels.trees import fit_boosted, fit_forest, fit_tree


@pytest.fixture(scope="module")
def garch_fit():
    spec = garch.GarchSpec("GJR")
    r, _ = garch.simulate(spec, garch.GarchParams(0.0, 0.05, 0.05, 0.85, 0.1), 800, seed=3)
    return garch.fit(spec, r)


@pytest.fixture(scope="module")
def xy():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(150, 4))
    y = X[:, 0] ** 2 + 0.5 * X[:, 1] + rng.normal(scale=0.1, size=150)
    return X, y


def roundtrip(model):
    return serialize.loads(serialize.dumps(model, "m", {"note": "x"}))


def test_garch_roundtrip_same_forecast(garch_fit):
    back = roundtrip(garch_fit)
    assert back.spec == garch_fit.spec
    np.testing.assert_array_equal(back.params.full_vector(), garch_fit.params.full_vector())
    np.testing.assert_array_equal(back.variance_path, garch_fit.variance_path)
    assert garch.forecast_one_step(back) == garch.forecast_one_step(garch_fit)
    assert garch.forecast_one_step(back, 0.7) == garch.forecast_one_step(garch_fit, 0.7)


def test_bekk_roundtrip_same_forecast():
    p = bekk.BekkParams([[0.3, 0.0], [0.1, 0.2]], np.diag([0.3, 0.25]), np.diag([0.9, 0.92]))
    E = bekk.simulate(p, 600, seed=4)
    fit = bekk.fit(E, columns=["a", "b"], std_errors=False)
    back = roundtrip(fit)
    np.testing.assert_array_equal(back.params.to_vector(), fit.params.to_vector())
    np.testing.assert_array_equal(back.covariance_path, fit.covariance_path)
    np.testing.assert_array_equal(bekk.forecast_one_step(back), bekk.forecast_one_step(fit))
    assert back.columns == ("a", "b")


@pytest.mark.parametrize("penalty,lam", [("none", 0.0), ("ridge", 0.5), ("lasso", 0.01), ("enet", 0.01)])
def test_linear_roundtrip(xy, penalty, lam):
    X, y = xy
    m = fit_linear(X, y, penalty=penalty, lam=lam)
    np.testing.assert_array_equal(roundtrip(m).predict(X), m.predict(X))


@pytest.mark.parametrize("make", [
    lambda X, y: fit_tree(X, y, max_depth=4),
    lambda X, y: fit_forest(X, y, n_trees=7, max_depth=3, seed=1),
    lambda X, y: fit_boosted(X, y, n_rounds=15, max_depth=2),
])
def test_tree_roundtrip_predictions_and_attributions(xy, make):
    X, y = xy
    m = make(X, y)
    back = roundtrip(m)
    np.testing.assert_array_equal(back.predict(X), m.predict(X))
    b0, phi0 = treeshap.tree_shap_matrix(m, X[:10])
    b1, phi1 = treeshap.tree_shap_matrix(back, X[:10])
    assert b0 == b1
    np.testing.assert_array_equal(phi0, phi1)


def test_tree_document_is_nested(xy):
    X, y = xy
    doc = serialize.to_artifact(fit_tree(X, y, max_depth=2))
    root = doc["params"]["trees"][0]
    assert {"feature", "threshold", "cover"} <= set(root)
    json.dumps(doc)  # plain JSON types only


def test_knn_and_mlp_roundtrip(xy):
    X, y = xy
    for m in (fit_knn(X, y, k=7), fit_mlp(X, y, hidden_width=4, epochs=50, seed=2)):
        np.testing.assert_array_equal(roundtrip(m).predict(X), m.predict(X))


def test_envelope_fields(xy):
    X, y = xy
    doc = serialize.to_artifact(fit_knn(X, y, k=3), "knn-1", {"target": "crude"})
    assert doc["format"] == serialize.FORMAT
    assert doc["version"] == serialize.VERSION
    assert doc["model_id"] == "knn-1" and doc["kind"] == "knn"
    assert doc["metadata"] == {"target": "crude"}


def test_version_mismatch_names_both_versions(xy):
    X, y = xy
    doc = serialize.to_artifact(fit_knn(X, y, k=3))
    doc["version"] = 7
    with pytest.raises(serialize.SerializationError, match="version 7 is not supported.*expects version 1"):
        serialize.from_artifact(doc)


def test_corrupted_json_reports_byte_offset(tmp_path, xy):
    X, y = xy
    path = serialize.save(fit_knn(X, y, k=3), tmp_path / "m.json")
    text = path.read_bytes()
    path.write_bytes(text[:40])
    with pytest.raises(serialize.SerializationError, match=r"invalid JSON at byte offset \d+"):
        serialize.load(path)
    path.write_bytes(b'{"format": "\xc3\xa9", oops}')
    # the offset counts bytes, so the two-byte character shifts it past the char index
    with pytest.raises(serialize.SerializationError, match="byte offset 17"):
        serialize.load(path)


def test_unknown_kind_and_foreign_document():
    with pytest.raises(serialize.SerializationError, match="unknown model kind"):
        serialize.from_artifact({"format": serialize.FORMAT, "version": 1, "kind": "svm", "params": {}})
    with pytest.raises(serialize.SerializationError, match="not an"):
        serialize.from_artifact({"hello": 1})
    with pytest.raises(serialize.SerializationError, match="malformed"):
        serialize.from_artifact({"format": serialize.FORMAT, "version": 1, "kind": "knn", "params": {}})
    with pytest.raises(serialize.SerializationError, match="cannot serialize"):
        serialize.to_artifact(object())


def test_save_creates_directories_and_load_artifact(tmp_path, xy):
    X, y = xy
    path = serialize.save(fit_knn(X, y, k=3), tmp_path / "a" / "b" / "m.json", "id", {"k": 1})
    assert path.exists()
    doc = serialize.load_artifact(path)
    assert doc["metadata"] == {"k": 1}
    np.testing.assert_array_equal(serialize.load(path).predict(X), fit_knn(X, y, k=3).predict(X))
