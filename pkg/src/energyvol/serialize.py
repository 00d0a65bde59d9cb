"""
Versioned JSON documents for fitted models.

Every document has the shape::

    {"format": "energyvol-model", "version": 1, "model_id": ..., "kind": ...,
     "params": {...}, "metadata": {...}}

Floats are written with ``repr`` precision, so loading a document gives a
model with bit-identical predictions.  Tree ensembles store each tree as
nested objects carrying feature index, threshold, cover and leaf value.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

import numpy as np

from energyvol.bekk import BekkFit, BekkParams
from energyvol.garch import GarchFit, GarchParams, GarchSpec
from energyvol.mlmodels.knn import KnnModel
from energyvol.mlmodels.linear import LinearModel
from energyvol.mlmodels.mlp import MlpModel
from energyvol.mlmodels.trees import Tree, TreeEnsemble

__all__ = [
    "SerializationError",
    "FORMAT",
    "VERSION",
    "to_artifact",
    "from_artifact",
    "dumps",
    "loads",
    "save",
    "load",
    "load_artifact",
]

FORMAT = "energyvol-model"
VERSION = 1


class SerializationError(ValueError):
    pass


def _arr(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def _garch_to(m: GarchFit) -> tuple[str, dict]:
    p = m.params
    return "garch", {
        "spec": {"kind": m.spec.kind, "exogenous": list(m.spec.exogenous), "fixed_mean": m.spec.fixed_mean},
        "params": {"mu": p.mu, "omega": p.omega, "alpha": p.alpha, "beta": p.beta, "gamma": p.gamma,
                   "exo_coefs": _arr(p.exo_coefs)},
        "std_errors": m.std_errors,
        "log_likelihood": m.log_likelihood,
        "variance_path": _arr(m.variance_path),
        "std_residuals": _arr(m.std_residuals),
        "converged": m.converged,
        "iterations": m.iterations,
        "grad_norm": m.grad_norm,
        "floor_hits": m.floor_hits,
        "last_return": m.last_return,
        "nobs": m.nobs,
    }


def _garch_from(d: dict) -> GarchFit:
    s, p = d["spec"], d["params"]
    spec = GarchSpec(s["kind"], tuple(s["exogenous"]), s["fixed_mean"])
    params = GarchParams(p["mu"], p["omega"], p["alpha"], p["beta"], p["gamma"], np.array(p["exo_coefs"], float))
    return GarchFit(
        spec=spec,
        params=params,
        std_errors=d["std_errors"],
        log_likelihood=d["log_likelihood"],
        variance_path=np.array(d["variance_path"], float),
        std_residuals=np.array(d["std_residuals"], float),
        converged=d["converged"],
        iterations=d["iterations"],
        grad_norm=d["grad_norm"],
        floor_hits=d["floor_hits"],
        last_return=d["last_return"],
        nobs=d["nobs"],
    )


def _bekk_params_to(p: Optional[BekkParams]):
    return None if p is None else {"C": _arr(p.C), "A": _arr(p.A), "B": _arr(p.B)}


def _bekk_params_from(d) -> Optional[BekkParams]:
    return None if d is None else BekkParams(np.array(d["C"]), np.array(d["A"]), np.array(d["B"]))


def _bekk_to(m: BekkFit) -> tuple[str, dict]:
    return "bekk", {
        "params": _bekk_params_to(m.params),
        "log_likelihood": m.log_likelihood,
        "covariance_path": _arr(m.covariance_path),
        "spectral_radius": m.spectral_radius,
        "converged": m.converged,
        "means": _arr(m.means),
        "last_residual": _arr(m.last_residual),
        "iterations": m.iterations,
        "grad_norm": m.grad_norm,
        "std_errors": _bekk_params_to(m.std_errors),
        "columns": list(m.columns),
    }


def _bekk_from(d: dict) -> BekkFit:
    n = len(d["means"])
    return BekkFit(
        params=_bekk_params_from(d["params"]),
        log_likelihood=d["log_likelihood"],
        covariance_path=np.array(d["covariance_path"], float).reshape(-1, n, n),
        spectral_radius=d["spectral_radius"],
        converged=d["converged"],
        means=np.array(d["means"], float),
        last_residual=np.array(d["last_residual"], float),
        iterations=d["iterations"],
        grad_norm=d["grad_norm"],
        std_errors=_bekk_params_from(d["std_errors"]),
        columns=tuple(d["columns"]),
    )


def _linear_to(m: LinearModel) -> tuple[str, dict]:
    return "linear", {
        "intercept": m.intercept,
        "coefficients": _arr(m.coefficients),
        "penalty": m.penalty,
        "lam": m.lam,
        "mix": m.mix,
        "x_mean": _arr(m.x_mean),
        "x_scale": _arr(m.x_scale),
        "n_iter": m.n_iter,
    }


def _linear_from(d: dict) -> LinearModel:
    return LinearModel(d["intercept"], np.array(d["coefficients"], float), d["penalty"], d["lam"], d["mix"],
                       np.array(d["x_mean"], float), np.array(d["x_scale"], float), d["n_iter"])


def _trees_to(m: TreeEnsemble) -> tuple[str, dict]:
    return "tree_ensemble", {
        "combiner": m.combiner,
        "base_score": m.base_score,
        "learning_rate": m.learning_rate,
        "n_features": m.n_features,
        "feature_names": list(m.feature_names),
        "train_loss": list(m.train_loss),
        "trees": [t.to_nested() for t in m.trees],
    }


def _trees_from(d: dict) -> TreeEnsemble:
    return TreeEnsemble(
        trees=[Tree.from_nested(t) for t in d["trees"]],
        base_score=d["base_score"],
        combiner=d["combiner"],
        learning_rate=d["learning_rate"],
        n_features=d["n_features"],
        feature_names=list(d["feature_names"]),
        train_loss=list(d["train_loss"]),
    )


def _knn_to(m: KnnModel) -> tuple[str, dict]:
    return "knn", {"k": m.k, "X_train": _arr(m.X_train), "y_train": _arr(m.y_train),
                   "x_mean": _arr(m.x_mean), "x_scale": _arr(m.x_scale)}


def _knn_from(d: dict) -> KnnModel:
    p = len(d["x_mean"])
    return KnnModel(d["k"], np.array(d["X_train"], float).reshape(-1, p), np.array(d["y_train"], float),
                    np.array(d["x_mean"], float), np.array(d["x_scale"], float))


def _mlp_to(m: MlpModel) -> tuple[str, dict]:
    return "mlp", {
        "weights": {k: _arr(v) for k, v in m.params.items()},
        "x_mean": _arr(m.x_mean),
        "x_scale": _arr(m.x_scale),
        "y_mean": m.y_mean,
        "y_scale": m.y_scale,
        "hidden_width": m.hidden_width,
        "losses": list(m.losses),
    }


def _mlp_from(d: dict) -> MlpModel:
    w = {k: np.array(v, float) for k, v in d["weights"].items()}
    w["W1"] = w["W1"].reshape(d["hidden_width"], -1)
    return MlpModel(w, np.array(d["x_mean"], float), np.array(d["x_scale"], float), d["y_mean"], d["y_scale"],
                    d["hidden_width"], list(d["losses"]))


_WRITERS = [
    (GarchFit, _garch_to),
    (BekkFit, _bekk_to),
    (LinearModel, _linear_to),
    (TreeEnsemble, _trees_to),
    (KnnModel, _knn_to),
    (MlpModel, _mlp_to),
]
_READERS = {"garch": _garch_from, "bekk": _bekk_from, "linear": _linear_from,
            "tree_ensemble": _trees_from, "knn": _knn_from, "mlp": _mlp_from}


def to_artifact(model: Any, model_id: str = "", metadata: Optional[dict] = None) -> dict:
    for cls, writer in _WRITERS:
        if isinstance(model, cls):
            kind, params = writer(model)
            return {"format": FORMAT, "version": VERSION, "model_id": model_id or kind, "kind": kind,
                    "params": params, "metadata": dict(metadata or {})}
    raise SerializationError(f"cannot serialize objects of type {type(model).__name__}")


def from_artifact(doc: dict) -> Any:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise SerializationError(f"not an {FORMAT} document")
    if doc.get("version") != VERSION:
        raise SerializationError(
            f"artifact version {doc.get('version')!r} is not supported; this reader expects version {VERSION}"
        )
    kind = doc.get("kind")
    if kind not in _READERS:
        raise SerializationError(f"unknown model kind {kind!r}")
    try:
        return _READERS[kind](doc["params"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"malformed {kind} artifact: {exc}") from None


def dumps(model: Any, model_id: str = "", metadata: Optional[dict] = None) -> str:
    return json.dumps(to_artifact(model, model_id, metadata), sort_keys=True, indent=1)


def _parse(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise SerializationError(f"invalid JSON at byte offset {offset}: {exc.msg}") from None


def loads(text: str | bytes) -> Any:
    """Model from a JSON document (use :func:`load_artifact` for the metadata)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return from_artifact(_parse(text))


def save(model: Any, path: str | Path, model_id: str = "", metadata: Optional[dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(model, model_id, metadata) + "\n")
    return path


def load_artifact(path: str | Path) -> dict:
    """Raw document (validated for format and version)."""
    doc = _parse(Path(path).read_bytes().decode("utf-8"))
    from_artifact(doc)
    return doc


def load(path: str | Path) -> Any:
    return loads(Path(path).read_bytes())
