"""Run configuration: JSON schema, validation and seed splitting."""
from __future__ import annotations

import json
import os
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from energyvol.harness import BacktestConfig
from energyvol.ingest import TRANSFORM_TAGS
from energyvol.mlmodels import MODEL_KINDS

__all__ = ["ConfigError", "RunConfig", "CONFIG_SCHEMA", "load_config", "parse_config", "sub_seed",
           "OUTPUT_ENV", "default_output_dir"]

OUTPUT_ENV = "ENERGYVOL_OUTPUT"

_MODEL = {
    "type": "object",
    "required": ["id", "family"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "family": {"enum": ["garch", "bekk", "ml", "constant"]},
        "kind": {"type": "string"},
        "exogenous": {"type": "array", "items": {"type": "string"}},
        "columns": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "hyper": {"type": "object"},
        "tune": {"type": "boolean"},
        "lags": {"type": "integer", "minimum": 1},
        "value": {"type": "number"},
        "warm_start": {"type": "boolean"},
    },
    "allOf": [
        {"if": {"properties": {"family": {"const": "ml"}}},
         "then": {"required": ["kind"], "properties": {"kind": {"enum": list(MODEL_KINDS)}}}},
        {"if": {"properties": {"family": {"const": "garch"}}},
         "then": {"properties": {"kind": {"enum": ["GARCH11", "GARCH", "GJR", "GJR-GARCH", "EGARCH"]}}}},
        {"if": {"properties": {"family": {"const": "constant"}}}, "then": {"required": ["value"]}},
    ],
}

CONFIG_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "energyvol run configuration",
    "type": "object",
    "required": ["data", "commodities", "models"],
    "additionalProperties": False,
    "properties": {
        "data": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["path"],
                "additionalProperties": False,
                "properties": {
                    "path": {"type": "string"},
                    "columns": {"type": "object", "additionalProperties": {"type": "string"}},
                    "frequencies": {"type": "object",
                                    "additionalProperties": {"enum": ["daily", "weekly", "monthly"]}},
                },
            },
        },
        "transforms": {"type": "object", "additionalProperties": {"enum": list(TRANSFORM_TAGS)}},
        "nonpositive": {"enum": ["reject", "arcsinh"]},
        "commodities": {"type": "array", "minItems": 1, "items": {"type": "string"}, "uniqueItems": True},
        "exogenous": {"type": "array", "items": {"type": "string"}, "uniqueItems": True},
        "models": {"type": "array", "minItems": 1, "items": _MODEL},
        "backtest": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "in_sample_length": {"type": "integer", "minimum": 1},
                "out_of_sample_length": {"type": "integer", "minimum": 1},
                "reestimation_period": {"type": "integer", "minimum": 1},
                "volatility_floor": {"type": "number", "minimum": 0},
                "scale": {"enum": ["variance", "volatility"]},
            },
        },
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lags": {"type": "integer", "minimum": 1},
                "adf_max_lag": {"type": "integer", "minimum": 0},
            },
        },
        "explain": {"type": "boolean"},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists one message per offending field."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class RunConfig:
    data: list[dict]
    commodities: list[str]
    models: list[dict]
    transforms: dict[str, str] = field(default_factory=dict)
    nonpositive: str = "reject"
    exogenous: Optional[list[str]] = None
    backtest: Optional[BacktestConfig] = None
    diagnostic_lags: int = 40
    adf_max_lag: int = 10
    explain: bool = True
    output_dir: Optional[str] = None
    seed: int = 0
    base_dir: Path = Path(".")

    def data_path(self, entry: dict) -> Path:
        p = Path(entry["path"])
        return p if p.is_absolute() else self.base_dir / p


def _field(path) -> str:
    out = "$"
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


def parse_config(doc: Any, base_dir: Path | str = ".") -> RunConfig:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError([f"{_field(e.absolute_path)}: {e.message}" for e in errors])
    ids = [m["id"] for m in doc["models"]]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        raise ConfigError([f"$.models: duplicate model id {d!r}" for d in dup])
    bt = None
    if "backtest" in doc:
        try:
            bt = BacktestConfig(**doc["backtest"])
        except ValueError as exc:
            raise ConfigError([f"$.backtest: {exc}"]) from None
    diag = doc.get("diagnostics", {})
    return RunConfig(
        data=list(doc["data"]),
        commodities=list(doc["commodities"]),
        models=list(doc["models"]),
        transforms=dict(doc.get("transforms", {})),
        nonpositive=doc.get("nonpositive", "reject"),
        exogenous=doc.get("exogenous"),
        backtest=bt,
        diagnostic_lags=diag.get("lags", 40),
        adf_max_lag=diag.get("adf_max_lag", 10),
        explain=doc.get("explain", True),
        output_dir=doc.get("output_dir"),
        seed=doc.get("seed", 0),
        base_dir=Path(base_dir),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    return parse_config(doc, path.parent)


def sub_seed(seed: int, name: str) -> int:
    """Seed for one model: ``SeedSequence(seed, spawn_key=(crc32(name),))``.

    Each model's stream depends only on the global seed and its own name, so
    adding or removing models leaves the others unchanged.
    """
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(name.encode("utf-8")),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "energyvol_out"))
